#ifndef OPENSLOT_TYPES_HPP
#define OPENSLOT_TYPES_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace openslot {

// Token range [start, end) assigned to a slot.
struct SlotSpan {
  std::string slot;
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const SlotSpan&, const SlotSpan&) = default;
  friend auto operator<=>(const SlotSpan&, const SlotSpan&) = default;
};

struct Utterance {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<SlotSpan> spans;
  std::string domain;
};

// A slot name plus its natural-language description, already lowercased
// and tokenized.
struct SlotSchema {
  std::string name;
  std::vector<std::string> description;

  friend bool operator==(const SlotSchema&, const SlotSchema&) = default;
};

// Value string of a span: lowercased tokens joined by single spaces.
std::string SpanValue(const Utterance& utterance, const SlotSpan& span);

std::string Lowercase(std::string text);
std::vector<std::string> SplitWhitespace(const std::string& text);

}  // namespace openslot

#endif  // OPENSLOT_TYPES_HPP
