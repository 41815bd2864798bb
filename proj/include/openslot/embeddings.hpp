#ifndef OPENSLOT_EMBEDDINGS_HPP
#define OPENSLOT_EMBEDDINGS_HPP

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "openslot/autodiff.hpp"
#include "openslot/rng.hpp"
#include "openslot/types.hpp"

namespace openslot {

enum class IobTag : std::size_t { kB = 0, kI = 1, kO = 2 };

inline constexpr std::size_t kNumTags = 3;
inline constexpr double kEmbeddingInitRange = 0.1;

inline constexpr const char* kWordTableParam = "emb.word";
inline constexpr const char* kTagTableParam = "emb.tag";

class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  // Only the reserved entries.
  Vocabulary();
  // Restores an index order, e.g. from a checkpoint; the reserved tokens
  // must sit at their reserved indices.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  bool Contains(std::string_view token) const;
  // Unknown strings map to kUnk.
  std::size_t Index(std::string_view token) const;
  const std::string& Token(std::size_t index) const { return tokens_.at(index); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::vector<std::size_t> Indices(std::span<const std::string> tokens) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Reserved tokens first, then every corpus and description token in
// lexicographic order.
Vocabulary BuildVocabulary(std::span<const Utterance> corpus,
                           std::span<const SlotSchema> descriptions);

struct EmbeddingTables {
  Array word;  // [vocab, dim]
  Array tag;   // [3, dim], rows B, I, O
};

EmbeddingTables RandomTables(const Vocabulary& vocab, std::size_t dim, Rng& rng);

// Reads "token v1 ... v_dim" lines. Tokens found in `vocab` get the file's
// row; every other row, and the tag table, is drawn uniformly from
// [-0.1, 0.1].
EmbeddingTables LoadPretrained(const std::string& path, const Vocabulary& vocab,
                               std::size_t dim, Rng& rng);

void InstallTables(ParamStore& params, EmbeddingTables tables,
                   bool freeze_words = false);

// [n, dim] rows of the word table; differentiable w.r.t. the table.
Var EmbedTokens(Graph& graph, const ParamStore& params,
                std::span<const std::size_t> token_ids);

Var EmbedTag(Graph& graph, const ParamStore& params, IobTag tag);

}  // namespace openslot

#endif  // OPENSLOT_EMBEDDINGS_HPP
