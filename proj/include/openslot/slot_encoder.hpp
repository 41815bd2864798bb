// Label vectors e(y) for the combined label set {O} + {B+D_i, I+D_i}:
//
//   e(B+D_i) = FC(mean(D_i) ++ emb(B))
//   e(I+D_i) = FC(mean(D_i) ++ emb(I))
//   e(O)     = FC(zeros ++ emb(O))
//
// with FC(x) = tanh(x W1 + b1) W2 + b2.

#ifndef OPENSLOT_SLOT_ENCODER_HPP
#define OPENSLOT_SLOT_ENCODER_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "openslot/autodiff.hpp"
#include "openslot/embeddings.hpp"
#include "openslot/layers.hpp"
#include "openslot/types.hpp"

namespace openslot {

struct ModelDims {
  std::size_t embed = 50;
  // Concatenated BiLSTM output; also the label-vector size.
  std::size_t hidden = 100;
  std::size_t fc_hidden = 100;

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

struct Label {
  IobTag tag = IobTag::kO;
  std::size_t slot = 0;  // index into LabelSet::slots(); unused for O

  friend bool operator==(const Label&, const Label&) = default;
};

// Index 0 is O; slot i contributes B at 2i+1 and I at 2i+2.
class LabelSet {
 public:
  explicit LabelSet(std::vector<SlotSchema> slots);

  std::size_t size() const { return labels_.size(); }
  const std::vector<SlotSchema>& slots() const { return slots_; }
  const Label& operator[](std::size_t i) const { return labels_.at(i); }

  std::optional<std::size_t> SlotIndex(const std::string& name) const;
  std::size_t BeginLabel(std::size_t slot) const { return 2 * slot + 1; }
  std::size_t InsideLabel(std::size_t slot) const { return 2 * slot + 2; }
  std::string LabelName(std::size_t i) const;

 private:
  std::vector<SlotSchema> slots_;
  std::vector<Label> labels_;
};

// Description text is lowercased and split on whitespace.
SlotSchema MakeSchema(std::string name, const std::string& description);

// JSON list of {"name": ..., "description": ...}.
std::vector<SlotSchema> LoadSchemas(const std::string& path);
std::vector<SlotSchema> ParseSchemas(const std::string& json_text);

inline constexpr const char* kLabelFcPrefix = "label_fc";

class SlotEncoder {
 public:
  SlotEncoder(ModelDims dims, const Vocabulary& vocab)
      : dims_(dims), vocab_(&vocab) {}

  void InitParams(ParamStore& params, Rng& rng) const;

  // Mean of the description's word rows, [1, embed].
  Var EncodeDescription(Graph& graph, const ParamStore& params,
                        const SlotSchema& schema) const;
  // [1, hidden]
  Var EncodeLabel(Graph& graph, const ParamStore& params,
                  const LabelSet& labels, std::size_t label) const;
  // [|S|, hidden], row j equal to EncodeLabel(j).
  Var EncodeLabelMatrix(Graph& graph, const ParamStore& params,
                        const LabelSet& labels) const;

 private:
  Var LabelFromDescription(Graph& graph, const ParamStore& params,
                           std::optional<Var> description, IobTag tag) const;

  ModelDims dims_;
  const Vocabulary* vocab_;
};

}  // namespace openslot

#endif  // OPENSLOT_SLOT_ENCODER_HPP
