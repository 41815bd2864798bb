// Per-slot taggers: the description-conditioned concept tagger (CT) and its
// single-BiLSTM simplification (BT). Each call sees one slot and emits a
// B/I/O distribution per token.
//
//   CT: BiLSTM(x) ++ mean(D) -> FNN -> BiLSTM -> softmax(3)
//   BT: BiLSTM(x) ++ mean(D) -> FNN -> softmax(3)

#ifndef OPENSLOT_BASELINES_HPP
#define OPENSLOT_BASELINES_HPP

#include <span>
#include <string>
#include <vector>

#include "openslot/context_encoder.hpp"
#include "openslot/slot_encoder.hpp"
#include "openslot/types.hpp"

namespace openslot {

enum class TaggerKind { kConcept, kBiLstm };

class ConceptTagger {
 public:
  ConceptTagger(TaggerKind kind, ModelDims dims, const Vocabulary& vocab);

  void InitParams(ParamStore& params, Rng& rng) const;

  // [n, 3] logits, columns ordered B, I, O.
  Var Logits(Graph& graph, const ParamStore& params,
             std::span<const std::size_t> token_ids,
             const SlotSchema& slot) const;

  // Summed (not averaged) token cross-entropy against `gold`.
  Var CrossEntropy(Graph& graph, const ParamStore& params,
                   std::span<const std::size_t> token_ids,
                   const SlotSchema& slot,
                   std::span<const IobTag> gold) const;

  // Row-normalized [n, 3].
  Array Probabilities(const ParamStore& params,
                      std::span<const std::size_t> token_ids,
                      const SlotSchema& slot) const;

  TaggerKind kind() const { return kind_; }

 private:
  TaggerKind kind_;
  ModelDims dims_;
  SlotEncoder descriptions_;
  BiLstm first_;
  BiLstm second_;
};

// Per-token argmax (ties prefer O, then B), then maximal B I* runs; an I
// with nothing to continue opens a span.
std::vector<SlotSpan> DecodePerSlot(const Array& probabilities,
                                    const std::string& slot);

// Gold B/I/O tags of one slot; spans of other slots read as O.
std::vector<IobTag> SlotTags(const Utterance& utterance,
                             const std::string& slot);

}  // namespace openslot

#endif  // OPENSLOT_BASELINES_HPP
