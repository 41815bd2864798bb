#include "openslot/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "openslot/ecrf.hpp"
#include "openslot/layers.hpp"

namespace openslot {

namespace {

constexpr const char* kFnnPrefix = "fnn";
constexpr const char* kOutputPrefix = "out";
constexpr const char* kSecondContextPrefix = "ctx2";

}  // namespace

ConceptTagger::ConceptTagger(TaggerKind kind, ModelDims dims,
                             const Vocabulary& vocab)
    : kind_(kind),
      dims_(dims),
      descriptions_(dims, vocab),
      first_(MakeContextEncoder(dims, kContextPrefix, dims.embed)),
      second_(MakeContextEncoder(dims, kSecondContextPrefix, dims.hidden)) {}

void ConceptTagger::InitParams(ParamStore& params, Rng& rng) const {
  first_.InitParams(params, rng);
  InitFeedForward(params, kFnnPrefix, dims_.hidden + dims_.embed,
                  dims_.fc_hidden, dims_.hidden, rng);
  if (kind_ == TaggerKind::kConcept) second_.InitParams(params, rng);
  InitDense(params, kOutputPrefix, dims_.hidden, kNumTags, rng);
}

Var ConceptTagger::Logits(Graph& graph, const ParamStore& params,
                          std::span<const std::size_t> token_ids,
                          const SlotSchema& slot) const {
  Var features =
      first_.Encode(graph, params, EmbedTokens(graph, params, token_ids));
  Var description = descriptions_.EncodeDescription(graph, params, slot);
  Var joined = Concat(
      {features, RepeatRow(graph, description, token_ids.size())}, 1);
  Var mixed = FeedForward(graph, params, kFnnPrefix, joined);
  if (kind_ == TaggerKind::kConcept) mixed = second_.Encode(graph, params, mixed);
  return Dense(graph, params, kOutputPrefix, mixed);
}

Var ConceptTagger::CrossEntropy(Graph& graph, const ParamStore& params,
                                std::span<const std::size_t> token_ids,
                                const SlotSchema& slot,
                                std::span<const IobTag> gold) const {
  if (gold.size() != token_ids.size()) {
    throw Error("tag sequence length " + std::to_string(gold.size()) +
                " != utterance length " + std::to_string(token_ids.size()));
  }
  Var logits = Logits(graph, params, token_ids, slot);
  Array picks({gold.size(), kNumTags});
  for (std::size_t i = 0; i < gold.size(); ++i) {
    picks.at(i, static_cast<std::size_t>(gold[i])) = 1.0;
  }
  Var normalizer = Sum(LogSumExp(logits, 1));
  Var gold_score = Sum(Mul(logits, graph.Constant(std::move(picks))));
  return Add(normalizer, Scale(gold_score, -1.0));
}

Array ConceptTagger::Probabilities(const ParamStore& params,
                                   std::span<const std::size_t> token_ids,
                                   const SlotSchema& slot) const {
  Graph graph;
  Array probs = Logits(graph, params, token_ids, slot).value();
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    double peak = probs.at(i, 0);
    for (std::size_t k = 1; k < kNumTags; ++k) peak = std::max(peak, probs.at(i, k));
    double total = 0.0;
    for (std::size_t k = 0; k < kNumTags; ++k) {
      probs.at(i, k) = std::exp(probs.at(i, k) - peak);
      total += probs.at(i, k);
    }
    for (std::size_t k = 0; k < kNumTags; ++k) probs.at(i, k) /= total;
  }
  return probs;
}

std::vector<SlotSpan> DecodePerSlot(const Array& probabilities,
                                    const std::string& slot) {
  if (probabilities.rank() != 2 || probabilities.cols() != kNumTags) {
    throw Error("per-slot decoding expects [n, 3] probabilities, got " +
                ShapeString(probabilities.shape()));
  }
  std::vector<SlotSpan> spans;
  bool open = false;
  for (std::size_t i = 0; i < probabilities.rows(); ++i) {
    const double b = probabilities.at(i, 0);
    const double in = probabilities.at(i, 1);
    const double o = probabilities.at(i, 2);
    IobTag tag = IobTag::kI;
    if (o >= b && o >= in) {
      tag = IobTag::kO;
    } else if (b >= in) {
      tag = IobTag::kB;
    }
    if (tag == IobTag::kO) {
      open = false;
    } else if (tag == IobTag::kB || !open) {
      spans.push_back(SlotSpan{slot, i, i + 1});
      open = true;
    } else {
      spans.back().end = i + 1;
    }
  }
  return spans;
}

std::vector<IobTag> SlotTags(const Utterance& utterance,
                             const std::string& slot) {
  std::vector<IobTag> tags(utterance.tokens.size(), IobTag::kO);
  for (const SlotSpan& span : utterance.spans) {
    if (span.slot != slot) continue;
    if (span.start >= span.end || span.end > tags.size()) {
      throw Error("utterance " + utterance.id + ": span out of range");
    }
    for (std::size_t i = span.start; i < span.end; ++i) {
      if (tags[i] != IobTag::kO) {
        throw Error("utterance " + utterance.id + ": overlapping spans for slot " + slot);
      }
      tags[i] = i == span.start ? IobTag::kB : IobTag::kI;
    }
  }
  return tags;
}

}  // namespace openslot
