#include "openslot/gradcheck.hpp"

#include "openslot/dataset.hpp"
#include "openslot/layers.hpp"

namespace openslot {

FiniteDiffResult RunGradCheck(ModelKind kind, std::uint64_t seed,
                              const GradCheckOptions& options) {
  if (options.tokens == 0 || options.slots == 0) {
    throw Error("gradcheck needs at least one token and one slot");
  }
  Rng rng(seed);
  constexpr std::size_t kWords = 6;
  auto word = [&] { return "w" + std::to_string(rng.Below(kWords)); };

  std::vector<SlotSchema> schemas;
  for (std::size_t s = 0; s < options.slots; ++s) {
    schemas.push_back(SlotSchema{"slot" + std::to_string(s), {word(), word()}});
  }
  Utterance utterance;
  utterance.id = "gradcheck";
  for (std::size_t i = 0; i < options.tokens; ++i) utterance.tokens.push_back(word());

  const std::vector<Utterance> corpus{utterance};
  Model model = CreateModel(kind, options.dims, BuildVocabulary(corpus, schemas),
                            schemas, rng);
  if (options.param_range > 0.0) {
    for (const auto& [name, param] : model.params.entries()) {
      model.params.Mutable(name) = UniformArray(param.value.shape(),
                                                options.param_range, rng);
    }
  }
  const std::vector<std::size_t> ids = model.vocab.Indices(utterance.tokens);

  LossBuilder loss;
  if (kind == ModelKind::kEcrf) {
    const LabelSet labels(schemas);
    LabelSequence gold(ids.size());
    for (std::size_t& y : gold) y = rng.Below(labels.size());
    loss = [=, &model](Graph& graph, const ParamStore& params) {
      return ElasticCrf(model.dims, model.vocab)
          .NegLogLikelihood(graph, params, ids, gold, labels, false);
    };
  } else {
    std::vector<std::vector<IobTag>> gold(schemas.size());
    for (auto& tags : gold) {
      for (std::size_t i = 0; i < ids.size(); ++i) {
        tags.push_back(static_cast<IobTag>(rng.Below(kNumTags)));
      }
    }
    const TaggerKind tagger = kind == ModelKind::kConceptTagger
                                  ? TaggerKind::kConcept
                                  : TaggerKind::kBiLstm;
    loss = [=, &model](Graph& graph, const ParamStore& params) {
      const ConceptTagger model_fn(tagger, model.dims, model.vocab);
      std::vector<Var> parts;
      for (std::size_t s = 0; s < schemas.size(); ++s) {
        parts.push_back(model_fn.CrossEntropy(graph, params, ids, schemas[s], gold[s]));
      }
      Var total = parts[0];
      for (std::size_t s = 1; s < parts.size(); ++s) total = Add(total, parts[s]);
      return total;
    };
  }
  return FiniteDiffCheck(loss, model.params, options.finite_diff);
}

}  // namespace openslot
