#include "openslot/training.hpp"

#include <cmath>
#include <unordered_map>

#include "openslot/dataset.hpp"

namespace openslot {

using nlohmann::json;

json ToJson(const TrainConfig& c) {
  return json{{"learning_rate", c.learning_rate},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"epsilon", c.epsilon},
              {"pretrain_steps", c.pretrain_steps},
              {"ecrf_batch", c.ecrf_batch},
              {"baseline_batch", c.baseline_batch},
              {"oversample_ratio", c.oversample_ratio},
              {"max_epochs", c.max_epochs},
              {"patience", c.patience},
              {"seed", c.seed},
              {"freeze_embeddings", c.freeze_embeddings},
              {"unk_probability", c.unk_probability},
              {"embed_dim", c.dims.embed},
              {"label_dim", c.dims.hidden},
              {"fc_hidden", c.dims.fc_hidden}};
}

TrainConfig TrainConfigFromJson(const json& doc, TrainConfig c) {
  if (!doc.is_object()) throw Error("training config must be a JSON object");
  try {
    c.learning_rate = doc.value("learning_rate", c.learning_rate);
    c.beta1 = doc.value("beta1", c.beta1);
    c.beta2 = doc.value("beta2", c.beta2);
    c.epsilon = doc.value("epsilon", c.epsilon);
    c.pretrain_steps = doc.value("pretrain_steps", c.pretrain_steps);
    c.ecrf_batch = doc.value("ecrf_batch", c.ecrf_batch);
    c.baseline_batch = doc.value("baseline_batch", c.baseline_batch);
    c.oversample_ratio = doc.value("oversample_ratio", c.oversample_ratio);
    c.max_epochs = doc.value("max_epochs", c.max_epochs);
    c.patience = doc.value("patience", c.patience);
    c.seed = doc.value("seed", c.seed);
    c.freeze_embeddings = doc.value("freeze_embeddings", c.freeze_embeddings);
    c.unk_probability = doc.value("unk_probability", c.unk_probability);
    c.dims.embed = doc.value("embed_dim", c.dims.embed);
    c.dims.hidden = doc.value("label_dim", c.dims.hidden);
    c.dims.fc_hidden = doc.value("fc_hidden", c.dims.fc_hidden);
  } catch (const json::exception& e) {
    throw Error(std::string("training config: ") + e.what());
  }
  return c;
}

json ToJson(const EpochRecord& r) {
  return json{{"epoch", r.epoch},
              {"steps", r.steps},
              {"mean_loss", r.mean_loss},
              {"validation_accuracy", r.validation_accuracy
                                          ? json(*r.validation_accuracy)
                                          : json(nullptr)},
              {"edges_masked", r.edges_masked}};
}

void AdamStep(ParamStore& params, const Gradients& grads, AdamState& state,
              const TrainConfig& config) {
  for (const auto& [name, param] : params.entries()) {
    if (param.trainable && !grads.count(name)) {
      throw Error("adam: missing gradient for parameter '" + name + "'");
    }
  }
  for (const auto& [name, grad] : grads) {
    if (!params.Contains(name)) throw Error("adam: gradient for unknown parameter '" + name + "'");
    if (grad.shape() != params.Get(name).shape()) {
      throw Error("adam: gradient shape " + ShapeString(grad.shape()) +
                  " != parameter shape " + ShapeString(params.Get(name).shape()) +
                  " for '" + name + "'");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(config.beta1, t);
  const double correct2 = 1.0 - std::pow(config.beta2, t);
  for (const auto& [name, grad] : grads) {
    Array& value = params.Mutable(name);
    auto [m_it, m_new] = state.first.try_emplace(name, value.shape());
    auto [v_it, v_new] = state.second.try_emplace(name, value.shape());
    auto m = m_it->second.data();
    auto v = v_it->second.data();
    auto g = grad.data();
    auto p = value.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correct1;
      const double v_hat = v[i] / correct2;
      p[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

double TotalAccuracy(const Model& model, std::span<const Utterance> utterances,
                     std::span<const SlotSchema> schemas) {
  const auto predictions = Predict(model, utterances, schemas);
  const MetricReport report = ScoreValues(predictions, utterances, {});
  return report.total.accuracy().value_or(0.0);
}

namespace {

constexpr std::uint64_t kTrainStreamOffset = 0x9E3779B97F4A7C15ULL;

struct Loop {
  std::function<std::vector<std::size_t>(Rng&)> epoch_order;
  std::size_t batch = 1;
  // Mean loss of one minibatch.
  std::function<Var(Graph&, const ParamStore&, std::span<const std::size_t>,
                    bool masked, Rng&)>
      batch_loss;
  bool pretrain = false;
};

TrainResult RunLoop(Model model, const Loop& loop, const TrainData& data,
                    const TrainConfig& config, const TrainHooks& hooks) {
  if (data.validation.empty()) throw Error("training needs a non-empty validation set");
  if (loop.batch == 0) throw Error("minibatch size must be positive");
  Rng rng(config.seed + kTrainStreamOffset);
  AdamState state;
  TrainResult result;
  bool have_best = false;
  std::size_t since_best = 0;
  auto masked_now = [&] { return loop.pretrain && state.step < config.pretrain_steps; };

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const std::vector<std::size_t> order = loop.epoch_order(rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    try {
      for (std::size_t begin = 0; begin < order.size(); begin += loop.batch) {
        const std::size_t end = std::min(order.size(), begin + loop.batch);
        Graph graph;
        Var loss = loop.batch_loss(
            graph, model.params,
            std::span<const std::size_t>(order.data() + begin, end - begin),
            masked_now(), rng);
        const double value = loss.value()[0];
        Gradients grads = graph.Backward(loss, model.params);
        for (const auto& [name, g] : grads) {
          if (!g.AllFinite()) throw Error("non-finite gradient for '" + name + "'");
        }
        if (hooks.on_step) hooks.on_step(state.step, grads, value);
        AdamStep(model.params, grads, state, config);
        loss_sum += value;
        ++batches;
      }
    } catch (const Error& e) {
      result.aborted = true;
      result.diagnostic = "epoch " + std::to_string(epoch) + ", step " +
                          std::to_string(state.step) + ": " + e.what();
      break;
    }
    model.edge_mask = masked_now();
    EpochRecord record;
    record.epoch = epoch;
    record.steps = state.step;
    record.mean_loss = batches ? loss_sum / static_cast<double>(batches) : 0.0;
    record.edges_masked = model.edge_mask;
    const double accuracy = TotalAccuracy(model, data.validation, data.schemas);
    record.validation_accuracy = accuracy;
    result.history.push_back(record);
    if (hooks.on_epoch) hooks.on_epoch(record);

    if (!have_best || accuracy > result.best_validation) {
      result.model = model;
      result.best_validation = accuracy;
      result.best_epoch = epoch;
      have_best = true;
      since_best = 0;
    } else if (!model.edge_mask) {
      // Patience only runs once the edge term is live.
      ++since_best;
    }
    if (since_best >= config.patience) break;
  }
  if (!have_best) {
    result.model = std::move(model);
  }
  return result;
}

std::vector<SlotSchema> VocabularySchemas(const TrainData& data) {
  std::vector<SlotSchema> all(data.schemas.begin(), data.schemas.end());
  all.insert(all.end(), data.extra_schemas.begin(), data.extra_schemas.end());
  return all;
}

// Token ids per utterance plus which ids occur exactly once in training.
struct Encoded {
  std::vector<std::vector<std::size_t>> ids;
  std::vector<bool> singleton;
};

Encoded EncodeTokens(const Vocabulary& vocab, std::span<const Utterance> train) {
  Encoded out;
  std::vector<std::size_t> counts(vocab.size(), 0);
  for (const Utterance& u : train) {
    out.ids.push_back(vocab.Indices(u.tokens));
    for (std::size_t id : out.ids.back()) ++counts[id];
  }
  out.singleton.resize(vocab.size());
  for (std::size_t i = 0; i < counts.size(); ++i) out.singleton[i] = counts[i] == 1;
  return out;
}

std::vector<std::size_t> WithUnknowns(const Encoded& enc, std::size_t index,
                                      double probability, Rng& rng) {
  std::vector<std::size_t> ids = enc.ids[index];
  if (probability <= 0.0) return ids;
  for (std::size_t& id : ids) {
    if (enc.singleton[id] && rng.Bernoulli(probability)) id = Vocabulary::kUnk;
  }
  return ids;
}

}  // namespace

TrainResult TrainEcrf(const TrainData& data, const TrainConfig& config,
                      const TrainHooks& hooks) {
  if (data.train.empty()) throw Error("training set is empty");
  if (config.ecrf_batch == 0) throw Error("minibatch size must be positive");
  const std::vector<SlotSchema> vocab_schemas = VocabularySchemas(data);
  Rng init(config.seed);
  Model model = CreateModel(ModelKind::kEcrf, config.dims,
                            BuildVocabulary(data.train, vocab_schemas),
                            std::vector<SlotSchema>(data.schemas.begin(), data.schemas.end()),
                            init, data.embeddings_path, config.freeze_embeddings);
  const LabelSet labels(model.schemas);
  const Encoded encoded = EncodeTokens(model.vocab, data.train);
  std::vector<LabelSequence> gold;
  for (const Utterance& u : data.train) gold.push_back(ToIob(u, labels));

  // The labeler keeps a pointer to the vocabulary, so it must be built
  // against a copy that outlives the loop (the loop copies `model`).
  const Vocabulary vocab = model.vocab;
  const ElasticCrf crf(config.dims, vocab);
  Loop loop;
  loop.batch = config.ecrf_batch;
  loop.pretrain = true;
  loop.epoch_order = [n = data.train.size()](Rng& rng) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.Shuffle(order);
    return order;
  };
  loop.batch_loss = [&](Graph& graph, const ParamStore& params,
                        std::span<const std::size_t> batch, bool masked,
                        Rng& rng) {
    std::optional<Var> total;
    for (std::size_t index : batch) {
      const auto ids = WithUnknowns(encoded, index, config.unk_probability, rng);
      Var nll = crf.NegLogLikelihood(graph, params, ids, gold[index], labels, masked);
      total = total ? Add(*total, nll) : nll;
    }
    return batch.size() == 1 ? *total
                             : Scale(*total, 1.0 / static_cast<double>(batch.size()));
  };
  return RunLoop(std::move(model), loop, data, config, hooks);
}

TrainResult TrainBaseline(ModelKind kind, const TrainData& data,
                          const TrainConfig& config, const TrainHooks& hooks) {
  if (kind == ModelKind::kEcrf) throw Error("TrainBaseline: not a baseline model");
  if (data.train.empty()) throw Error("training set is empty");
  if (data.schemas.empty()) throw Error("training needs at least one slot");
  const std::vector<SlotSchema> vocab_schemas = VocabularySchemas(data);
  Rng init(config.seed);
  Model model = CreateModel(kind, config.dims,
                            BuildVocabulary(data.train, vocab_schemas),
                            std::vector<SlotSchema>(data.schemas.begin(), data.schemas.end()),
                            init, data.embeddings_path, config.freeze_embeddings);
  const Encoded encoded = EncodeTokens(model.vocab, data.train);

  struct Instance {
    std::size_t utterance;
    std::size_t slot;
    std::vector<IobTag> tags;
  };
  std::vector<Instance> instances;
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
  for (std::size_t u = 0; u < data.train.size(); ++u) {
    for (std::size_t s = 0; s < model.schemas.size(); ++s) {
      Instance inst{u, s, SlotTags(data.train[u], model.schemas[s].name)};
      const bool positive = std::any_of(inst.tags.begin(), inst.tags.end(),
                                        [](IobTag t) { return t != IobTag::kO; });
      (positive ? positives : negatives).push_back(instances.size());
      instances.push_back(std::move(inst));
    }
  }

  const Vocabulary vocab = model.vocab;
  const std::vector<SlotSchema> schemas = model.schemas;
  const ConceptTagger tagger(kind == ModelKind::kConceptTagger ? TaggerKind::kConcept
                                                               : TaggerKind::kBiLstm,
                             config.dims, vocab);
  Loop loop;
  loop.batch = config.baseline_batch;
  loop.epoch_order = [&](Rng& rng) {
    std::vector<std::size_t> order = negatives;
    const auto target = static_cast<std::size_t>(
        std::ceil(config.oversample_ratio * static_cast<double>(negatives.size())));
    if (!positives.empty() && positives.size() < target) {
      for (std::size_t r = 0; r < target / positives.size(); ++r) {
        order.insert(order.end(), positives.begin(), positives.end());
      }
      std::vector<std::size_t> extra = positives;
      rng.Shuffle(extra);
      extra.resize(target % positives.size());
      order.insert(order.end(), extra.begin(), extra.end());
    } else {
      order.insert(order.end(), positives.begin(), positives.end());
    }
    rng.Shuffle(order);
    return order;
  };
  loop.batch_loss = [&](Graph& graph, const ParamStore& params,
                        std::span<const std::size_t> batch, bool, Rng& rng) {
    std::optional<Var> total;
    std::size_t tokens = 0;
    for (std::size_t index : batch) {
      const Instance& inst = instances[index];
      const auto ids = WithUnknowns(encoded, inst.utterance, config.unk_probability, rng);
      Var ce = tagger.CrossEntropy(graph, params, ids, schemas[inst.slot], inst.tags);
      total = total ? Add(*total, ce) : ce;
      tokens += ids.size();
    }
    return Scale(*total, 1.0 / static_cast<double>(tokens));
  };
  return RunLoop(std::move(model), loop, data, config, hooks);
}

TrainResult Train(ModelKind kind, const TrainData& data,
                  const TrainConfig& config, const TrainHooks& hooks) {
  return kind == ModelKind::kEcrf ? TrainEcrf(data, config, hooks)
                                  : TrainBaseline(kind, data, config, hooks);
}

}  // namespace openslot
