#ifndef OPENSLOT_TRAINING_HPP
#define OPENSLOT_TRAINING_HPP

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "openslot/model.hpp"

namespace openslot {

struct TrainConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // eCRF: optimizer steps trained with the edge term masked.
  std::size_t pretrain_steps = 2000;
  std::size_t ecrf_batch = 1;
  std::size_t baseline_batch = 10;
  // Positives are repeated until positives : negatives reaches this.
  double oversample_ratio = 1.0;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  std::uint64_t seed = 0;
  bool freeze_embeddings = false;
  // Training tokens seen once are swapped for UNK with this probability,
  // per occurrence per epoch.
  double unk_probability = 0.5;
  ModelDims dims;
};

nlohmann::json ToJson(const TrainConfig& config);
// Missing keys keep their defaults.
TrainConfig TrainConfigFromJson(const nlohmann::json& doc,
                                TrainConfig defaults = {});

struct AdamState {
  std::size_t step = 0;
  std::map<std::string, Array> first;
  std::map<std::string, Array> second;
};

// Bias-corrected Adam over every gradient entry. Every trainable parameter
// needs a gradient.
void AdamStep(ParamStore& params, const Gradients& grads, AdamState& state,
              const TrainConfig& config);

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t steps = 0;  // optimizer steps completed so far
  double mean_loss = 0.0;
  std::optional<double> validation_accuracy;
  bool edges_masked = false;
};

nlohmann::json ToJson(const EpochRecord& record);

struct TrainResult {
  Model model;  // best checkpoint by validation accuracy
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_validation = 0.0;
  bool aborted = false;
  std::string diagnostic;
};

struct TrainHooks {
  // Called after each backward pass, before the update; `step` counts
  // completed optimizer steps (0-based index of this step).
  std::function<void(std::size_t step, const Gradients& grads, double loss)>
      on_step;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainData {
  std::span<const Utterance> train;
  std::span<const Utterance> validation;
  std::span<const SlotSchema> schemas;
  // Extra description text that should be in the vocabulary, e.g. slots
  // of a target domain.
  std::span<const SlotSchema> extra_schemas = {};
  std::string embeddings_path = {};
};

TrainResult TrainEcrf(const TrainData& data, const TrainConfig& config,
                      const TrainHooks& hooks = {});

TrainResult TrainBaseline(ModelKind kind, const TrainData& data,
                          const TrainConfig& config,
                          const TrainHooks& hooks = {});

TrainResult Train(ModelKind kind, const TrainData& data,
                  const TrainConfig& config, const TrainHooks& hooks = {});

// Total exact-match accuracy of `model` on `utterances`; 0 without gold.
double TotalAccuracy(const Model& model, std::span<const Utterance> utterances,
                     std::span<const SlotSchema> schemas);

}  // namespace openslot

#endif  // OPENSLOT_TRAINING_HPP
