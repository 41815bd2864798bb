#ifndef OPENSLOT_MODEL_HPP
#define OPENSLOT_MODEL_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "openslot/baselines.hpp"
#include "openslot/ecrf.hpp"
#include "openslot/evaluation.hpp"

namespace openslot {

enum class ModelKind { kEcrf, kConceptTagger, kBiLstmTagger };

std::string ToString(ModelKind kind);
ModelKind ParseModelKind(const std::string& text);

// Everything needed to run a trained model on new utterances.
struct Model {
  ModelKind kind = ModelKind::kEcrf;
  ModelDims dims;
  Vocabulary vocab;
  ParamStore params;
  // Slots seen in training; prediction may use any other schema list.
  std::vector<SlotSchema> schemas;
  // eCRF only: the edge term is still masked (pre-training phase).
  bool edge_mask = false;
};

// Fresh parameters drawn from `rng`: embeddings first (from
// `embeddings_path` when given), then the model's own layers.
Model CreateModel(ModelKind kind, const ModelDims& dims, Vocabulary vocab,
                  std::vector<SlotSchema> schemas, Rng& rng,
                  const std::string& embeddings_path = "",
                  bool freeze_embeddings = false);

// Spans for every slot in `schemas` on each utterance.
std::vector<Prediction> Predict(const Model& model,
                                std::span<const Utterance> utterances,
                                std::span<const SlotSchema> schemas);

std::vector<SlotSpan> PredictOne(const Model& model, const Utterance& utterance,
                                 const LabelSet& labels);

inline constexpr int kCheckpointFormatVersion = 1;

// {"format_version": 1, "model", "dims", "config", "schemas", "vocabulary",
//  "edge_mask", "params": {name: {"shape", "values", "trainable"}}}
nlohmann::json CheckpointJson(const Model& model, const nlohmann::json& config);
void WriteCheckpoint(const Model& model, const nlohmann::json& config,
                     const std::string& path);

struct LoadedCheckpoint {
  Model model;
  nlohmann::json config;
};

LoadedCheckpoint ReadCheckpoint(const std::string& path);
LoadedCheckpoint CheckpointFromJson(const nlohmann::json& doc);

nlohmann::json SchemasJson(std::span<const SlotSchema> schemas);

}  // namespace openslot

#endif  // OPENSLOT_MODEL_HPP
