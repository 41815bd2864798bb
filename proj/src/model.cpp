#include "openslot/model.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace openslot {

using nlohmann::json;

std::string ToString(ModelKind kind) {
  switch (kind) {
    case ModelKind::kEcrf: return "ecrf";
    case ModelKind::kConceptTagger: return "ct";
    case ModelKind::kBiLstmTagger: return "bt";
  }
  return "?";
}

ModelKind ParseModelKind(const std::string& text) {
  if (text == "ecrf") return ModelKind::kEcrf;
  if (text == "ct") return ModelKind::kConceptTagger;
  if (text == "bt") return ModelKind::kBiLstmTagger;
  throw Error("unknown model kind '" + text + "' (expected ecrf, ct or bt)");
}

namespace {

TaggerKind AsTagger(ModelKind kind) {
  return kind == ModelKind::kConceptTagger ? TaggerKind::kConcept
                                           : TaggerKind::kBiLstm;
}

}  // namespace

Model CreateModel(ModelKind kind, const ModelDims& dims, Vocabulary vocab,
                  std::vector<SlotSchema> schemas, Rng& rng,
                  const std::string& embeddings_path, bool freeze_embeddings) {
  Model model;
  model.kind = kind;
  model.dims = dims;
  model.vocab = std::move(vocab);
  model.schemas = std::move(schemas);
  EmbeddingTables tables =
      embeddings_path.empty()
          ? RandomTables(model.vocab, dims.embed, rng)
          : LoadPretrained(embeddings_path, model.vocab, dims.embed, rng);
  InstallTables(model.params, std::move(tables), freeze_embeddings);
  if (kind == ModelKind::kEcrf) {
    ElasticCrf(dims, model.vocab).InitParams(model.params, rng);
  } else {
    ConceptTagger(AsTagger(kind), dims, model.vocab).InitParams(model.params, rng);
  }
  return model;
}

std::vector<SlotSpan> PredictOne(const Model& model, const Utterance& utterance,
                                 const LabelSet& labels) {
  const std::vector<std::size_t> ids = model.vocab.Indices(utterance.tokens);
  std::vector<SlotSpan> spans;
  if (model.kind == ModelKind::kEcrf) {
    ElasticCrf crf(model.dims, model.vocab);
    spans = ExtractSpans(crf.Decode(model.params, ids, labels, model.edge_mask).labels,
                         labels);
  } else {
    ConceptTagger tagger(AsTagger(model.kind), model.dims, model.vocab);
    for (const SlotSchema& slot : labels.slots()) {
      auto found = DecodePerSlot(tagger.Probabilities(model.params, ids, slot),
                                 slot.name);
      spans.insert(spans.end(), found.begin(), found.end());
    }
    std::sort(spans.begin(), spans.end(), [](const SlotSpan& a, const SlotSpan& b) {
      return std::tie(a.start, a.end, a.slot) < std::tie(b.start, b.end, b.slot);
    });
  }
  return spans;
}

std::vector<Prediction> Predict(const Model& model,
                                std::span<const Utterance> utterances,
                                std::span<const SlotSchema> schemas) {
  const LabelSet labels(std::vector<SlotSchema>(schemas.begin(), schemas.end()));
  std::vector<Prediction> out;
  out.reserve(utterances.size());
  for (const Utterance& u : utterances) {
    out.push_back(Prediction{u.id, PredictOne(model, u, labels)});
  }
  return out;
}

json SchemasJson(std::span<const SlotSchema> schemas) {
  json out = json::array();
  for (const SlotSchema& s : schemas) {
    std::string description;
    for (std::size_t i = 0; i < s.description.size(); ++i) {
      if (i) description += ' ';
      description += s.description[i];
    }
    out.push_back(json{{"name", s.name}, {"description", description}});
  }
  return out;
}

json CheckpointJson(const Model& model, const json& config) {
  json params = json::object();
  for (const auto& [name, param] : model.params.entries()) {
    params[name] = json{{"shape", param.value.shape()},
                        {"values", std::vector<double>(param.value.data().begin(),
                                                       param.value.data().end())},
                        {"trainable", param.trainable}};
  }
  return json{{"format_version", kCheckpointFormatVersion},
              {"model", ToString(model.kind)},
              {"dims", json{{"embed", model.dims.embed},
                            {"hidden", model.dims.hidden},
                            {"fc_hidden", model.dims.fc_hidden}}},
              {"config", config},
              {"schemas", SchemasJson(model.schemas)},
              {"vocabulary", model.vocab.tokens()},
              {"edge_mask", model.edge_mask},
              {"params", params}};
}

void WriteCheckpoint(const Model& model, const json& config,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint '" + path + "'");
  out << CheckpointJson(model, config).dump() << '\n';
}

LoadedCheckpoint CheckpointFromJson(const json& doc) {
  try {
    if (doc.at("format_version").get<int>() != kCheckpointFormatVersion) {
      throw Error("unsupported checkpoint format_version " +
                  doc.at("format_version").dump());
    }
    LoadedCheckpoint out;
    Model& m = out.model;
    m.kind = ParseModelKind(doc.at("model").get<std::string>());
    const json& dims = doc.at("dims");
    m.dims = ModelDims{dims.at("embed").get<std::size_t>(),
                       dims.at("hidden").get<std::size_t>(),
                       dims.at("fc_hidden").get<std::size_t>()};
    m.vocab = Vocabulary(doc.at("vocabulary").get<std::vector<std::string>>());
    m.schemas = ParseSchemas(doc.at("schemas").dump());
    m.edge_mask = doc.value("edge_mask", false);
    for (const auto& [name, entry] : doc.at("params").items()) {
      m.params.Add(name,
                   Array(entry.at("shape").get<Shape>(),
                         entry.at("values").get<std::vector<double>>()),
                   entry.value("trainable", true));
    }
    Rng scratch(0);
    const Model reference = CreateModel(m.kind, m.dims, m.vocab, {}, scratch);
    for (const auto& [name, p] : reference.params.entries()) {
      if (!m.params.Contains(name)) throw Error("missing parameter '" + name + "'");
      if (m.params.Get(name).shape() != p.value.shape()) {
        throw Error("parameter '" + name + "' has shape " +
                    ShapeString(m.params.Get(name).shape()) + ", expected " +
                    ShapeString(p.value.shape()));
      }
    }
    if (m.params.entries().size() != reference.params.entries().size()) {
      throw Error("unexpected extra parameters");
    }
    out.config = doc.value("config", json::object());
    return out;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed checkpoint: ") + e.what());
  }
}

LoadedCheckpoint ReadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(path + ": " + e.what());
  }
  try {
    return CheckpointFromJson(doc);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace openslot
