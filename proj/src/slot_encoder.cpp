#include "openslot/slot_encoder.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace openslot {

LabelSet::LabelSet(std::vector<SlotSchema> slots) : slots_(std::move(slots)) {
  std::set<std::string> names;
  labels_.push_back(Label{IobTag::kO, 0});
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (!names.insert(slots_[i].name).second) {
      throw Error("duplicate slot name '" + slots_[i].name + "'");
    }
    if (slots_[i].description.empty()) {
      throw Error("slot '" + slots_[i].name + "' has an empty description");
    }
    labels_.push_back(Label{IobTag::kB, i});
    labels_.push_back(Label{IobTag::kI, i});
  }
}

std::optional<std::size_t> LabelSet::SlotIndex(const std::string& name) const {
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (slots_[i].name == name) return i;
  }
  return std::nullopt;
}

std::string LabelSet::LabelName(std::size_t i) const {
  const Label& label = labels_.at(i);
  switch (label.tag) {
    case IobTag::kO: return "O";
    case IobTag::kB: return "B-" + slots_[label.slot].name;
    case IobTag::kI: return "I-" + slots_[label.slot].name;
  }
  return "?";
}

SlotSchema MakeSchema(std::string name, const std::string& description) {
  SlotSchema schema{std::move(name), SplitWhitespace(Lowercase(description))};
  if (schema.name.empty()) throw Error("slot schema with an empty name");
  if (schema.description.empty()) {
    throw Error("slot '" + schema.name + "' has an empty description");
  }
  return schema;
}

std::vector<SlotSchema> ParseSchemas(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("schema: ") + e.what());
  }
  if (!doc.is_array()) throw Error("schema: expected a JSON list");
  std::vector<SlotSchema> out;
  std::set<std::string> names;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& entry = doc[i];
    if (!entry.is_object() || !entry.contains("name") ||
        !entry.contains("description") || !entry["name"].is_string() ||
        !entry["description"].is_string()) {
      throw Error("schema entry " + std::to_string(i) +
                  ": needs string fields \"name\" and \"description\"");
    }
    out.push_back(MakeSchema(entry["name"].get<std::string>(),
                             entry["description"].get<std::string>()));
    if (!names.insert(out.back().name).second) {
      throw Error("schema: duplicate slot name '" + out.back().name + "'");
    }
  }
  return out;
}

std::vector<SlotSchema> LoadSchemas(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open schema file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseSchemas(buffer.str());
}

void SlotEncoder::InitParams(ParamStore& params, Rng& rng) const {
  InitFeedForward(params, kLabelFcPrefix, 2 * dims_.embed, dims_.fc_hidden,
                  dims_.hidden, rng);
}

Var SlotEncoder::EncodeDescription(Graph& graph, const ParamStore& params,
                                   const SlotSchema& schema) const {
  if (schema.description.empty()) {
    throw Error("slot '" + schema.name + "' has an empty description");
  }
  const std::vector<std::size_t> ids = vocab_->Indices(schema.description);
  Var rows = EmbedTokens(graph, params, ids);
  Var total = Matmul(graph.Constant(Array({1, ids.size()}, 1.0)), rows);
  return Scale(total, 1.0 / static_cast<double>(ids.size()));
}

Var SlotEncoder::LabelFromDescription(Graph& graph, const ParamStore& params,
                                      std::optional<Var> description,
                                      IobTag tag) const {
  Var left = description ? *description
                         : graph.Constant(Array({1, dims_.embed}));
  Var input = Concat({left, EmbedTag(graph, params, tag)}, 1);
  return FeedForward(graph, params, kLabelFcPrefix, input);
}

Var SlotEncoder::EncodeLabel(Graph& graph, const ParamStore& params,
                             const LabelSet& labels, std::size_t label) const {
  if (label >= labels.size()) {
    throw Error("label index " + std::to_string(label) +
                " outside a label set of size " + std::to_string(labels.size()));
  }
  const Label& l = labels[label];
  if (l.tag == IobTag::kO) {
    return LabelFromDescription(graph, params, std::nullopt, IobTag::kO);
  }
  return LabelFromDescription(
      graph, params, EncodeDescription(graph, params, labels.slots()[l.slot]),
      l.tag);
}

Var SlotEncoder::EncodeLabelMatrix(Graph& graph, const ParamStore& params,
                                   const LabelSet& labels) const {
  std::vector<Var> rows;
  rows.reserve(labels.size());
  rows.push_back(LabelFromDescription(graph, params, std::nullopt, IobTag::kO));
  for (const SlotSchema& slot : labels.slots()) {
    Var description = EncodeDescription(graph, params, slot);
    rows.push_back(LabelFromDescription(graph, params, description, IobTag::kB));
    rows.push_back(LabelFromDescription(graph, params, description, IobTag::kI));
  }
  return Concat(rows, 0);
}

}  // namespace openslot
