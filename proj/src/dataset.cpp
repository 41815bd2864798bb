#include "openslot/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "openslot/rng.hpp"

namespace openslot {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string DialogueWhere(std::size_t index) {
  return "dialogue " + std::to_string(index);
}

std::size_t RequireIndex(const json& obj, const char* key,
                         const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_number_integer() ||
      obj[key].get<long long>() < 0) {
    throw Error(where + ": missing or invalid \"" + key + "\"");
  }
  return obj[key].get<std::size_t>();
}

std::vector<Utterance> ParseDialoguesImpl(const std::string& json_text,
                                          const std::string& domain,
                                          const std::string& id_prefix) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(std::string("corpus: malformed JSON: ") + e.what());
  }
  if (!doc.is_array()) throw Error("corpus: expected a JSON array of dialogues");

  std::vector<Utterance> out;
  for (std::size_t d = 0; d < doc.size(); ++d) {
    const json& dialogue = doc[d];
    const std::string where = DialogueWhere(d);
    if (!dialogue.is_object() || !dialogue.contains("turns") ||
        !dialogue["turns"].is_array()) {
      throw Error(where + ": missing \"turns\" array");
    }
    std::string dialogue_id = std::to_string(d);
    if (dialogue.contains("dialogue_id")) {
      if (!dialogue["dialogue_id"].is_string()) {
        throw Error(where + ": \"dialogue_id\" must be a string");
      }
      dialogue_id = dialogue["dialogue_id"].get<std::string>();
    }
    const json& turns = dialogue["turns"];
    for (std::size_t t = 0; t < turns.size(); ++t) {
      const json& turn = turns[t];
      if (!turn.is_object()) throw Error(where + ": turn " + std::to_string(t) + " is not an object");
      if (!turn.contains("user_utterance")) continue;
      const json& user = turn["user_utterance"];
      Utterance utt;
      utt.id = id_prefix + "/" + dialogue_id + "/" + std::to_string(t);
      utt.domain = domain;
      const std::string uwhere = where + ", utterance " + utt.id;
      if (!user.is_object() || !user.contains("tokens") ||
          !user["tokens"].is_array()) {
        throw Error(uwhere + ": missing \"tokens\" array");
      }
      for (const json& token : user["tokens"]) {
        if (!token.is_string()) throw Error(uwhere + ": non-string token");
        utt.tokens.push_back(Lowercase(token.get<std::string>()));
      }
      if (utt.tokens.empty()) continue;
      if (user.contains("slots")) {
        if (!user["slots"].is_array()) throw Error(uwhere + ": \"slots\" must be a list");
        for (const json& slot : user["slots"]) {
          if (!slot.is_object() || !slot.contains("slot") ||
              !slot["slot"].is_string()) {
            throw Error(uwhere + ": slot annotation without a \"slot\" name");
          }
          SlotSpan span{slot["slot"].get<std::string>(),
                        RequireIndex(slot, "start", uwhere),
                        RequireIndex(slot, "exclusive_end", uwhere)};
          if (span.start >= span.end || span.end > utt.tokens.size()) {
            throw Error(uwhere + ": span [" + std::to_string(span.start) + "," +
                        std::to_string(span.end) + ") outside " +
                        std::to_string(utt.tokens.size()) + " tokens");
          }
          utt.spans.push_back(std::move(span));
        }
      }
      std::sort(utt.spans.begin(), utt.spans.end(),
                [](const SlotSpan& a, const SlotSpan& b) {
                  return std::tie(a.start, a.end, a.slot) <
                         std::tie(b.start, b.end, b.slot);
                });
      for (std::size_t i = 1; i < utt.spans.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
          if (utt.spans[j].slot == utt.spans[i].slot &&
              utt.spans[i].start < utt.spans[j].end) {
            throw Error(uwhere + ": overlapping spans for slot " + utt.spans[i].slot);
          }
        }
      }
      out.push_back(std::move(utt));
    }
  }
  return out;
}

std::string GuessDomain(const std::string& path) {
  for (const char* known : {"sim-M", "sim-R"}) {
    if (path.find(known) != std::string::npos) return known;
  }
  return "default";
}

}  // namespace

std::vector<Utterance> ParseDialogues(const std::string& json_text,
                                      const std::string& domain) {
  return ParseDialoguesImpl(json_text, domain, domain);
}

std::vector<Utterance> LoadDialogues(const std::string& path,
                                     const std::string& domain) {
  const std::string prefix = domain + "/" + fs::path(path).stem().string();
  try {
    return ParseDialoguesImpl(ReadFile(path), domain, prefix);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

std::vector<Utterance> LoadCorpus(const std::string& path,
                                  const std::string& domain) {
  if (!fs::exists(path)) throw Error("corpus path '" + path + "' does not exist");
  if (!fs::is_directory(path)) {
    return LoadDialogues(path, domain.empty() ? GuessDomain(path) : domain);
  }
  auto json_files = [](const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    return files;
  };
  std::vector<Utterance> out;
  std::vector<fs::path> subdirs;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.is_directory()) subdirs.push_back(entry.path());
  }
  std::sort(subdirs.begin(), subdirs.end());
  for (const fs::path& dir : subdirs) {
    if (!domain.empty() && dir.filename().string() != domain) continue;
    for (const fs::path& file : json_files(dir)) {
      auto part = LoadDialogues(file.string(), dir.filename().string());
      out.insert(out.end(), part.begin(), part.end());
    }
  }
  for (const fs::path& file : json_files(path)) {
    auto part = LoadDialogues(
        file.string(), domain.empty() ? GuessDomain(file.string()) : domain);
    out.insert(out.end(), part.begin(), part.end());
  }
  if (out.empty()) throw Error("no utterances found under '" + path + "'");
  return out;
}

LabelSequence ToIob(const Utterance& utterance, const LabelSet& labels,
                    std::size_t* dropped) {
  LabelSequence out(utterance.tokens.size(), 0);
  std::size_t skipped = 0;
  for (const SlotSpan& span : utterance.spans) {
    auto slot = labels.SlotIndex(span.slot);
    if (!slot) {
      ++skipped;
      continue;
    }
    if (span.start >= span.end || span.end > out.size()) {
      throw Error("utterance " + utterance.id + ": span out of range");
    }
    for (std::size_t i = span.start; i < span.end; ++i) {
      if (out[i] != 0) {
        throw Error("utterance " + utterance.id + ": overlapping spans at token " +
                    std::to_string(i));
      }
      out[i] = i == span.start ? labels.BeginLabel(*slot) : labels.InsideLabel(*slot);
    }
  }
  if (dropped) *dropped = skipped;
  return out;
}

std::set<std::string> ValueKeys(const Utterance& utterance,
                                const InventoryOptions& options) {
  std::set<std::string> keys;
  for (const SlotSpan& span : utterance.spans) {
    std::string value = SpanValue(utterance, span);
    keys.insert(options.per_slot ? span.slot + "=" + value : value);
  }
  return keys;
}

std::set<std::string> ValueInventory(std::span<const Utterance> utterances,
                                     const InventoryOptions& options) {
  std::set<std::string> keys;
  for (const Utterance& u : utterances) keys.merge(ValueKeys(u, options));
  return keys;
}

ValueRatio ParseRatio(const std::string& text) {
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos ||
        text.find_first_not_of("0123456789:") != std::string::npos) {
      throw Error("");
    }
    std::size_t used = 0;
    const unsigned long a = std::stoul(text.substr(0, colon), &used);
    if (used != colon) throw Error("");
    const std::string rest = text.substr(colon + 1);
    const unsigned long b = std::stoul(rest, &used);
    if (used != rest.size() || a + b == 0) throw Error("");
    return ValueRatio{static_cast<unsigned>(a), static_cast<unsigned>(b)};
  } catch (const std::exception&) {
    throw Error("invalid value ratio '" + text + "', expected e.g. 75:25");
  }
}

InDomainSplit SplitInDomain(std::span<const Utterance> utterances,
                            ValueRatio ratio, std::uint64_t seed,
                            const InventoryOptions& options) {
  if (utterances.empty()) throw Error("in-domain split: empty corpus");
  const std::string domain = utterances.front().domain;
  for (const Utterance& u : utterances) {
    if (u.domain != domain) {
      throw Error("in-domain split needs a single domain, saw '" + domain +
                  "' and '" + u.domain + "'");
    }
  }
  std::vector<std::set<std::string>> keys;
  keys.reserve(utterances.size());
  for (const Utterance& u : utterances) keys.push_back(ValueKeys(u, options));
  std::set<std::string> all;
  for (const auto& k : keys) all.insert(k.begin(), k.end());
  if (all.empty()) throw Error("in-domain split: corpus has no slot values");

  const double target =
      static_cast<double>(ratio.train) / (ratio.train + ratio.test);
  const auto unseen_count = static_cast<std::size_t>(std::lround(
      static_cast<double>(ratio.test) / (ratio.train + ratio.test) * all.size()));
  if (unseen_count == 0) {
    throw Error("in-domain split: ratio " + std::to_string(ratio.train) + ":" +
                std::to_string(ratio.test) + " designates no unseen values, "
                "so the test set would be empty");
  }

  const std::vector<std::string> values(all.begin(), all.end());
  Rng rng(seed);
  std::optional<InDomainSplit> best;
  for (std::size_t draw = 0; draw < kSplitDraws; ++draw) {
    std::vector<std::string> order = values;
    rng.Shuffle(order);
    std::set<std::string> unseen(order.begin(), order.begin() + unseen_count);

    InDomainSplit split;
    for (std::size_t i = 0; i < utterances.size(); ++i) {
      const bool held_out = std::any_of(
          keys[i].begin(), keys[i].end(),
          [&](const std::string& k) { return unseen.count(k) != 0; });
      (held_out ? split.test : split.train).push_back(i);
    }
    if (split.test.empty()) continue;
    std::set<std::string> train_values;
    for (std::size_t i : split.train) train_values.insert(keys[i].begin(), keys[i].end());
    std::set<std::string> novel;
    for (std::size_t i : split.test) {
      for (const auto& k : keys[i]) {
        if (!train_values.count(k)) novel.insert(k);
      }
    }
    InDomainReport& r = split.report;
    r.target = ratio;
    r.target_train_share = target;
    r.num_values = all.size();
    r.designated_unseen = unseen_count;
    r.train_values = train_values.size();
    r.unseen_test_values = novel.size();
    r.achieved_train_share = static_cast<double>(train_values.size()) /
                             static_cast<double>(train_values.size() + novel.size());
    r.distance_pp = 100.0 * std::abs(r.achieved_train_share - target);
    r.train_size = split.train.size();
    r.test_size = split.test.size();
    r.draw = draw;
    r.seed = seed;
    split.designated_unseen = std::move(unseen);
    if (!best || r.distance_pp < best->report.distance_pp) best = std::move(split);
  }
  if (!best) throw Error("in-domain split: every draw produced an empty test set");
  if (best->report.distance_pp > kSplitTolerancePp) {
    throw Error("in-domain split: best achieved ratio is " +
                ToJson(best->report).dump() + ", more than 10 points off target");
  }
  return std::move(*best);
}

CrossDomainSplit SplitCrossDomain(std::span<const Utterance> utterances,
                                  const std::string& train_domain,
                                  const std::string& test_domain) {
  if (train_domain == test_domain) {
    throw Error("cross-domain split: train and test domain are both '" +
                train_domain + "'");
  }
  CrossDomainSplit split;
  std::set<std::string> train_slots;
  std::set<std::string> test_slots;
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    const Utterance& u = utterances[i];
    if (u.domain == train_domain) {
      split.train.push_back(i);
      for (const auto& s : u.spans) train_slots.insert(s.slot);
    } else if (u.domain == test_domain) {
      split.test.push_back(i);
      for (const auto& s : u.spans) test_slots.insert(s.slot);
    }
  }
  if (split.train.empty()) throw Error("cross-domain split: no utterances for domain '" + train_domain + "'");
  if (split.test.empty()) throw Error("cross-domain split: no utterances for domain '" + test_domain + "'");
  for (const auto& s : test_slots) {
    (train_slots.count(s) ? split.known_slots : split.unknown_slots).push_back(s);
  }
  return split;
}

std::size_t CountUnseen(std::span<const Utterance> train,
                        std::span<const Utterance> held_out,
                        const InventoryOptions& options) {
  const std::set<std::string> known_values = ValueInventory(train, options);
  std::set<std::string> known_slots;
  for (const Utterance& u : train) {
    for (const auto& s : u.spans) known_slots.insert(s.slot);
  }
  std::size_t count = 0;
  for (const Utterance& u : held_out) {
    bool unseen = false;
    for (const auto& k : ValueKeys(u, options)) unseen |= !known_values.count(k);
    for (const auto& s : u.spans) unseen |= !known_slots.count(s.slot);
    count += unseen ? 1 : 0;
  }
  return count;
}

namespace {

ValidationSplit ValidationAttempt(std::span<const Utterance> train,
                                  std::uint64_t seed,
                                  const InventoryOptions& options) {
  const std::size_t total = train.size();
  const auto target = static_cast<std::size_t>(std::lround(total / 5.0));
  std::size_t quota = target / 2;

  std::map<std::string, std::vector<std::size_t>> occurrences;
  for (std::size_t i = 0; i < total; ++i) {
    for (const auto& k : ValueKeys(train[i], options)) occurrences[k].push_back(i);
  }
  std::vector<std::string> order;
  for (const auto& [key, where] : occurrences) order.push_back(key);
  Rng rng(seed);
  rng.Shuffle(order);

  std::vector<bool> moved(total, false);
  std::size_t moved_count = 0;
  bool progress = true;
  while (quota > 0 && progress) {
    progress = false;
    for (const std::string& key : order) {
      std::size_t remaining = 0;
      for (std::size_t i : occurrences[key]) remaining += moved[i] ? 0 : 1;
      if (remaining == 0 || remaining > quota) continue;
      for (std::size_t i : occurrences[key]) {
        if (!moved[i]) {
          moved[i] = true;
          ++moved_count;
        }
      }
      quota -= remaining;
      progress = true;
      if (quota == 0) break;
    }
  }
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < total; ++i) {
    if (!moved[i]) rest.push_back(i);
  }
  rng.Shuffle(rest);
  for (std::size_t i : rest) {
    if (moved_count >= target) break;
    moved[i] = true;
    ++moved_count;
  }

  ValidationSplit split;
  for (std::size_t i = 0; i < total; ++i) {
    (moved[i] ? split.validation : split.train).push_back(i);
  }
  const auto new_train = Gather(train, split.train);
  const auto validation = Gather(train, split.validation);
  ValidationReport& r = split.report;
  r.new_train_size = split.train.size();
  r.validation_size = split.validation.size();
  r.unseen_count = CountUnseen(new_train, validation, options);
  r.unseen_fraction = validation.empty()
                          ? 0.0
                          : static_cast<double>(r.unseen_count) / validation.size();
  r.seed = seed;
  return split;
}

}  // namespace

ValidationSplit BuildValidation(std::span<const Utterance> train,
                                std::uint64_t seed,
                                const InventoryOptions& options) {
  if (train.size() < 10) {
    throw Error("validation split needs at least 10 training utterances, got " +
                std::to_string(train.size()));
  }
  std::optional<ValidationSplit> best;
  for (std::size_t attempt = 0; attempt < kValidationSeeds; ++attempt) {
    ValidationSplit split = ValidationAttempt(train, seed + attempt, options);
    split.report.attempts = attempt + 1;
    const double f = split.report.unseen_fraction;
    if (f >= kMinUnseenFraction && f <= kMaxUnseenFraction) return split;
    if (!best || std::abs(f - 0.5) < std::abs(best->report.unseen_fraction - 0.5)) {
      best = std::move(split);
    }
  }
  throw Error("validation split: unseen fraction outside [0.35, 0.65] after " +
              std::to_string(kValidationSeeds) + " seeds; closest " +
              ToJson(best->report).dump());
}

json ToJson(const InDomainReport& r) {
  return json{{"target_ratio", std::to_string(r.target.train) + ":" +
                                   std::to_string(r.target.test)},
              {"target_train_share", r.target_train_share},
              {"achieved_train_share", r.achieved_train_share},
              {"distance_pp", r.distance_pp},
              {"num_values", r.num_values},
              {"designated_unseen", r.designated_unseen},
              {"train_values", r.train_values},
              {"unseen_test_values", r.unseen_test_values},
              {"train_size", r.train_size},
              {"test_size", r.test_size},
              {"draw", r.draw},
              {"seed", r.seed}};
}

json ToJson(const ValidationReport& r) {
  return json{{"new_train_size", r.new_train_size},
              {"validation_size", r.validation_size},
              {"unseen_count", r.unseen_count},
              {"unseen_fraction", r.unseen_fraction},
              {"seed", r.seed},
              {"attempts", r.attempts}};
}

void WriteManifest(const SplitManifest& manifest, const std::string& path) {
  json doc{{"train", manifest.train},
           {"validation", manifest.validation},
           {"test", manifest.test},
           {"report", manifest.report}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << doc.dump(2) << '\n';
}

SplitManifest ReadManifest(const std::string& path) {
  json doc;
  try {
    doc = json::parse(ReadFile(path));
  } catch (const json::exception& e) {
    throw Error(path + ": " + e.what());
  }
  SplitManifest m;
  try {
    m.train = doc.at("train").get<std::vector<std::string>>();
    m.test = doc.at("test").get<std::vector<std::string>>();
    if (doc.contains("validation")) {
      m.validation = doc["validation"].get<std::vector<std::string>>();
    }
    if (doc.contains("report")) m.report = doc["report"];
  } catch (const json::exception& e) {
    throw Error(path + ": malformed split manifest: " + e.what());
  }
  return m;
}

std::vector<Utterance> SelectById(std::span<const Utterance> corpus,
                                  std::span<const std::string> ids) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < corpus.size(); ++i) index.emplace(corpus[i].id, i);
  std::vector<Utterance> out;
  out.reserve(ids.size());
  for (const std::string& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) throw Error("utterance id '" + id + "' not in corpus");
    out.push_back(corpus[it->second]);
  }
  return out;
}

std::vector<Utterance> Gather(std::span<const Utterance> corpus,
                              std::span<const std::size_t> indices) {
  std::vector<Utterance> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(corpus[i]);
  return out;
}

std::vector<std::string> Ids(std::span<const Utterance> utterances) {
  std::vector<std::string> out;
  out.reserve(utterances.size());
  for (const Utterance& u : utterances) out.push_back(u.id);
  return out;
}

}  // namespace openslot
