// openslot: split, train, predict, eval, inspect and gradcheck commands.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "openslot/dataset.hpp"
#include "openslot/gradcheck.hpp"
#include "openslot/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace openslot;

namespace {

constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kSplitReportFile = "split_report.json";
constexpr const char* kCheckpointFile = "checkpoint.json";
constexpr const char* kHistoryFile = "history.jsonl";
constexpr const char* kPredictionsFile = "predictions.jsonl";
constexpr const char* kReportFile = "report.json";
constexpr const char* kReportCsvFile = "report.csv";

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

fs::path OutDir(const std::string& dir) {
  fs::create_directories(dir);
  return fs::path(dir);
}

// Flags given on the command line win; every other key of the --config
// object becomes the matching long flag.
std::vector<std::string> ExpandConfig(std::vector<std::string> args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (!path) return args;
  std::ifstream in(*path);
  if (!in) throw Error("cannot open config '" + *path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(*path + ": " + e.what());
  }
  if (!doc.is_object()) throw Error(*path + ": config must be a JSON object");

  std::set<std::string> given;
  for (const std::string& a : args) {
    if (a.rfind("--", 0) == 0) given.insert(a.substr(0, a.find('=')));
  }
  auto text = [](const json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
  };
  for (const auto& [key, value] : doc.items()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (given.count(flag)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_array()) {
      for (const json& item : value) {
        args.push_back(flag);
        args.push_back(text(item));
      }
    } else if (!value.is_null()) {
      args.push_back(flag);
      args.push_back(text(value));
    }
  }
  return args;
}

struct DataFlags {
  std::string corpus;
  std::string manifest;
  std::string split = "test";
  std::string domain;
};

// Corpus ids only match a manifest when loaded with the domain it recorded.
std::vector<Utterance> LoadWithManifest(const DataFlags& flags,
                                        SplitManifest* manifest_out = nullptr) {
  if (flags.manifest.empty()) {
    if (flags.split != "all") {
      throw Error("--manifest is required unless --split all");
    }
    return LoadCorpus(flags.corpus, flags.domain);
  }
  SplitManifest manifest = ReadManifest(flags.manifest);
  const std::string domain =
      flags.domain.empty() ? manifest.report.value("corpus_domain", "") : flags.domain;
  std::vector<Utterance> corpus = LoadCorpus(flags.corpus, domain);
  std::vector<Utterance> out;
  if (flags.split == "all") {
    out = corpus;
  } else if (flags.split == "train") {
    out = SelectById(corpus, manifest.train);
  } else if (flags.split == "validation") {
    out = SelectById(corpus, manifest.validation);
  } else if (flags.split == "test") {
    out = SelectById(corpus, manifest.test);
  } else {
    throw Error("unknown split '" + flags.split + "'");
  }
  if (manifest_out) *manifest_out = std::move(manifest);
  return out;
}

void AddDataFlags(CLI::App* cmd, DataFlags& flags, bool need_manifest) {
  cmd->add_option("--corpus", flags.corpus, "corpus JSON file or directory")
      ->required();
  auto* manifest = cmd->add_option("--manifest", flags.manifest, "split manifest");
  if (need_manifest) manifest->required();
  cmd->add_option("--split", flags.split, "train, validation, test or all")
      ->check(CLI::IsMember({"train", "validation", "test", "all"}));
  cmd->add_option("--domain", flags.domain,
                  "domain name for a single-file corpus, or a domain filter");
}

// ---- split ----

struct SplitFlags {
  std::string task = "in-domain";
  std::string corpus;
  std::string domain;
  std::string train_domain;
  std::string test_domain;
  std::string ratio = "75:25";
  bool per_slot = false;
  std::uint64_t seed = 0;
  std::string out;
};

int RunSplit(const SplitFlags& f) {
  const InventoryOptions options{f.per_slot};
  SplitManifest manifest;
  json report{{"task", f.task},
              {"seed", f.seed},
              {"inventory", f.per_slot ? "per-slot" : "pooled"}};
  std::vector<Utterance> pool;
  std::vector<Utterance> test;
  if (f.task == "in-domain") {
    if (f.domain.empty()) throw Error("--domain is required for in-domain splits");
    const std::vector<Utterance> corpus = LoadCorpus(f.corpus, f.domain);
    std::vector<Utterance> in_domain;
    for (const Utterance& u : corpus) {
      if (u.domain == f.domain) in_domain.push_back(u);
    }
    if (in_domain.empty()) throw Error("no utterances of domain '" + f.domain + "'");
    InDomainSplit split = SplitInDomain(in_domain, ParseRatio(f.ratio), f.seed, options);
    pool = Gather(in_domain, split.train);
    test = Gather(in_domain, split.test);
    report["corpus_domain"] = f.domain;
    report["domain"] = f.domain;
    report["in_domain"] = ToJson(split.report);
  } else {
    if (f.train_domain.empty() || f.test_domain.empty()) {
      throw Error("--train-domain and --test-domain are required for cross-domain splits");
    }
    const std::vector<Utterance> corpus = LoadCorpus(f.corpus);
    CrossDomainSplit split = SplitCrossDomain(corpus, f.train_domain, f.test_domain);
    pool = Gather(corpus, split.train);
    test = Gather(corpus, split.test);
    report["corpus_domain"] = "";
    report["train_domain"] = f.train_domain;
    report["test_domain"] = f.test_domain;
    report["known_slots"] = split.known_slots;
    report["unknown_slots"] = split.unknown_slots;
  }
  ValidationSplit validation = BuildValidation(pool, f.seed, options);
  report["validation"] = ToJson(validation.report);
  manifest.train = Ids(Gather(pool, validation.train));
  manifest.validation = Ids(Gather(pool, validation.validation));
  manifest.test = Ids(test);
  manifest.report = report;

  const fs::path out = OutDir(f.out);
  WriteManifest(manifest, (out / kManifestFile).string());
  WriteText(out / kSplitReportFile, report.dump(2) + "\n");
  std::cout << "train " << manifest.train.size() << ", validation "
            << manifest.validation.size() << ", test " << manifest.test.size()
            << "\n";
  return 0;
}

// ---- train ----

struct TrainFlags {
  std::string model;
  DataFlags data;
  std::string schema;
  std::vector<std::string> extra_schemas;
  std::string embeddings;
  std::string out;
  std::string config;
  std::optional<double> learning_rate;
  std::optional<std::size_t> pretrain_steps;
  std::optional<std::size_t> batch_size;
  std::optional<double> oversample_ratio;
  std::optional<std::size_t> max_epochs;
  std::optional<std::size_t> patience;
  std::optional<double> unk_probability;
  std::optional<std::size_t> embed_dim;
  std::optional<std::size_t> label_dim;
  std::optional<std::size_t> fc_hidden;
  std::uint64_t seed = 0;
  bool freeze_embeddings = false;
};

int RunTrain(const TrainFlags& f) {
  const ModelKind kind = ParseModelKind(f.model);
  TrainConfig config;
  config.seed = f.seed;
  config.freeze_embeddings = f.freeze_embeddings;
  if (f.learning_rate) config.learning_rate = *f.learning_rate;
  if (f.pretrain_steps) config.pretrain_steps = *f.pretrain_steps;
  if (f.batch_size) {
    (kind == ModelKind::kEcrf ? config.ecrf_batch : config.baseline_batch) = *f.batch_size;
  }
  if (f.oversample_ratio) config.oversample_ratio = *f.oversample_ratio;
  if (f.max_epochs) config.max_epochs = *f.max_epochs;
  if (f.patience) config.patience = *f.patience;
  if (f.unk_probability) config.unk_probability = *f.unk_probability;
  if (f.embed_dim) config.dims.embed = *f.embed_dim;
  if (f.label_dim) config.dims.hidden = *f.label_dim;
  if (f.fc_hidden) config.dims.fc_hidden = *f.fc_hidden;

  DataFlags train_flags = f.data;
  train_flags.split = "train";
  SplitManifest manifest;
  const std::vector<Utterance> train = LoadWithManifest(train_flags, &manifest);
  DataFlags validation_flags = f.data;
  validation_flags.split = "validation";
  const std::vector<Utterance> validation = LoadWithManifest(validation_flags);
  const std::vector<SlotSchema> schemas = LoadSchemas(f.schema);
  std::vector<SlotSchema> extra;
  for (const std::string& path : f.extra_schemas) {
    auto more = LoadSchemas(path);
    extra.insert(extra.end(), more.begin(), more.end());
  }

  TrainData data{train, validation, schemas, extra, f.embeddings};
  const fs::path out = OutDir(f.out);
  std::ofstream history(out / kHistoryFile, std::ios::binary);
  if (!history) throw Error("cannot write '" + (out / kHistoryFile).string() + "'");
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochRecord& record) {
    history << ToJson(record).dump() << '\n';
    history.flush();
  };
  TrainResult result = Train(kind, data, config, hooks);

  json checkpoint_config = ToJson(config);
  checkpoint_config["model"] = ToString(kind);
  checkpoint_config["best_epoch"] = result.best_epoch;
  checkpoint_config["best_validation"] = result.best_validation;
  WriteCheckpoint(result.model, checkpoint_config, (out / kCheckpointFile).string());
  if (result.aborted) {
    std::cerr << "openslot: training aborted: " << result.diagnostic << "\n";
    return 2;
  }
  std::cout << "best epoch " << result.best_epoch << ", validation accuracy "
            << result.best_validation << "\n";
  return 0;
}

// ---- predict ----

struct PredictFlags {
  std::string checkpoint;
  DataFlags data;
  std::string schema;
  std::string out;
};

int RunPredict(const PredictFlags& f) {
  const LoadedCheckpoint loaded = ReadCheckpoint(f.checkpoint);
  const std::vector<Utterance> utterances = LoadWithManifest(f.data);
  const std::vector<SlotSchema> schemas =
      f.schema.empty() ? loaded.model.schemas : LoadSchemas(f.schema);
  const auto predictions = Predict(loaded.model, utterances, schemas);
  const fs::path out = OutDir(f.out);
  WritePredictions(predictions, (out / kPredictionsFile).string());
  std::cout << predictions.size() << " predictions\n";
  return 0;
}

// ---- eval ----

struct EvalFlags {
  std::vector<std::string> predictions;
  DataFlags data;
  std::string mode = "values";
  std::string out;
};

std::string CsvNumber(const std::optional<double>& v) {
  return v ? json(*v).dump() : "null";
}

int RunEval(const EvalFlags& f) {
  SplitManifest manifest;
  const std::vector<Utterance> gold = LoadWithManifest(f.data, &manifest);
  const InventoryOptions options{manifest.report.value("inventory", "pooled") ==
                                 "per-slot"};
  std::set<std::string> train_values;
  std::set<std::string> known_slots;
  if (f.mode == "values") {
    // Values seen anywhere in the original training portion count as known.
    DataFlags train_flags = f.data;
    train_flags.split = "train";
    DataFlags validation_flags = f.data;
    validation_flags.split = "validation";
    std::vector<Utterance> seen = LoadWithManifest(train_flags);
    const std::vector<Utterance> validation = LoadWithManifest(validation_flags);
    seen.insert(seen.end(), validation.begin(), validation.end());
    train_values = ValueInventory(seen, options);
  }
  if (f.mode == "slots") {
    if (!manifest.report.contains("known_slots")) {
      throw Error("manifest has no known_slots; slot mode needs a cross-domain split");
    }
    for (const auto& s : manifest.report.at("known_slots")) {
      known_slots.insert(s.get<std::string>());
    }
  }

  std::vector<MetricReport> runs;
  for (const std::string& path : f.predictions) {
    const auto predictions = ReadPredictions(path);
    runs.push_back(f.mode == "values"
                       ? ScoreValues(predictions, gold, train_values, options)
                       : ScoreCrossDomain(predictions, gold, known_slots));
  }

  json run_docs = json::array();
  std::ostringstream csv;
  csv << "run,mode,category,correct,gold,accuracy,std\n";
  for (std::size_t r = 0; r < runs.size(); ++r) {
    json doc = ToJson(runs[r]);
    doc["predictions"] = f.predictions[r];
    run_docs.push_back(doc);
    for (auto [name, score] : {std::pair{"known", runs[r].known},
                               std::pair{"unknown", runs[r].unknown},
                               std::pair{"total", runs[r].total}}) {
      csv << r << ',' << runs[r].mode << ',' << name << ',' << score.correct << ','
          << score.gold << ',' << CsvNumber(score.accuracy()) << ",\n";
    }
  }
  const AggregateReport aggregate = Aggregate(runs);
  for (auto [name, summary] : {std::pair{"known", aggregate.known},
                               std::pair{"unknown", aggregate.unknown},
                               std::pair{"total", aggregate.total}}) {
    csv << "mean," << f.mode << ',' << name << ",,," << CsvNumber(summary.mean)
        << ',' << CsvNumber(summary.stddev) << '\n';
  }
  json report{{"mode", f.mode},
              {"split", f.data.split},
              {"split_seed", manifest.report.value("seed", json(nullptr))},
              {"runs", run_docs},
              {"aggregate", ToJson(aggregate)}};

  const fs::path out = OutDir(f.out);
  WriteText(out / kReportFile, report.dump(2) + "\n");
  WriteText(out / kReportCsvFile, csv.str());
  std::cout << csv.str();
  return 0;
}

// ---- inspect ----

struct InspectFlags {
  std::string checkpoint;
  DataFlags data;
  std::vector<std::string> ids;
  std::size_t limit = 0;
  std::string schema;
  std::optional<bool> mask_edges;
  std::string out;
};

std::string SafeName(const std::string& id) {
  std::string out = id;
  for (char& c : out) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
                      c == '_' || c == '.';
    if (!keep) c = '_';
  }
  return out;
}

std::string CsvField(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

int RunInspect(const InspectFlags& f) {
  const LoadedCheckpoint loaded = ReadCheckpoint(f.checkpoint);
  const Model& model = loaded.model;
  if (model.kind != ModelKind::kEcrf) {
    throw Error("inspect needs an ecrf checkpoint, got '" + ToString(model.kind) + "'");
  }
  DataFlags data = f.data;
  if (data.manifest.empty() || !f.ids.empty()) data.split = "all";
  const std::vector<Utterance> pool = LoadWithManifest(data);
  std::vector<Utterance> chosen = f.ids.empty() ? pool : SelectById(pool, f.ids);
  if (f.limit != 0 && chosen.size() > f.limit) chosen.resize(f.limit);

  const std::vector<SlotSchema> schemas =
      f.schema.empty() ? model.schemas : LoadSchemas(f.schema);
  const LabelSet labels(schemas);
  const ElasticCrf crf(model.dims, model.vocab);
  const bool mask = f.mask_edges.value_or(model.edge_mask);
  const fs::path out = OutDir(f.out);
  std::ofstream index(out / "index.csv", std::ios::binary);
  index << "utt_id,file_stem\n";

  std::string header;
  for (std::size_t y = 0; y < labels.size(); ++y) header += "," + CsvField(labels.LabelName(y));
  for (const Utterance& u : chosen) {
    const auto ids = model.vocab.Indices(u.tokens);
    const Inspection inspection = InspectPotentials(crf, model.params, ids, labels, mask);
    const PotentialTable& table = inspection.table;
    const std::string stem = SafeName(u.id);
    index << CsvField(u.id) << ',' << stem << '\n';

    std::ostringstream node;
    node << "position,token" << header << '\n';
    for (std::size_t i = 0; i < table.length(); ++i) {
      node << i << ',' << CsvField(u.tokens[i]);
      for (std::size_t y = 0; y < labels.size(); ++y) {
        node << ',' << json(table.node.at(i, y)).dump();
      }
      node << '\n';
    }
    WriteText(out / (stem + ".node.csv"), node.str());

    std::ostringstream edge;
    edge << "from" << header << '\n';
    for (std::size_t a = 0; a < labels.size(); ++a) {
      edge << CsvField(labels.LabelName(a));
      for (std::size_t b = 0; b < labels.size(); ++b) {
        edge << ',' << json(table.edge.at(a, b)).dump();
      }
      edge << '\n';
    }
    WriteText(out / (stem + ".edge.csv"), edge.str());

    std::size_t dropped = 0;
    const LabelSequence gold = ToIob(u, labels, &dropped);
    std::ostringstream paths;
    paths << "position,token,gold,node_only,full\n";
    for (std::size_t i = 0; i < table.length(); ++i) {
      paths << i << ',' << CsvField(u.tokens[i]) << ','
            << CsvField(labels.LabelName(gold[i])) << ','
            << CsvField(labels.LabelName(inspection.node_only.labels[i])) << ','
            << CsvField(labels.LabelName(inspection.full.labels[i])) << '\n';
    }
    paths << "score,,," << json(inspection.node_only.score).dump() << ','
          << json(inspection.full.score).dump() << '\n';
    WriteText(out / (stem + ".paths.csv"), paths.str());
  }
  std::cout << chosen.size() << " utterances inspected\n";
  return 0;
}

// ---- gradcheck ----

struct GradCheckFlags {
  std::string model;
  std::uint64_t seed = 0;
  std::size_t tokens = 3;
  std::size_t slots = 2;
  double tolerance = 1e-4;
};

int RunGradCheckCommand(const GradCheckFlags& f) {
  GradCheckOptions options;
  options.tokens = f.tokens;
  options.slots = f.slots;
  const FiniteDiffResult result = RunGradCheck(ParseModelKind(f.model), f.seed, options);
  for (const auto& [name, error] : result.per_param) {
    std::cout << "  " << name << " " << error << "\n";
  }
  std::cout << "max relative error " << result.max_relative_error << " ("
            << result.worst_param << "[" << result.worst_index << "], "
            << result.coords_checked << " coordinates)\n";
  if (!(result.max_relative_error < f.tolerance)) {
    std::cerr << "openslot: gradient check failed: " << result.max_relative_error
              << " >= " << f.tolerance << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Open-ontology slot filling: elastic CRF and per-slot taggers"};
  app.require_subcommand(1);
  std::string config_path;

  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path,
                    "JSON object of flag values; explicit flags take precedence");
  };

  SplitFlags split;
  auto* split_cmd = app.add_subcommand("split", "build train/validation/test splits");
  split_cmd->add_option("--task", split.task)
      ->check(CLI::IsMember({"in-domain", "cross-domain"}));
  split_cmd->add_option("--corpus", split.corpus)->required();
  split_cmd->add_option("--domain", split.domain, "domain for in-domain splits");
  split_cmd->add_option("--train-domain", split.train_domain);
  split_cmd->add_option("--test-domain", split.test_domain);
  split_cmd->add_option("--ratio", split.ratio, "value ratio a:b");
  split_cmd->add_flag("--per-slot-inventory", split.per_slot,
                      "keep value inventories per slot instead of pooled");
  split_cmd->add_option("--seed", split.seed);
  split_cmd->add_option("--out", split.out)->required();
  add_config(split_cmd);

  TrainFlags train;
  auto* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint");
  train_cmd->add_option("--model", train.model, "ecrf, ct or bt")->required();
  AddDataFlags(train_cmd, train.data, true);
  train_cmd->add_option("--schema", train.schema, "slot schema JSON")->required();
  train_cmd->add_option("--extra-schema", train.extra_schemas,
                        "schemas whose descriptions join the vocabulary");
  train_cmd->add_option("--embeddings", train.embeddings, "pretrained vector file");
  train_cmd->add_flag("--freeze-embeddings", train.freeze_embeddings);
  train_cmd->add_option("--learning-rate", train.learning_rate);
  train_cmd->add_option("--pretrain-steps", train.pretrain_steps);
  train_cmd->add_option("--batch-size", train.batch_size);
  train_cmd->add_option("--oversample-ratio", train.oversample_ratio);
  train_cmd->add_option("--max-epochs", train.max_epochs);
  train_cmd->add_option("--patience", train.patience);
  train_cmd->add_option("--unk-probability", train.unk_probability);
  train_cmd->add_option("--embed-dim", train.embed_dim);
  train_cmd->add_option("--label-dim", train.label_dim);
  train_cmd->add_option("--fc-hidden", train.fc_hidden);
  train_cmd->add_option("--seed", train.seed);
  train_cmd->add_option("--out", train.out)->required();
  add_config(train_cmd);

  PredictFlags predict;
  auto* predict_cmd = app.add_subcommand("predict", "write predicted spans");
  predict_cmd->add_option("--checkpoint", predict.checkpoint)->required();
  AddDataFlags(predict_cmd, predict.data, false);
  predict_cmd->add_option("--schema", predict.schema,
                          "slots to predict (default: the training slots)");
  predict_cmd->add_option("--out", predict.out)->required();
  add_config(predict_cmd);

  EvalFlags eval;
  auto* eval_cmd = app.add_subcommand("eval", "score prediction files");
  eval_cmd->add_option("--predictions", eval.predictions, "one file per run")
      ->required();
  AddDataFlags(eval_cmd, eval.data, true);
  eval_cmd->add_option("--mode", eval.mode, "values or slots")
      ->check(CLI::IsMember({"values", "slots"}));
  eval_cmd->add_option("--out", eval.out)->required();
  add_config(eval_cmd);

  InspectFlags inspect;
  auto* inspect_cmd = app.add_subcommand("inspect", "dump eCRF potential tables");
  inspect_cmd->add_option("--checkpoint", inspect.checkpoint)->required();
  AddDataFlags(inspect_cmd, inspect.data, false);
  inspect_cmd->add_option("--utt-id", inspect.ids);
  inspect_cmd->add_option("--limit", inspect.limit);
  inspect_cmd->add_option("--schema", inspect.schema);
  inspect_cmd->add_option("--mask-edges", inspect.mask_edges,
                          "override the checkpoint's edge mask");
  inspect_cmd->add_option("--out", inspect.out)->required();
  add_config(inspect_cmd);

  GradCheckFlags gradcheck;
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference check");
  gradcheck_cmd->add_option("--model", gradcheck.model)->required();
  gradcheck_cmd->add_option("--seed", gradcheck.seed);
  gradcheck_cmd->add_option("--tokens", gradcheck.tokens);
  gradcheck_cmd->add_option("--slots", gradcheck.slots);
  gradcheck_cmd->add_option("--tolerance", gradcheck.tolerance);
  add_config(gradcheck_cmd);

  // A repeated single-valued flag keeps its last value.
  for (CLI::App* cmd : app.get_subcommands({})) {
    for (CLI::Option* opt : cmd->get_options()) {
      if (opt->get_items_expected_max() == 1) {
        opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
      }
    }
  }

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = ExpandConfig(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "openslot: error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (split_cmd->parsed()) return RunSplit(split);
    if (train_cmd->parsed()) return RunTrain(train);
    if (predict_cmd->parsed()) return RunPredict(predict);
    if (eval_cmd->parsed()) return RunEval(eval);
    if (inspect_cmd->parsed()) return RunInspect(inspect);
    if (gradcheck_cmd->parsed()) return RunGradCheckCommand(gradcheck);
  } catch (const std::exception& e) {
    std::cerr << "openslot: error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
