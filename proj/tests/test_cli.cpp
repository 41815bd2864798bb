#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "openslot/dataset.hpp"
#include "openslot/model.hpp"
#include "support/test_util.hpp"
#include "support/toy_grammar.hpp"

using namespace openslot;
using namespace openslot::testing;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int status = -1;
  std::string out;
  std::string err;
};

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string Quote(const std::string& arg) {
  std::string out = "'";
  for (char c : arg) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

RunResult Run(const TempDir& dir, const std::vector<std::string>& args) {
  std::string cmd = Quote(OPENSLOT_CLI);
  for (const auto& a : args) cmd += " " + Quote(a);
  const std::string out = dir.file("stdout.txt");
  const std::string err = dir.file("stderr.txt");
  cmd += " >" + Quote(out) + " 2>" + Quote(err);
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = Slurp(out);
  r.err = Slurp(err);
  return r;
}

std::size_t CountLines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

// A toy corpus file plus its schema file, shared by every case.
struct Workspace {
  TempDir dir{"cli"};
  std::string corpus = dir.file("toy.json");
  std::string schema = dir.file("schema.json");

  Workspace() {
    const ToyCorpus toy = MakeToyCorpus(4, ToyOptions{.train = 60, .validation = 20, .test = 20});
    std::vector<Utterance> all = toy.train;
    all.insert(all.end(), toy.validation.begin(), toy.validation.end());
    all.insert(all.end(), toy.test.begin(), toy.test.end());
    std::ofstream(corpus) << ToDialogueJson(all);
    std::ofstream(schema) << SchemasJson(toy.schemas).dump(2);
  }

  std::vector<std::string> SmallModel() const {
    return {"--embed-dim", "8", "--label-dim", "6", "--fc-hidden", "5",
            "--max-epochs", "2", "--pretrain-steps", "40"};
  }

  RunResult Split(const std::string& out) {
    return Run(dir, {"split", "--task", "in-domain", "--corpus", corpus, "--domain", "toy",
                     "--ratio", "75:25", "--seed", "0", "--out", out});
  }

  RunResult Train(const std::string& model, const std::string& manifest, const std::string& out,
                  std::vector<std::string> extra = {}) {
    std::vector<std::string> args{"train",      "--model",  model,  "--corpus", corpus,
                                  "--domain",   "toy",      "--manifest", manifest,
                                  "--schema",   schema,     "--seed", "1",    "--out", out};
    for (const auto& a : SmallModel()) args.push_back(a);
    for (auto& a : extra) args.push_back(std::move(a));
    return Run(dir, args);
  }
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("split writes a manifest and a report") {
  Workspace ws;
  const RunResult r = ws.Split(ws.dir.file("split"));
  REQUIRE_MESSAGE(r.status == 0, r.err);
  const SplitManifest m = ReadManifest(ws.dir.file("split/manifest.json"));
  CHECK(m.train.size() + m.validation.size() + m.test.size() == 100);
  CHECK_FALSE(m.test.empty());
  CHECK(m.validation.size() == static_cast<std::size_t>(std::lround(
                                   (m.train.size() + m.validation.size()) / 5.0)));
  const auto report = nlohmann::json::parse(Slurp(ws.dir.file("split/split_report.json")));
  CHECK(report["task"] == "in-domain");
  CHECK(report["seed"] == 0);
  CHECK(report.contains("validation"));

  const std::string first = Slurp(ws.dir.file("split/manifest.json"));
  REQUIRE(ws.Split(ws.dir.file("split2")).status == 0);
  CHECK(Slurp(ws.dir.file("split2/manifest.json")) == first);
  CHECK(Slurp(ws.dir.file("split2/split_report.json")) ==
        Slurp(ws.dir.file("split/split_report.json")));
}

TEST_CASE("train, predict, eval and inspect") {
  Workspace ws;
  REQUIRE(ws.Split(ws.dir.file("split")).status == 0);
  const std::string manifest = ws.dir.file("split/manifest.json");

  const RunResult t = ws.Train("ecrf", manifest, ws.dir.file("ecrf"));
  REQUIRE_MESSAGE(t.status == 0, t.err);
  CHECK(CountLines(Slurp(ws.dir.file("ecrf/history.jsonl"))) == 2);
  const LoadedCheckpoint ckpt = ReadCheckpoint(ws.dir.file("ecrf/checkpoint.json"));
  CHECK(ckpt.model.kind == ModelKind::kEcrf);
  CHECK(ckpt.config["seed"] == 1);
  CHECK(ckpt.config["pretrain_steps"] == 40);

  // Repeated runs are byte-identical.
  REQUIRE(ws.Train("ecrf", manifest, ws.dir.file("ecrf2")).status == 0);
  CHECK(Slurp(ws.dir.file("ecrf2/checkpoint.json")) ==
        Slurp(ws.dir.file("ecrf/checkpoint.json")));
  CHECK(Slurp(ws.dir.file("ecrf2/history.jsonl")) == Slurp(ws.dir.file("ecrf/history.jsonl")));

  const RunResult p = Run(ws.dir, {"predict", "--checkpoint", ws.dir.file("ecrf/checkpoint.json"),
                                   "--corpus", ws.corpus, "--domain", "toy", "--manifest",
                                   manifest, "--out", ws.dir.file("pred")});
  REQUIRE_MESSAGE(p.status == 0, p.err);
  const auto preds = ReadPredictions(ws.dir.file("pred/predictions.jsonl"));
  CHECK(preds.size() == ReadManifest(manifest).test.size());

  const RunResult e = Run(ws.dir, {"eval", "--predictions", ws.dir.file("pred/predictions.jsonl"),
                                   ws.dir.file("pred/predictions.jsonl"), "--corpus", ws.corpus,
                                   "--domain", "toy", "--manifest", manifest, "--out",
                                   ws.dir.file("eval")});
  REQUIRE_MESSAGE(e.status == 0, e.err);
  const auto report = nlohmann::json::parse(Slurp(ws.dir.file("eval/report.json")));
  CHECK(report["mode"] == "values");
  CHECK(report["runs"].size() == 2);
  CHECK(report["aggregate"]["total"]["std"] == 0.0);
  const auto& run = report["runs"][0];
  CHECK(run["known"]["gold"].get<int>() + run["unknown"]["gold"].get<int>() ==
        run["total"]["gold"].get<int>());
  CHECK(Slurp(ws.dir.file("eval/report.csv")).starts_with("run,mode,category,correct,gold,accuracy,std\n"));

  const RunResult i = Run(ws.dir, {"inspect", "--checkpoint", ws.dir.file("ecrf/checkpoint.json"),
                                   "--corpus", ws.corpus, "--domain", "toy", "--manifest", manifest,
                                   "--limit", "2", "--out", ws.dir.file("inspect")});
  REQUIRE_MESSAGE(i.status == 0, i.err);
  const std::string index = Slurp(ws.dir.file("inspect/index.csv"));
  CHECK(CountLines(index) == 3);
  const std::string stem = index.substr(index.rfind(',') + 1, index.size() - index.rfind(',') - 2);
  for (const char* suffix : {".node.csv", ".edge.csv", ".paths.csv"}) {
    CHECK(fs::exists(ws.dir.path() / "inspect" / (stem + suffix)));
  }
  CHECK(Slurp(ws.dir.file("inspect/" + stem + ".edge.csv")).starts_with("from,O,B-"));
}

TEST_CASE("baselines train through the same command") {
  Workspace ws;
  REQUIRE(ws.Split(ws.dir.file("split")).status == 0);
  for (const char* model : {"ct", "bt"}) {
    const RunResult t =
        ws.Train(model, ws.dir.file("split/manifest.json"), ws.dir.file(model), {"--max-epochs", "1"});
    REQUIRE_MESSAGE(t.status == 0, t.err);
    // The later --max-epochs wins over the earlier one.
    CHECK(CountLines(Slurp(ws.dir.file(std::string(model) + "/history.jsonl"))) == 1);
    CHECK(ReadCheckpoint(ws.dir.file(std::string(model) + "/checkpoint.json")).model.kind ==
          ParseModelKind(model));
  }
}

TEST_CASE("config files fill in flags that were not given") {
  Workspace ws;
  REQUIRE(ws.Split(ws.dir.file("split")).status == 0);
  std::ofstream(ws.dir.file("cfg.json")) << R"({"max_epochs": 1, "learning_rate": 0.05,
                                               "seed": 99})";
  const RunResult t = ws.Train("ecrf", ws.dir.file("split/manifest.json"), ws.dir.file("cfg"),
                               {"--config", ws.dir.file("cfg.json"), "--max-epochs", "3"});
  REQUIRE_MESSAGE(t.status == 0, t.err);
  const auto ckpt = ReadCheckpoint(ws.dir.file("cfg/checkpoint.json"));
  CHECK(ckpt.config["learning_rate"] == 0.05);
  CHECK(ckpt.config["seed"] == 1);
  // An explicit flag given after the config still wins.
  CHECK(ckpt.config["max_epochs"] == 3);
}

TEST_CASE("gradcheck") {
  TempDir dir("gc");
  const RunResult r = Run(dir, {"gradcheck", "--model", "ecrf", "--seed", "42"});
  CHECK_MESSAGE(r.status == 0, r.err);
  CHECK(r.out.find("max relative error") != std::string::npos);
  CHECK(r.out.find("crf.w") != std::string::npos);
  const RunResult bad = Run(dir, {"gradcheck", "--model", "svm"});
  CHECK(bad.status != 0);
}

TEST_CASE("errors are one-line diagnostics with a nonzero exit") {
  Workspace ws;
  REQUIRE(ws.Split(ws.dir.file("split")).status == 0);
  const RunResult no_schema =
      Run(ws.dir, {"train", "--model", "ecrf", "--corpus", ws.corpus, "--manifest",
                   ws.dir.file("split/manifest.json"), "--out", ws.dir.file("x")});
  CHECK(no_schema.status != 0);
  CHECK(no_schema.err.find("--schema") != std::string::npos);

  const RunResult missing = Run(ws.dir, {"predict", "--checkpoint", ws.dir.file("absent.json"),
                                         "--corpus", ws.corpus, "--out", ws.dir.file("y")});
  CHECK(missing.status != 0);
  CHECK(missing.err.starts_with("openslot: error:"));
  CHECK(CountLines(missing.err) == 1);

  CHECK(Run(ws.dir, {"frobnicate"}).status != 0);
  CHECK(Run(ws.dir, {"split", "--corpus", ws.corpus, "--out", ws.dir.file("z"), "--bogus"}).status != 0);
  CHECK(Run(ws.dir, {"split", "--task", "in-domain", "--corpus", ws.corpus, "--domain", "toy",
                     "--ratio", "seventy", "--out", ws.dir.file("z")})
            .status != 0);
}

}  // TEST_SUITE
