// Comparative runs on the hard toy grammar: value accuracy per model over
// five seeds, and how often the edge term changes a node-only decode.

#include <chrono>
#include <iostream>
#include <map>
#include <sstream>

#include "openslot/dataset.hpp"
#include "openslot/evaluation.hpp"
#include "openslot/training.hpp"
#include "support/toy_grammar.hpp"

using namespace openslot;
using namespace openslot::testing;

namespace {

int failures = 0;

void Report(const std::string& title, bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS" : "FAIL") << "  " << title << ": " << detail << std::endl;
  if (!pass) ++failures;
}

std::string Fixed(double v) {
  std::ostringstream s;
  s.precision(3);
  s << std::fixed << v;
  return s.str();
}

struct Totals {
  double unknown = 0.0;
  double known = 0.0;
  double total = 0.0;
};

struct EdgeEffect {
  std::size_t fixes = 0;   // node-only wrong, full decode right
  std::size_t breaks = 0;  // node-only right, full decode wrong
  std::size_t checkpoints = 0;
};

void CountEdgeEffect(const Model& model, const ToyCorpus& toy, EdgeEffect& effect) {
  if (model.edge_mask) return;
  ++effect.checkpoints;
  const LabelSet labels(toy.schemas);
  const ElasticCrf crf(model.dims, model.vocab);
  for (const Utterance& u : toy.test) {
    const auto ids = model.vocab.Indices(u.tokens);
    const Inspection in = InspectPotentials(crf, model.params, ids, labels);
    const LabelSequence gold = ToIob(u, labels);
    const bool node_right = in.node_only.labels == gold;
    const bool full_right = in.full.labels == gold;
    effect.fixes += !node_right && full_right;
    effect.breaks += node_right && !full_right;
  }
}

}  // namespace

int main() {
  constexpr std::uint64_t kSeeds = 5;
  const auto start = std::chrono::steady_clock::now();
  std::map<ModelKind, Totals> totals;
  EdgeEffect effect;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    const ToyCorpus toy = MakeToyCorpus(100 + seed, ToyOptions{.hard = true});
    std::set<std::string> seen = ValueInventory(toy.train);
    for (const auto& v : ValueInventory(toy.validation)) seen.insert(v);
    const TrainData data{.train = toy.train, .validation = toy.validation, .schemas = toy.schemas};
    for (ModelKind kind :
         {ModelKind::kEcrf, ModelKind::kConceptTagger, ModelKind::kBiLstmTagger}) {
      TrainConfig config;
      config.seed = seed;
      config.max_epochs = 30;
      config.pretrain_steps = 1000;
      const TrainResult r = Train(kind, data, config);
      const MetricReport m = ScoreValues(Predict(r.model, toy.test, toy.schemas), toy.test, seen);
      Totals& t = totals[kind];
      t.unknown += m.unknown.accuracy().value_or(0.0) / kSeeds;
      t.known += m.known.accuracy().value_or(0.0) / kSeeds;
      t.total += m.total.accuracy().value_or(0.0) / kSeeds;
      std::cout << "seed " << seed << " " << ToString(kind) << ": known "
                << Fixed(m.known.accuracy().value_or(0.0)) << ", unknown "
                << Fixed(m.unknown.accuracy().value_or(0.0)) << ", total "
                << Fixed(m.total.accuracy().value_or(0.0)) << ", best epoch " << r.best_epoch
                << std::endl;
      if (kind == ModelKind::kEcrf) CountEdgeEffect(r.model, toy, effect);
    }
  }

  const Totals& e = totals[ModelKind::kEcrf];
  const Totals& c = totals[ModelKind::kConceptTagger];
  const Totals& b = totals[ModelKind::kBiLstmTagger];
  for (const auto& [kind, t] : totals) {
    std::cout << "mean " << ToString(kind) << ": known " << Fixed(t.known) << ", unknown "
              << Fixed(t.unknown) << ", total " << Fixed(t.total) << std::endl;
  }
  Report("ct above bt on unknown values", c.unknown > b.unknown,
         Fixed(c.unknown) + " vs " + Fixed(b.unknown));
  Report("ecrf above bt on unknown values", e.unknown > b.unknown,
         Fixed(e.unknown) + " vs " + Fixed(b.unknown));
  Report("edge term fixes more decodes than it breaks",
         effect.checkpoints > 0 && effect.fixes > effect.breaks,
         std::to_string(effect.fixes) + " fixes, " + std::to_string(effect.breaks) +
             " breaks over " + std::to_string(effect.checkpoints) + " unmasked checkpoints");
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
  std::cout << Fixed(minutes) << " min" << std::endl;
  return failures == 0 ? 0 : 1;
}
