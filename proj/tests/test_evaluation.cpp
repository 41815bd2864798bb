#include <cmath>
#include <fstream>

#include "doctest.h"
#include "openslot/evaluation.hpp"
#include "openslot/rng.hpp"
#include "support/test_util.hpp"

using namespace openslot;
using namespace openslot::testing;

namespace {

const LabelSet kLabels({MakeSchema("time", "time"), MakeSchema("date", "date")});
constexpr std::size_t O = 0, Bt = 1, It = 2, Bd = 3, Id = 4;

Utterance Gold(std::string id, std::vector<std::string> tokens, std::vector<SlotSpan> spans) {
  return Utterance{std::move(id), std::move(tokens), std::move(spans), "d"};
}

const std::vector<Utterance> kGold{
    Gold("a", {"at", "6", "pm", "today"}, {{"time", 1, 3}, {"date", 3, 4}}),
    Gold("b", {"tomorrow", "at", "noon"}, {{"date", 0, 1}, {"time", 2, 3}}),
};

std::vector<Prediction> Perfect() {
  std::vector<Prediction> out;
  for (const auto& u : kGold) out.push_back({u.id, u.spans});
  return out;
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("extract_spans") {
  CHECK(ExtractSpans(std::vector<std::size_t>{O, Bt, It, O}, kLabels) ==
        std::vector<SlotSpan>{{"time", 1, 3}});
  CHECK(ExtractSpans(std::vector<std::size_t>{It, It}, kLabels) ==
        std::vector<SlotSpan>{{"time", 0, 2}});
  CHECK(ExtractSpans(std::vector<std::size_t>{Bd, It}, kLabels) ==
        std::vector<SlotSpan>{{"date", 0, 1}, {"time", 1, 2}});
  CHECK(ExtractSpans(std::vector<std::size_t>{Bt, Bt, Id, Id}, kLabels) ==
        std::vector<SlotSpan>{{"time", 0, 1}, {"time", 1, 2}, {"date", 2, 4}});
  CHECK(ExtractSpans(std::vector<std::size_t>{}, kLabels).empty());
  CHECK_THROWS_AS(ExtractSpans(std::vector<std::size_t>{5}, kLabels), Error);
}

TEST_CASE("score_values: examples") {
  const std::set<std::string> train{"6 pm", "tomorrow"};
  const MetricReport perfect = ScoreValues(Perfect(), kGold, train);
  CHECK(perfect.mode == "values");
  CHECK(perfect.total.accuracy() == 1.0);
  CHECK(perfect.known.accuracy() == 1.0);
  CHECK(perfect.unknown.accuracy() == 1.0);
  CHECK(perfect.known.gold == 2);
  CHECK(perfect.unknown.gold == 2);
  CHECK(perfect.spurious == 0);

  const std::vector<Prediction> empty{{"a", {}}, {"b", {}}};
  const MetricReport none = ScoreValues(empty, kGold, train);
  CHECK(none.total.accuracy() == 0.0);
  CHECK(none.total.gold == 4);

  // One extra token breaks the match; a stray span elsewhere does not.
  std::vector<Prediction> off = Perfect();
  off[0].spans[0] = {"time", 0, 3};
  off[1].spans.push_back({"time", 1, 2});
  const MetricReport partial = ScoreValues(off, kGold, train);
  CHECK(partial.total.correct == 3);
  CHECK(partial.known.correct == 1);
  CHECK(partial.spurious == 2);
}

TEST_CASE("score_values: per-slot inventory keys") {
  const MetricReport r = ScoreValues(Perfect(), kGold, {"time=6 pm", "date=6 pm"},
                                     InventoryOptions{.per_slot = true});
  CHECK(r.known.gold == 1);
  CHECK(r.unknown.gold == 3);
}

TEST_CASE("score_cross_domain") {
  const MetricReport all_unknown = ScoreCrossDomain(Perfect(), kGold, {});
  CHECK(all_unknown.mode == "slots");
  CHECK(all_unknown.known.gold == 0);
  CHECK_FALSE(all_unknown.known.accuracy().has_value());
  CHECK(ToJson(all_unknown)["known"]["accuracy"].is_null());

  std::vector<Prediction> time_only = Perfect();
  for (auto& p : time_only) std::erase_if(p.spans, [](const SlotSpan& s) { return s.slot != "time"; });
  const MetricReport r = ScoreCrossDomain(time_only, kGold, {"time"});
  CHECK(r.known.accuracy() == 1.0);
  CHECK(r.unknown.accuracy() == 0.0);
}

TEST_CASE("id errors") {
  std::vector<Prediction> dup = Perfect();
  dup.push_back(dup[0]);
  CHECK_THROWS_AS(ScoreValues(dup, kGold, {}), Error);
  std::vector<Utterance> dup_gold = kGold;
  dup_gold.push_back(kGold[0]);
  CHECK_THROWS_AS(ScoreValues(Perfect(), dup_gold, {}), Error);
  const std::vector<Prediction> missing{Perfect()[0]};
  CHECK_THROWS_AS(ScoreValues(missing, kGold, {}), Error);
}

TEST_CASE("conflict_count") {
  CHECK(ConflictCount(std::vector<SlotSpan>{{"a", 0, 2}, {"b", 2, 4}}) == 0);
  CHECK(ConflictCount(std::vector<SlotSpan>{{"a", 2, 4}, {"b", 2, 4}}) == 2);
  CHECK(ConflictCount(std::vector<SlotSpan>{{"a", 0, 3}, {"a", 1, 2}}) == 0);
  CHECK(ConflictCount(std::vector<SlotSpan>{{"a", 0, 3}, {"b", 1, 4}, {"c", 2, 3}}) == 2);
  std::vector<Prediction> clash = Perfect();
  clash[0].spans.push_back({"date", 1, 2});
  CHECK(ScoreValues(clash, kGold, {}).conflicts == 1);
}

TEST_CASE("property: category sums and permutation invariance") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Utterance> gold;
    std::vector<Prediction> preds;
    std::set<std::string> train;
    for (std::size_t u = 0; u < 1 + rng.Below(8); ++u) {
      Utterance g = Gold("u" + std::to_string(u), {}, {});
      const std::size_t n = 2 + rng.Below(6);
      for (std::size_t i = 0; i < n; ++i) g.tokens.push_back("t" + std::to_string(rng.Below(4)));
      Prediction p{g.id, {}};
      for (std::size_t i = 0; i + 1 < n; i += 2) {
        if (rng.Below(2) == 0) continue;
        const SlotSpan s{rng.Below(2) ? "time" : "date", i, i + 1 + rng.Below(2)};
        g.spans.push_back(s);
        if (rng.Below(3) != 0) p.spans.push_back(s);
        if (rng.Below(2)) train.insert(SpanValue(g, s));
      }
      gold.push_back(std::move(g));
      preds.push_back(std::move(p));
    }
    const MetricReport r = ScoreValues(preds, gold, train);
    CHECK(r.known.correct + r.unknown.correct == r.total.correct);
    CHECK(r.known.gold + r.unknown.gold == r.total.gold);
    if (auto a = r.total.accuracy()) CHECK((*a >= 0.0 && *a <= 1.0));

    rng.Shuffle(gold);
    rng.Shuffle(preds);
    const MetricReport s = ScoreValues(preds, gold, train);
    CHECK(ToJson(s) == ToJson(r));
  }
}

TEST_CASE("aggregate over seeds") {
  auto report = [](std::size_t correct, std::size_t gold) {
    MetricReport r;
    r.total = {correct, gold};
    r.known = {correct, gold};
    return r;
  };
  const std::vector<MetricReport> runs{report(9, 10), report(8, 10), report(7, 10)};
  const AggregateReport a = Aggregate(runs);
  CHECK(*a.total.mean == doctest::Approx(0.8));
  CHECK(*a.total.stddev == doctest::Approx(0.1));
  CHECK(a.total.runs == 3);
  CHECK_FALSE(a.unknown.mean.has_value());
  CHECK(ToJson(a)["unknown"]["mean"].is_null());

  const std::vector<MetricReport> one{report(1, 2)};
  CHECK_FALSE(Aggregate(one).total.stddev.has_value());
}

TEST_CASE("csv report") {
  const MetricReport r = ScoreCrossDomain(Perfect(), kGold, {});
  CHECK(ToCsv(r) ==
        "mode,category,correct,gold,accuracy\n"
        "slots,known,0,0,null\n"
        "slots,unknown,4,4,1.0\n"
        "slots,total,4,4,1.0\n");
}

TEST_CASE("prediction files") {
  TempDir dir("preds");
  const std::vector<Prediction> preds = Perfect();
  WritePredictions(preds, dir.file("p.jsonl"));
  const auto back = ReadPredictions(dir.file("p.jsonl"));
  REQUIRE(back.size() == preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    CHECK(back[i].id == preds[i].id);
    CHECK(back[i].spans == preds[i].spans);
  }
  std::ifstream in(dir.file("p.jsonl"));
  std::string first;
  std::getline(in, first);
  CHECK(nlohmann::json::parse(first)["utt_id"] == "a");

  std::ofstream(dir.file("bad.jsonl")) << "{\"utt_id\": \"a\", \"spans\": [{\"slot\": \"t\"}]}\n";
  CHECK_THROWS_AS(ReadPredictions(dir.file("bad.jsonl")), Error);
  CHECK_THROWS_AS(ReadPredictions(dir.file("none.jsonl")), Error);
}

}  // TEST_SUITE
