#include "openslot/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace openslot {

using nlohmann::json;

std::vector<SlotSpan> ExtractSpans(std::span<const std::size_t> labels,
                                   const LabelSet& label_set) {
  std::vector<SlotSpan> spans;
  std::optional<std::size_t> open_slot;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= label_set.size()) {
      throw Error("label index " + std::to_string(labels[i]) +
                  " outside a label set of size " +
                  std::to_string(label_set.size()));
    }
    const Label& label = label_set[labels[i]];
    if (label.tag == IobTag::kO) {
      open_slot.reset();
      continue;
    }
    if (label.tag == IobTag::kI && open_slot == label.slot) {
      spans.back().end = i + 1;
      continue;
    }
    spans.push_back(SlotSpan{label_set.slots()[label.slot].name, i, i + 1});
    open_slot = label.slot;
  }
  return spans;
}

std::optional<double> CategoryScore::accuracy() const {
  if (gold == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(gold);
}

std::size_t ConflictCount(std::span<const SlotSpan> spans) {
  std::map<std::size_t, std::set<std::string>> claims;
  for (const SlotSpan& s : spans) {
    for (std::size_t i = s.start; i < s.end; ++i) claims[i].insert(s.slot);
  }
  std::size_t count = 0;
  for (const auto& [pos, slots] : claims) count += slots.size() >= 2 ? 1 : 0;
  return count;
}

namespace {

// `is_known(utterance, span)` picks the category of each gold instance.
MetricReport Score(
    std::span<const Prediction> predictions, std::span<const Utterance> gold,
    const std::function<bool(const Utterance&, const SlotSpan&)>& is_known) {
  std::map<std::string, const Prediction*> by_id;
  for (const Prediction& p : predictions) {
    if (!by_id.emplace(p.id, &p).second) {
      throw Error("duplicate prediction for utterance '" + p.id + "'");
    }
  }
  std::set<std::string> gold_ids;
  MetricReport report;
  for (const Utterance& u : gold) {
    if (!gold_ids.insert(u.id).second) {
      throw Error("duplicate gold utterance '" + u.id + "'");
    }
    auto it = by_id.find(u.id);
    if (it == by_id.end()) throw Error("no prediction for utterance '" + u.id + "'");
    const std::vector<SlotSpan>& predicted = it->second->spans;
    for (const SlotSpan& span : u.spans) {
      const bool hit =
          std::find(predicted.begin(), predicted.end(), span) != predicted.end();
      CategoryScore& bucket = is_known(u, span) ? report.known : report.unknown;
      ++bucket.gold;
      ++report.total.gold;
      if (hit) {
        ++bucket.correct;
        ++report.total.correct;
      }
    }
    for (const SlotSpan& p : predicted) {
      if (std::find(u.spans.begin(), u.spans.end(), p) == u.spans.end()) {
        ++report.spurious;
      }
    }
    report.conflicts += ConflictCount(predicted);
  }
  return report;
}

}  // namespace

MetricReport ScoreValues(std::span<const Prediction> predictions,
                         std::span<const Utterance> gold,
                         const std::set<std::string>& train_values,
                         const InventoryOptions& options) {
  MetricReport report = Score(
      predictions, gold, [&](const Utterance& u, const SlotSpan& span) {
        std::string value = SpanValue(u, span);
        return train_values.count(options.per_slot ? span.slot + "=" + value
                                                   : value) != 0;
      });
  report.mode = "values";
  return report;
}

MetricReport ScoreCrossDomain(std::span<const Prediction> predictions,
                              std::span<const Utterance> gold,
                              const std::set<std::string>& known_slots) {
  MetricReport report =
      Score(predictions, gold, [&](const Utterance&, const SlotSpan& span) {
        return known_slots.count(span.slot) != 0;
      });
  report.mode = "slots";
  return report;
}

namespace {

SeedSummary Summarize(const std::vector<double>& values) {
  SeedSummary s;
  s.runs = values.size();
  if (values.empty()) return s;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  s.mean = mean;
  if (values.size() >= 2) {
    double acc = 0.0;
    for (double v : values) acc += (v - mean) * (v - mean);
    s.stddev = std::sqrt(acc / static_cast<double>(values.size() - 1));
  }
  return s;
}

json OptionalNumber(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

json CategoryJson(const CategoryScore& c) {
  return json{{"correct", c.correct},
              {"gold", c.gold},
              {"accuracy", OptionalNumber(c.accuracy())}};
}

json SummaryJson(const SeedSummary& s) {
  return json{{"mean", OptionalNumber(s.mean)},
              {"std", OptionalNumber(s.stddev)},
              {"runs", s.runs}};
}

}  // namespace

AggregateReport Aggregate(std::span<const MetricReport> runs) {
  std::vector<double> known;
  std::vector<double> unknown;
  std::vector<double> total;
  for (const MetricReport& r : runs) {
    if (auto a = r.known.accuracy()) known.push_back(*a);
    if (auto a = r.unknown.accuracy()) unknown.push_back(*a);
    if (auto a = r.total.accuracy()) total.push_back(*a);
  }
  return AggregateReport{Summarize(known), Summarize(unknown), Summarize(total)};
}

json ToJson(const MetricReport& r) {
  return json{{"mode", r.mode},
              {"known", CategoryJson(r.known)},
              {"unknown", CategoryJson(r.unknown)},
              {"total", CategoryJson(r.total)},
              {"spurious", r.spurious},
              {"conflicts", r.conflicts}};
}

json ToJson(const AggregateReport& r) {
  return json{{"known", SummaryJson(r.known)},
              {"unknown", SummaryJson(r.unknown)},
              {"total", SummaryJson(r.total)}};
}

std::string ToCsv(const MetricReport& r) {
  std::ostringstream out;
  out << "mode,category,correct,gold,accuracy\n";
  auto row = [&](const char* name, const CategoryScore& c) {
    out << r.mode << ',' << name << ',' << c.correct << ',' << c.gold << ',';
    if (auto a = c.accuracy()) {
      out << json(*a).dump();
    } else {
      out << "null";
    }
    out << '\n';
  };
  row("known", r.known);
  row("unknown", r.unknown);
  row("total", r.total);
  return out.str();
}

void WritePredictions(std::span<const Prediction> predictions,
                      const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  for (const Prediction& p : predictions) {
    json spans = json::array();
    for (const SlotSpan& s : p.spans) {
      spans.push_back(json{{"slot", s.slot}, {"start", s.start}, {"end", s.end}});
    }
    out << json{{"utt_id", p.id}, {"spans", spans}}.dump() << '\n';
  }
}

std::vector<Prediction> ReadPredictions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::vector<Prediction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json doc = json::parse(line);
      Prediction p;
      p.id = doc.at("utt_id").get<std::string>();
      for (const json& s : doc.at("spans")) {
        p.spans.push_back(SlotSpan{s.at("slot").get<std::string>(),
                                   s.at("start").get<std::size_t>(),
                                   s.at("end").get<std::size_t>()});
      }
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw Error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace openslot
