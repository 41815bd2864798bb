#ifndef OPENSLOT_EVALUATION_HPP
#define OPENSLOT_EVALUATION_HPP

#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "openslot/crf.hpp"
#include "openslot/dataset.hpp"
#include "openslot/slot_encoder.hpp"
#include "openslot/types.hpp"

namespace openslot {

// Maximal B-s I-s* runs. An I-s that does not continue a span of slot s
// opens a new one.
std::vector<SlotSpan> ExtractSpans(std::span<const std::size_t> labels,
                                   const LabelSet& label_set);

struct Prediction {
  std::string id;
  std::vector<SlotSpan> spans;
};

struct CategoryScore {
  std::size_t correct = 0;
  std::size_t gold = 0;

  // Empty for 0/0.
  std::optional<double> accuracy() const;
};

struct MetricReport {
  std::string mode;  // "values" or "slots"
  CategoryScore known;
  CategoryScore unknown;
  CategoryScore total;
  std::size_t spurious = 0;   // predicted spans matching no gold span
  std::size_t conflicts = 0;  // tokens claimed by two or more slots
};

// Exact (slot, start, end) matching per gold instance; a gold value is
// known iff its key is in `train_values`.
MetricReport ScoreValues(std::span<const Prediction> predictions,
                         std::span<const Utterance> gold,
                         const std::set<std::string>& train_values,
                         const InventoryOptions& options = {});

// As ScoreValues, with categories by slot membership in `known_slots`.
MetricReport ScoreCrossDomain(std::span<const Prediction> predictions,
                              std::span<const Utterance> gold,
                              const std::set<std::string>& known_slots);

// Token positions covered by spans of at least two different slots.
std::size_t ConflictCount(std::span<const SlotSpan> spans);

struct SeedSummary {
  std::optional<double> mean;
  std::optional<double> stddev;  // sample std; needs two values
  std::size_t runs = 0;
};

struct AggregateReport {
  SeedSummary known;
  SeedSummary unknown;
  SeedSummary total;
};

AggregateReport Aggregate(std::span<const MetricReport> runs);

nlohmann::json ToJson(const MetricReport& report);
nlohmann::json ToJson(const AggregateReport& report);
std::string ToCsv(const MetricReport& report);

void WritePredictions(std::span<const Prediction> predictions,
                      const std::string& path);
std::vector<Prediction> ReadPredictions(const std::string& path);

}  // namespace openslot

#endif  // OPENSLOT_EVALUATION_HPP
