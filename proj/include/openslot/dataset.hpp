#ifndef OPENSLOT_DATASET_HPP
#define OPENSLOT_DATASET_HPP

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "openslot/crf.hpp"
#include "openslot/slot_encoder.hpp"
#include "openslot/types.hpp"

namespace openslot {

// Reads a JSON array of dialogues in the simulated-dialogue layout:
//   [{"dialogue_id": ..., "turns": [{"user_utterance": {"tokens": [...],
//      "slots": [{"slot": s, "start": i, "exclusive_end": j}]}}, ...]}]
// One Utterance per user turn with tokens; system turns are ignored.
// Ids are "<domain>/<dialogue_id>/<turn>". Tokens are lowercased.
std::vector<Utterance> ParseDialogues(const std::string& json_text,
                                      const std::string& domain);
std::vector<Utterance> LoadDialogues(const std::string& path,
                                     const std::string& domain);

// A single file, or a directory of per-domain subdirectories
// (e.g. sim-M/, sim-R/) holding *.json files. For a file the domain is
// `domain` if given, else guessed from the path.
std::vector<Utterance> LoadCorpus(const std::string& path,
                                  const std::string& domain = "");

// B at span start, I inside, O elsewhere. Spans whose slot is absent from
// `labels` are dropped and counted in `dropped`.
LabelSequence ToIob(const Utterance& utterance, const LabelSet& labels,
                    std::size_t* dropped = nullptr);

// Inventory keys: the value string, or "slot=value" per slot.
struct InventoryOptions {
  bool per_slot = false;
};

std::set<std::string> ValueKeys(const Utterance& utterance,
                                const InventoryOptions& options = {});
std::set<std::string> ValueInventory(std::span<const Utterance> utterances,
                                     const InventoryOptions& options = {});

struct ValueRatio {
  unsigned train = 75;
  unsigned test = 25;
};

ValueRatio ParseRatio(const std::string& text);

struct InDomainReport {
  ValueRatio target;
  double target_train_share = 0.0;
  double achieved_train_share = 0.0;
  double distance_pp = 0.0;
  std::size_t num_values = 0;
  std::size_t designated_unseen = 0;
  std::size_t train_values = 0;
  std::size_t unseen_test_values = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::size_t draw = 0;
  std::uint64_t seed = 0;
};

struct InDomainSplit {
  std::vector<std::size_t> train;  // indices into the input
  std::vector<std::size_t> test;
  std::set<std::string> designated_unseen;
  InDomainReport report;
};

inline constexpr std::size_t kSplitDraws = 100;
inline constexpr double kSplitTolerancePp = 10.0;

// Samples a designated-unseen value subset U of size round(b/(a+b)|V|),
// sends every utterance holding a value of U to test, and keeps the best of
// 100 draws by distance to the target |V_train| : |V_test - V_train|.
InDomainSplit SplitInDomain(std::span<const Utterance> utterances,
                            ValueRatio ratio, std::uint64_t seed,
                            const InventoryOptions& options = {});

struct CrossDomainSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::vector<std::string> known_slots;
  std::vector<std::string> unknown_slots;
};

CrossDomainSplit SplitCrossDomain(std::span<const Utterance> utterances,
                                  const std::string& train_domain,
                                  const std::string& test_domain);

struct ValidationReport {
  std::size_t new_train_size = 0;
  std::size_t validation_size = 0;
  std::size_t unseen_count = 0;
  double unseen_fraction = 0.0;
  std::uint64_t seed = 0;
  std::size_t attempts = 0;
};

struct ValidationSplit {
  std::vector<std::size_t> train;  // indices into the input
  std::vector<std::size_t> validation;
  ValidationReport report;
};

inline constexpr double kMinUnseenFraction = 0.35;
inline constexpr double kMaxUnseenFraction = 0.65;
inline constexpr std::size_t kValidationSeeds = 10;

// 4:1 train/validation with about half of validation holding a value or
// slot absent from the new training set.
ValidationSplit BuildValidation(std::span<const Utterance> train,
                                std::uint64_t seed,
                                const InventoryOptions& options = {});

// Fraction of `held_out` utterances with a value key or slot that never
// occurs in `train`.
std::size_t CountUnseen(std::span<const Utterance> train,
                        std::span<const Utterance> held_out,
                        const InventoryOptions& options = {});

nlohmann::json ToJson(const InDomainReport& report);
nlohmann::json ToJson(const ValidationReport& report);

struct SplitManifest {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
  nlohmann::json report = nlohmann::json::object();
};

void WriteManifest(const SplitManifest& manifest, const std::string& path);
SplitManifest ReadManifest(const std::string& path);

// Looks up ids in `corpus`; unknown ids are an error.
std::vector<Utterance> SelectById(std::span<const Utterance> corpus,
                                  std::span<const std::string> ids);

std::vector<Utterance> Gather(std::span<const Utterance> corpus,
                              std::span<const std::size_t> indices);
std::vector<std::string> Ids(std::span<const Utterance> utterances);

}  // namespace openslot

#endif  // OPENSLOT_DATASET_HPP
