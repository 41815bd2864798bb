// Brute-force references for the chain CRF: every label sequence is
// enumerated, so keep n and |S| small.

#ifndef OPENSLOT_TESTS_ORACLE_HPP
#define OPENSLOT_TESTS_ORACLE_HPP

#include <functional>

#include "openslot/crf.hpp"
#include "openslot/rng.hpp"

namespace openslot::testing {

// Visits all k^n sequences in lexicographic order.
void ForEachSequence(std::size_t n, std::size_t k,
                     const std::function<void(const LabelSequence&)>& visit);

// Direct sum of the two potential terms, written out independently of
// ScoreSequence.
double BruteScore(const LabelSequence& labels, const PotentialTable& table);

double BruteLogPartition(const PotentialTable& table);

struct BruteBest {
  LabelSequence labels;
  double score = 0.0;
};

// Highest-scoring sequence. Among exact ties the winner is the one that is
// smallest when compared from the last position backwards, which is what
// smallest-index backpointers produce.
BruteBest BruteViterbi(const PotentialTable& table);

// P(y_i = j) as an [n, |S|] array.
Array BruteMarginals(const PotentialTable& table);

PotentialTable RandomTable(std::size_t n, std::size_t k, Rng& rng,
                           double range = 2.0);

}  // namespace openslot::testing

#endif  // OPENSLOT_TESTS_ORACLE_HPP
