// Elastic CRF labeler. The label set is rebuilt from whatever slot schemas
// a task supplies, so the same parameters score any number of slots:
//
//   node[i][j] = e(label_j) . h_i
//   edge[j][k] = e(label_j)^T W e(label_k)

#ifndef OPENSLOT_ECRF_HPP
#define OPENSLOT_ECRF_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "openslot/context_encoder.hpp"
#include "openslot/crf.hpp"
#include "openslot/slot_encoder.hpp"

namespace openslot {

inline constexpr const char* kEdgeMatrixParam = "crf.w";
inline constexpr const char* kContextPrefix = "ctx";

class ElasticCrf {
 public:
  ElasticCrf(ModelDims dims, const Vocabulary& vocab);

  // Label encoder, BiLSTM and W; the embedding tables are installed
  // separately (see InstallTables).
  void InitParams(ParamStore& params, Rng& rng) const;

  struct Potentials {
    Var node;
    std::optional<Var> edge;  // empty while the edge term is masked
  };

  Potentials BuildPotentials(Graph& graph, const ParamStore& params,
                             std::span<const std::size_t> token_ids,
                             const LabelSet& labels, bool mask_edges) const;

  // Contextual features H, [n, hidden].
  Var Features(Graph& graph, const ParamStore& params,
               std::span<const std::size_t> token_ids) const;

  Var NegLogLikelihood(Graph& graph, const ParamStore& params,
                       std::span<const std::size_t> token_ids,
                       std::span<const std::size_t> gold,
                       const LabelSet& labels, bool mask_edges) const;

  // Values only; a masked edge table comes back as zeros.
  PotentialTable Table(const ParamStore& params,
                       std::span<const std::size_t> token_ids,
                       const LabelSet& labels, bool mask_edges = false) const;

  ViterbiResult Decode(const ParamStore& params,
                       std::span<const std::size_t> token_ids,
                       const LabelSet& labels, bool mask_edges = false) const;

  const ModelDims& dims() const { return dims_; }
  const SlotEncoder& slot_encoder() const { return encoder_; }
  const BiLstm& context_encoder() const { return lstm_; }

 private:
  ModelDims dims_;
  SlotEncoder encoder_;
  BiLstm lstm_;
};

BiLstm MakeContextEncoder(const ModelDims& dims, const std::string& prefix,
                          std::size_t input_size);

// Node-only versus full decoding of one utterance.
struct Inspection {
  PotentialTable table;  // edge table as used by the full decode
  ViterbiResult node_only;
  ViterbiResult full;
};

Inspection InspectPotentials(const ElasticCrf& model, const ParamStore& params,
                             std::span<const std::size_t> token_ids,
                             const LabelSet& labels, bool mask_edges = false);

}  // namespace openslot

#endif  // OPENSLOT_ECRF_HPP
