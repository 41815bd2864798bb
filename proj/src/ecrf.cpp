#include "openslot/ecrf.hpp"

#include "openslot/layers.hpp"

namespace openslot {

BiLstm MakeContextEncoder(const ModelDims& dims, const std::string& prefix,
                          std::size_t input_size) {
  if (dims.hidden % 2 != 0) {
    throw Error("BiLSTM output size must be even, got " +
                std::to_string(dims.hidden));
  }
  return BiLstm{prefix, input_size, dims.hidden / 2};
}

ElasticCrf::ElasticCrf(ModelDims dims, const Vocabulary& vocab)
    : dims_(dims),
      encoder_(dims, vocab),
      lstm_(MakeContextEncoder(dims, kContextPrefix, dims.embed)) {}

void ElasticCrf::InitParams(ParamStore& params, Rng& rng) const {
  encoder_.InitParams(params, rng);
  lstm_.InitParams(params, rng);
  params.Add(kEdgeMatrixParam,
             UniformArray({dims_.hidden, dims_.hidden}, kWeightInitRange, rng));
}

Var ElasticCrf::Features(Graph& graph, const ParamStore& params,
                         std::span<const std::size_t> token_ids) const {
  return lstm_.Encode(graph, params, EmbedTokens(graph, params, token_ids));
}

ElasticCrf::Potentials ElasticCrf::BuildPotentials(
    Graph& graph, const ParamStore& params,
    std::span<const std::size_t> token_ids, const LabelSet& labels,
    bool mask_edges) const {
  Var features = Features(graph, params, token_ids);
  Var label_vectors = encoder_.EncodeLabelMatrix(graph, params, labels);
  if (features.value().cols() != label_vectors.value().cols()) {
    throw Error("feature size " + std::to_string(features.value().cols()) +
                " != label vector size " +
                std::to_string(label_vectors.value().cols()));
  }
  Potentials out{Matmul(features, label_vectors, false, true), std::nullopt};
  if (!mask_edges) {
    Var projected =
        Matmul(label_vectors, graph.Param(params, kEdgeMatrixParam));
    out.edge = Matmul(projected, label_vectors, false, true);
  }
  return out;
}

Var ElasticCrf::NegLogLikelihood(Graph& graph, const ParamStore& params,
                                 std::span<const std::size_t> token_ids,
                                 std::span<const std::size_t> gold,
                                 const LabelSet& labels,
                                 bool mask_edges) const {
  Potentials p = BuildPotentials(graph, params, token_ids, labels, mask_edges);
  return openslot::NegLogLikelihood(graph, p.node, p.edge, gold);
}

PotentialTable ElasticCrf::Table(const ParamStore& params,
                                 std::span<const std::size_t> token_ids,
                                 const LabelSet& labels,
                                 bool mask_edges) const {
  Graph graph;
  Potentials p = BuildPotentials(graph, params, token_ids, labels, mask_edges);
  const std::size_t s = labels.size();
  return PotentialTable{p.node.value(),
                        p.edge ? p.edge->value() : Array({s, s})};
}

ViterbiResult ElasticCrf::Decode(const ParamStore& params,
                                 std::span<const std::size_t> token_ids,
                                 const LabelSet& labels,
                                 bool mask_edges) const {
  return ViterbiDecode(Table(params, token_ids, labels, mask_edges));
}

Inspection InspectPotentials(const ElasticCrf& model, const ParamStore& params,
                             std::span<const std::size_t> token_ids,
                             const LabelSet& labels, bool mask_edges) {
  Inspection out;
  out.table = model.Table(params, token_ids, labels, mask_edges);
  PotentialTable node_only{out.table.node,
                           Array({labels.size(), labels.size()})};
  out.node_only = ViterbiDecode(node_only);
  out.full = ViterbiDecode(out.table);
  return out;
}

}  // namespace openslot
