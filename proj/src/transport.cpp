#include "privpol/transport.hpp"

namespace privpol {

namespace {

RowMatrix gather_rows(const WordEmbedding& emb, const std::vector<std::size_t>& indices) {
    RowMatrix out(static_cast<Eigen::Index>(indices.size()), static_cast<Eigen::Index>(emb.dim()));
    for (std::size_t i = 0; i < indices.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = emb.vector(indices[i]);
    return out;
}

}  // namespace

Eigen::MatrixXd cost_matrix(const NBowDoc& a, const NBowDoc& b, const WordEmbedding& emb) {
    return pairwise_euclidean(gather_rows(emb, a.indices), gather_rows(emb, b.indices));
}

WmdResult wmd_exact(const NBowDoc& a, const NBowDoc& b, const WordEmbedding& emb, std::size_t support_cap) {
    if (a.size() + b.size() > support_cap) throw InstanceTooLarge();
    const Eigen::MatrixXd c = cost_matrix(a, b, emb);
    auto sol = transport_exact<double>(a.weights, b.weights, c);
    return {sol.cost, std::move(sol.plan)};
}

double wmd_sinkhorn(const NBowDoc& a, const NBowDoc& b, const WordEmbedding& emb, const SinkhornOptions& opt) {
    return transport_sinkhorn<double>(a.weights, b.weights, cost_matrix(a, b, emb), opt).cost;
}

double rwmd_lower_bound(const NBowDoc& a, const NBowDoc& b, const WordEmbedding& emb) {
    return relaxed_transport_bound<double>(a.weights, b.weights, cost_matrix(a, b, emb));
}

double wmd(const NBowDoc& a, const NBowDoc& b, const WordEmbedding& emb, std::size_t support_cap) {
    if (a.size() + b.size() <= support_cap) return wmd_exact(a, b, emb, support_cap).distance;
    return wmd_sinkhorn(a, b, emb);
}

}  // namespace privpol
