#include "privpol/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iostream>
#include <numeric>
#include <stdexcept>

#include "privpol/rng.hpp"

namespace privpol {

std::string_view to_string(StrategyKind k) {
    switch (k) {
        case StrategyKind::random: return "random";
        case StrategyKind::lc: return "lc";
        case StrategyKind::margin: return "margin";
        case StrategyKind::entropy: return "entropy";
        case StrategyKind::eer: return "eer";
        case StrategyKind::id: return "id";
        case StrategyKind::bmu: return "bmu";
    }
    return "random";
}

StrategyKind parse_strategy(std::string_view s) {
    for (auto k : {StrategyKind::random, StrategyKind::lc, StrategyKind::margin, StrategyKind::entropy, StrategyKind::eer,
                   StrategyKind::id, StrategyKind::bmu}) {
        if (to_string(k) == s) return k;
    }
    throw std::invalid_argument("unknown strategy: " + std::string(s));
}

void validate(const SelectionRequest& req) {
    if (req.k > req.pool_size()) throw std::invalid_argument("k exceeds pool size");
    if (static_cast<std::size_t>(req.pool_features.rows()) != req.pool_size())
        throw std::invalid_argument("pool ids and features disagree in length");
    if (req.pool_size() > 0 && static_cast<std::size_t>(req.pool_features.cols()) != req.model.dim())
        throw std::invalid_argument("pool feature dimension does not match the model");
    if (!(req.eer_subsample > 0.0 && req.eer_subsample <= 1.0)) throw std::invalid_argument("eer_subsample must be in (0, 1]");
}

double score_lc(double p) { return 1.0 - std::max(p, 1.0 - p); }

double score_margin(double p) { return -std::abs(p - (1.0 - p)); }

double score_entropy(double p) {
    auto term = [](double q) { return q > 0.0 ? -q * std::log(q) : 0.0; };
    return term(p) + term(1.0 - p);
}

namespace {

// rows scaled to unit length; zero rows stay zero
RowMatrix normalized_rows(const RowMatrix& x) {
    RowMatrix out = x;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const double n = out.row(i).norm();
        if (n > 0) out.row(i) /= n;
    }
    return out;
}

std::vector<std::string> ids_at(const SelectionRequest& req, const std::vector<std::size_t>& idx) {
    std::vector<std::string> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(req.pool_ids[i]);
    return out;
}

double expected_binary_error(const Eigen::VectorXd& probs) {
    return probs.unaryExpr([](double p) { return 1.0 - std::max(p, 1.0 - p); }).mean();
}

}  // namespace

Eigen::VectorXd information_density(const RowMatrix& pool_features) {
    const auto n = pool_features.rows();
    if (n == 0) return {};
    const RowMatrix unit = normalized_rows(pool_features);
    // mean_u cos(x, u) = x_hat . mean(u_hat)
    const Eigen::RowVectorXd centroid = unit.colwise().sum() / static_cast<double>(n);
    return unit * centroid.transpose();
}

std::vector<std::size_t> top_k(const Eigen::VectorXd& scores, const std::vector<std::string>& ids, std::size_t k) {
    std::vector<std::size_t> order(static_cast<std::size_t>(scores.size()));
    std::iota(order.begin(), order.end(), std::size_t{0});
    k = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), [&](std::size_t a, std::size_t b) {
        const double sa = scores(static_cast<Eigen::Index>(a)), sb = scores(static_cast<Eigen::Index>(b));
        if (sa != sb) return sa > sb;
        return ids[a] < ids[b];
    });
    order.resize(k);
    return order;
}

std::vector<std::string> select_random(const SelectionRequest& req) {
    Rng rng(req.seed);
    return ids_at(req, sample_without_replacement(req.pool_size(), req.k, rng));
}

std::vector<std::string> select_uncertainty(const SelectionRequest& req, StrategyKind kind) {
    const Eigen::VectorXd p = predict_proba(req.model, req.pool_features);
    Eigen::VectorXd scores(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        switch (kind) {
            case StrategyKind::margin: scores(i) = score_margin(p(i)); break;
            case StrategyKind::entropy: scores(i) = score_entropy(p(i)); break;
            default: scores(i) = score_lc(p(i)); break;
        }
    }
    return ids_at(req, top_k(scores, req.pool_ids, req.k));
}

std::uint64_t eer_retrain_seed(std::uint64_t request_seed, const Eigen::Ref<const Eigen::RowVectorXd>& candidate, int label) {
    std::uint64_t h = derive_seed(request_seed, "eer");
    for (double v : candidate) {
        if (v == 0.0) v = 0.0;  // fold -0
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        h = derive_seed(h, bits);
    }
    return derive_seed(h, static_cast<std::uint64_t>(label));
}

std::vector<std::size_t> eer_candidates(const SelectionRequest& req, bool* fell_back) {
    std::vector<std::size_t> keep;
    Rng rng(derive_seed(req.seed, "eer-subsample"));
    for (std::size_t i = 0; i < req.pool_size(); ++i) {
        if (bernoulli(rng, req.eer_subsample)) keep.push_back(i);
    }
    const bool too_few = keep.size() < std::max<std::size_t>(req.k, 1);
    if (fell_back) *fell_back = too_few;
    if (too_few) {
        if (keep.empty()) std::cerr << "warning: EER subsample is empty; scoring the full pool\n";
        keep.resize(req.pool_size());
        std::iota(keep.begin(), keep.end(), std::size_t{0});
    }
    return keep;
}

Eigen::VectorXd eer_expected_error(const SelectionRequest& req, const std::vector<std::size_t>& candidates) {
    if (req.labeled.size() == 0) throw std::invalid_argument("EER needs a non-empty labeled set");
    Eigen::VectorXd out(static_cast<Eigen::Index>(candidates.size()));

    Dataset augmented = req.labeled;
    augmented.features.conservativeResize(augmented.features.rows() + 1, Eigen::NoChange);
    augmented.labels.conservativeResize(augmented.labels.size() + 1);
    const Eigen::Index last = augmented.features.rows() - 1;

    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const auto idx = static_cast<Eigen::Index>(candidates[c]);
        const double p_pos = predict_one(req.model, req.pool_features.row(idx).transpose());
        augmented.features.row(last) = req.pool_features.row(idx);
        double expected = 0.0;
        for (int y = 0; y <= 1; ++y) {
            augmented.labels(last) = y;
            const auto model = train(augmented, req.train_cfg, eer_retrain_seed(req.seed, req.pool_features.row(idx), y));
            const double err = expected_binary_error(predict_proba(model, req.pool_features));
            expected += (y == 1 ? p_pos : 1.0 - p_pos) * err;
        }
        out(static_cast<Eigen::Index>(c)) = expected;
    }
    return out;
}

std::vector<std::string> select_eer(const SelectionRequest& req) {
    if (req.k == 0) return {};
    const auto candidates = eer_candidates(req);
    if (req.k >= candidates.size()) {
        std::vector<std::size_t> all = candidates;
        std::sort(all.begin(), all.end(), [&](std::size_t a, std::size_t b) { return req.pool_ids[a] < req.pool_ids[b]; });
        return ids_at(req, all);
    }
    const Eigen::VectorXd err = eer_expected_error(req, candidates);
    std::vector<std::string> cand_ids;
    cand_ids.reserve(candidates.size());
    for (auto i : candidates) cand_ids.push_back(req.pool_ids[i]);
    const auto best = top_k(-err, cand_ids, req.k);
    std::vector<std::string> out;
    out.reserve(best.size());
    for (auto b : best) out.push_back(cand_ids[b]);
    return out;
}

std::vector<std::string> select_id(const SelectionRequest& req) {
    const Eigen::VectorXd p = predict_proba(req.model, req.pool_features);
    const Eigen::VectorXd density = information_density(req.pool_features);
    Eigen::VectorXd scores(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) scores(i) = score_lc(p(i)) * density(i);
    return ids_at(req, top_k(scores, req.pool_ids, req.k));
}

std::vector<std::string> select_bmu(const SelectionRequest& req) {
    const auto n = req.pool_size();
    if (req.k == 0 || n == 0) return {};
    const Eigen::VectorXd p = predict_proba(req.model, req.pool_features);
    Eigen::VectorXd uncertainty(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) uncertainty(i) = score_lc(p(i));

    const RowMatrix pool_unit = normalized_rows(req.pool_features);
    Eigen::VectorXd max_sim = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    if (req.labeled.size() > 0) {
        const RowMatrix labeled_unit = normalized_rows(req.labeled.features);
        max_sim = (pool_unit * labeled_unit.transpose()).rowwise().maxCoeff();
    }
    const std::size_t labeled_n = req.labeled_count.value_or(req.labeled.size());

    std::vector<bool> taken(n, false);
    std::vector<std::size_t> picked;
    picked.reserve(req.k);
    for (std::size_t t = 0; t < req.k; ++t) {
        const double remaining = static_cast<double>(n - t);
        const double alpha = remaining / (remaining + static_cast<double>(labeled_n + t));
        std::size_t best = n;
        double best_score = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (taken[i]) continue;
            const auto ii = static_cast<Eigen::Index>(i);
            const double s = alpha * (1.0 - max_sim(ii)) + (1.0 - alpha) * uncertainty(ii);
            if (best == n || s > best_score || (s == best_score && req.pool_ids[i] < req.pool_ids[best])) {
                best = i;
                best_score = s;
            }
        }
        taken[best] = true;
        picked.push_back(best);
        // the pick joins the labeled side for the rest of the batch
        const Eigen::VectorXd sim_to_pick = pool_unit * pool_unit.row(static_cast<Eigen::Index>(best)).transpose();
        if (picked.size() == 1 && req.labeled.size() == 0) max_sim = sim_to_pick;
        else max_sim = max_sim.cwiseMax(sim_to_pick);
    }
    return ids_at(req, picked);
}

std::vector<std::string> select(StrategyKind kind, const SelectionRequest& req) {
    validate(req);
    if (req.k == 0) return {};
    switch (kind) {
        case StrategyKind::random: return select_random(req);
        case StrategyKind::lc:
        case StrategyKind::margin:
        case StrategyKind::entropy: return select_uncertainty(req, kind);
        case StrategyKind::eer: return select_eer(req);
        case StrategyKind::id: return select_id(req);
        case StrategyKind::bmu: return select_bmu(req);
    }
    return {};
}

}  // namespace privpol
