#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "privpol/classifier.hpp"

namespace privpol {

enum class StrategyKind { random, lc, margin, entropy, eer, id, bmu };

std::string_view to_string(StrategyKind k);
/// Accepts the names "random", "lc", "margin", "entropy", "eer", "id", "bmu".
StrategyKind parse_strategy(std::string_view s);

/// Everything a selector needs to pick the next k pool entries.
struct SelectionRequest {
    std::size_t k = 0;
    std::vector<std::string> pool_ids;
    RowMatrix pool_features;
    Dataset labeled;
    LinearModel model;
    TrainConfig train_cfg;  // used by EER retrains
    std::uint64_t seed = 0;
    double eer_subsample = 0.5;
    /// Replaces |X^L| in the BMU weighting when set.
    std::optional<std::size_t> labeled_count;

    std::size_t pool_size() const { return pool_ids.size(); }
};

/// Throws std::invalid_argument when k exceeds the pool or shapes disagree.
void validate(const SelectionRequest& req);

// Uncertainty scores for a binary posterior p = P(positive | x); larger means
// more uncertain.
double score_lc(double p);
double score_margin(double p);
double score_entropy(double p);

/// Mean cosine similarity of each pool row to every pool row (itself
/// included). Zero rows score 0 and contribute 0.
Eigen::VectorXd information_density(const RowMatrix& pool_features);

/// Indices of the k largest scores; ties go to the smaller id.
std::vector<std::size_t> top_k(const Eigen::VectorXd& scores, const std::vector<std::string>& ids, std::size_t k);

std::vector<std::string> select_random(const SelectionRequest& req);
std::vector<std::string> select_uncertainty(const SelectionRequest& req, StrategyKind kind);

/// Seed used for the retrain that adds (candidate, label) to the labeled set.
/// Keyed on the feature bytes, so candidates with equal features tie exactly.
std::uint64_t eer_retrain_seed(std::uint64_t request_seed, const Eigen::Ref<const Eigen::RowVectorXd>& candidate, int label);

/// Pool rows kept as EER candidates (Bernoulli(eer_subsample) per row, seeded);
/// falls back to the whole pool when nothing survives.
std::vector<std::size_t> eer_candidates(const SelectionRequest& req, bool* fell_back = nullptr);

/// Expected binary error over the pool after adding each candidate, weighted by
/// the current model's label posterior. Indexed like eer_candidates().
Eigen::VectorXd eer_expected_error(const SelectionRequest& req, const std::vector<std::size_t>& candidates);

std::vector<std::string> select_eer(const SelectionRequest& req);
std::vector<std::string> select_id(const SelectionRequest& req);
/// Greedy ranked batch; ids come back in pick order.
std::vector<std::string> select_bmu(const SelectionRequest& req);

std::vector<std::string> select(StrategyKind kind, const SelectionRequest& req);

}  // namespace privpol
