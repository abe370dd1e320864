#pragma once

// Deterministic stand-ins for the real corpora: a small structured word
// embedding and templated privacy-policy statements drawn from its vocabulary.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "privpol/embedding.hpp"
#include "privpol/ingestion.hpp"
#include "privpol/oracle.hpp"
#include "privpol/segmenter.hpp"

namespace privpol {

constexpr std::uint64_t kFixtureEmbeddingSeed = 20230415;
constexpr std::size_t kFixtureEmbeddingDim = 16;

/// Word groups are clustered; negation cues sit far out along the first axis so
/// negated claims are linearly separable from plain ones in mean-embedding space.
WordEmbedding synthetic_embedding(std::uint64_t seed = kFixtureEmbeddingSeed, std::size_t dim = kFixtureEmbeddingDim);

struct SyntheticConfig {
    std::size_t n = 1000;
    double nsr = 0.186;           // negatives / n
    double ambiguity = 0.0;       // rate of ambiguous relevant segments
    double irrelevant_rate = 0.05;
    Category category = Category::contact;
    std::uint64_t seed = 1;
    std::string id_prefix = "syn";
};

struct SyntheticCorpus {
    std::vector<Segment> segments;
    std::map<std::string, SegmentTruth> truths;
};

/// Throws std::invalid_argument unless 0 < nsr < 1 and the class counts fit in n.
SyntheticCorpus generate_synthetic_corpus(const SyntheticConfig& cfg);

/// One templated statement with the given truth.
std::string synthetic_statement(Answer truth, bool ambiguous, Category category, std::uint64_t seed);

/// A policy of n_sentences statements mixing all categories and filler, with a
/// header sentence that passes the validity filter.
Policy synthetic_policy(std::size_t n_sentences, std::uint64_t seed, const std::string& id = "synthetic-policy");

}  // namespace privpol
