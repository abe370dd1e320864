#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "privpol/embedding.hpp"
#include "privpol/ingestion.hpp"

namespace privpol {

enum class Category { contact, location, device };

std::string_view to_string(Category c);
/// Accepts "contact", "location", "device" (and "device_id"). Throws std::invalid_argument.
Category parse_category(std::string_view s);

/// Lifecycle of a segment through querying and labeling.
enum class SegmentStatus { unlabeled, published, aligned, discarded, ambiguous, irrelevant };
enum class BinaryLabel { negative = 0, positive = 1 };

std::string_view to_string(SegmentStatus s);
SegmentStatus parse_segment_status(std::string_view s);
std::string_view to_string(BinaryLabel l);
BinaryLabel parse_binary_label(std::string_view s);

struct Sentence {
    std::size_t index = 0;
    std::string text;
    std::vector<std::string> tokens;
};

struct Segment {
    std::string id;
    std::string policy_id;
    Category category = Category::contact;
    std::size_t span_start = 0;  // inclusive
    std::size_t span_end = 0;    // inclusive
    std::string text;
    SegmentStatus status = SegmentStatus::unlabeled;
    std::optional<BinaryLabel> label;
};

struct CategoryKeywords {
    Category category;
    std::vector<std::string> keywords;  // lowercase phrases
};

CategoryKeywords default_keywords(Category c);

std::vector<Sentence> split_sentences(std::string_view text);

bool category_matches(const Sentence& sentence, const CategoryKeywords& keywords);

/// True when the sentence hands its topic to the next one: a trailing ';', ':'
/// or '?', or a cue phrase such as "include" or "for example".
bool linkage_forward(const Sentence& sentence);

class NoAdjacentPairs : public std::invalid_argument {
public:
    NoAdjacentPairs() : std::invalid_argument("no adjacent pairs") {}
};

/// mean + c * (population standard deviation). Throws NoAdjacentPairs on empty input.
double segment_threshold(std::span<const double> distances, double c = 2.5);

constexpr double kTopicBoundaryConstant = 2.5;

/// WMD between each pair of neighbouring sentences. Pairs touching an all-OOV
/// sentence take the mean of the computable pairs (0 if none are computable).
std::vector<double> adjacent_distances(const std::vector<Sentence>& sentences, const WordEmbedding& emb);

/// Indices i such that a boundary falls between sentence i and i + 1.
std::vector<std::size_t> topic_boundaries(const std::vector<Sentence>& sentences, std::span<const double> distances, double c);

std::vector<Segment> segment_policy(const Policy& policy, const CategoryKeywords& keywords, const WordEmbedding& emb,
                                    double c = kTopicBoundaryConstant);

}  // namespace privpol
