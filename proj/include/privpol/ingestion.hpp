#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace privpol {

struct Policy {
    std::string id;
    std::string source_path;
    std::string raw_text;
    std::string sanitized_text;
    std::size_t word_count = 0;
    std::uint64_t content_hash = 0;
};

/// Strips markup tags, drops script/style/comment contents, decodes character
/// entities and collapses whitespace. Iterated to a fixpoint, so the result is
/// stable under re-application.
std::string sanitize_markup(std::string_view raw);

std::size_t whitespace_word_count(std::string_view text);

std::uint64_t content_hash(std::string_view sanitized);

struct ValidityRules {
    std::vector<std::string> required_keywords{"privacy policy", "legal"};
    std::size_t min_words = 50;
    double min_stopword_ratio = 0.05;
};

struct Validity {
    bool valid = false;
    /// "ok", or the first failing check in the order format, keyword, length,
    /// language. Empty text fails with "length".
    std::string reason;
};

Validity is_valid_policy(std::string_view sanitized, const ValidityRules& rules = {});

/// Fraction of tokenize() tokens that are common English function words.
double english_stopword_ratio(std::string_view text);

struct CorpusLoad {
    std::vector<Policy> policies;
    std::size_t skipped_invalid = 0;
    std::size_t skipped_duplicate = 0;
    std::size_t skipped_unreadable = 0;
};

/// Loads every .txt/.html/.htm file under dir (recursively), ordered by path.
/// Throws std::runtime_error if dir cannot be listed.
CorpusLoad load_corpus(const std::filesystem::path& dir, const ValidityRules& rules = {});

}  // namespace privpol
