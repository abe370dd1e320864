#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace privpol {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Vocabulary-indexed dense word vectors. Immutable once built.
class WordEmbedding {
public:
    WordEmbedding() = default;
    /// Throws std::invalid_argument on duplicate words or a row/word count mismatch.
    WordEmbedding(std::vector<std::string> words, RowMatrix vectors);

    std::size_t dim() const { return static_cast<std::size_t>(vectors_.cols()); }
    std::size_t size() const { return words_.size(); }

    std::optional<std::size_t> index_of(std::string_view token) const;
    const std::string& word(std::size_t index) const { return words_[index]; }
    const std::vector<std::string>& words() const { return words_; }

    auto vector(std::size_t index) const { return vectors_.row(static_cast<Eigen::Index>(index)); }
    const RowMatrix& vectors() const { return vectors_; }

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, std::size_t> vocab_;
    RowMatrix vectors_;
};

class VectorParseError : public std::runtime_error {
public:
    VectorParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Reads the whitespace-separated text vector format: an optional
/// "<count> <dim>" header, then "token v1 ... vdim" per line. Later duplicates
/// of a token are ignored; max_vocab caps the number of distinct tokens.
WordEmbedding load_vectors(const std::filesystem::path& path, std::optional<std::size_t> max_vocab = std::nullopt);
WordEmbedding parse_vectors(std::string_view content, std::optional<std::size_t> max_vocab = std::nullopt);

/// Writes the header form, values with %.6f.
void write_vectors(const WordEmbedding& emb, const std::filesystem::path& path);

/// Lowercased alphanumeric runs. Non-ASCII bytes count as alphanumeric so that
/// UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view text);

/// Normalized bag of words: distinct vocabulary rows with weights summing to 1.
struct NBowDoc {
    std::vector<std::size_t> indices;
    Eigen::VectorXd weights;

    std::size_t size() const { return indices.size(); }
};

/// Out-of-vocabulary tokens are skipped; nullopt when nothing is left.
/// Indices are in first-occurrence order.
std::optional<NBowDoc> nbow(const WordEmbedding& emb, const std::vector<std::string>& tokens);

std::optional<Eigen::VectorXd> sentence_centroid(const WordEmbedding& emb, const std::vector<std::string>& tokens);

class DegenerateVector : public std::domain_error {
public:
    DegenerateVector() : std::domain_error("degenerate vector") {}
};

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& u, const Eigen::MatrixBase<DerivedB>& v) {
    using Scalar = typename DerivedA::Scalar;
    if (u.size() != v.size()) throw std::invalid_argument("cosine_similarity: dimension mismatch");
    const Scalar nu = u.norm();
    const Scalar nv = v.norm();
    if (nu == Scalar(0) || nv == Scalar(0)) throw DegenerateVector();
    const Scalar c = u.dot(v) / (nu * nv);
    return std::clamp(c, Scalar(-1), Scalar(1));
}

}  // namespace privpol
