#include "privpol/embedding.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>

namespace privpol {

WordEmbedding::WordEmbedding(std::vector<std::string> words, RowMatrix vectors)
    : words_(std::move(words)), vectors_(std::move(vectors)) {
    if (static_cast<Eigen::Index>(words_.size()) != vectors_.rows())
        throw std::invalid_argument("WordEmbedding: word count does not match vector rows");
    vocab_.reserve(words_.size());
    for (std::size_t i = 0; i < words_.size(); ++i) {
        if (!vocab_.emplace(words_[i], i).second) throw std::invalid_argument("WordEmbedding: duplicate token " + words_[i]);
    }
}

std::optional<std::size_t> WordEmbedding::index_of(std::string_view token) const {
    const auto it = vocab_.find(std::string(token));
    if (it == vocab_.end()) return std::nullopt;
    return it->second;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        const auto start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > start) fields.push_back(line.substr(start, i - start));
    }
    return fields;
}

bool parse_size(std::string_view s, std::size_t& out) {
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

WordEmbedding parse_vectors(std::string_view content, std::optional<std::size_t> max_vocab) {
    std::vector<std::string> words;
    std::vector<double> values;
    std::unordered_map<std::string, std::size_t> seen;
    std::size_t dim = 0;
    std::size_t line_no = 0;
    bool first_content_line = true;
    const std::size_t cap = max_vocab.value_or(SIZE_MAX);

    std::size_t pos = 0;
    while (pos < content.size()) {
        auto end = content.find('\n', pos);
        if (end == std::string_view::npos) end = content.size();
        const auto line = content.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;

        const auto fields = split_fields(line);
        if (fields.empty()) continue;

        if (first_content_line) {
            first_content_line = false;
            std::size_t count = 0, header_dim = 0;
            if (fields.size() == 2 && parse_size(fields[0], count) && parse_size(fields[1], header_dim)) {
                if (header_dim == 0) throw VectorParseError(line_no, "header declares zero dimension");
                dim = header_dim;
                continue;
            }
        }

        if (fields.size() < 2) throw VectorParseError(line_no, "expected a token followed by values");
        const std::size_t row_dim = fields.size() - 1;
        if (dim == 0) dim = row_dim;
        if (row_dim != dim)
            throw VectorParseError(line_no, "dimension mismatch: expected " + std::to_string(dim) + ", got " + std::to_string(row_dim));

        std::vector<double> row(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            const auto f = fields[k + 1];
            const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), row[k]);
            if (ec != std::errc() || ptr != f.data() + f.size())
                throw VectorParseError(line_no, "malformed value '" + std::string(f) + "'");
        }

        std::string token(fields[0]);
        if (seen.contains(token) || words.size() >= cap) continue;
        seen.emplace(token, words.size());
        words.push_back(std::move(token));
        values.insert(values.end(), row.begin(), row.end());
    }

    if (words.empty()) throw VectorParseError(line_no, "no word vectors in input");

    RowMatrix vectors = Eigen::Map<const RowMatrix>(values.data(), static_cast<Eigen::Index>(words.size()), static_cast<Eigen::Index>(dim));
    return WordEmbedding(std::move(words), std::move(vectors));
}

WordEmbedding load_vectors(const std::filesystem::path& path, std::optional<std::size_t> max_vocab) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open vector file: " + path.string());
    const std::string content{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse_vectors(content, max_vocab);
}

void write_vectors(const WordEmbedding& emb, const std::filesystem::path& path) {
    std::unique_ptr<std::FILE, decltype(&std::fclose)> f(std::fopen(path.string().c_str(), "wb"), &std::fclose);
    if (!f) throw std::runtime_error("cannot write vector file: " + path.string());
    std::fprintf(f.get(), "%zu %zu\n", emb.size(), emb.dim());
    for (std::size_t i = 0; i < emb.size(); ++i) {
        std::fputs(emb.word(i).c_str(), f.get());
        for (std::size_t k = 0; k < emb.dim(); ++k) std::fprintf(f.get(), " %.6f", emb.vectors()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)));
        std::fputc('\n', f.get());
    }
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (c >= 0x80 || std::isalnum(c)) {
            current += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::optional<NBowDoc> nbow(const WordEmbedding& emb, const std::vector<std::string>& tokens) {
    std::vector<std::size_t> indices;
    std::vector<double> counts;
    std::unordered_map<std::size_t, std::size_t> slot;
    double total = 0.0;
    for (const auto& t : tokens) {
        const auto idx = emb.index_of(t);
        if (!idx) continue;
        const auto [it, inserted] = slot.emplace(*idx, indices.size());
        if (inserted) {
            indices.push_back(*idx);
            counts.push_back(0.0);
        }
        counts[it->second] += 1.0;
        total += 1.0;
    }
    if (indices.empty()) return std::nullopt;

    NBowDoc doc;
    doc.indices = std::move(indices);
    doc.weights = Eigen::Map<const Eigen::VectorXd>(counts.data(), static_cast<Eigen::Index>(counts.size())) / total;
    return doc;
}

std::optional<Eigen::VectorXd> sentence_centroid(const WordEmbedding& emb, const std::vector<std::string>& tokens) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(emb.dim()));
    std::size_t known = 0;
    for (const auto& t : tokens) {
        if (const auto idx = emb.index_of(t)) {
            sum += emb.vector(*idx).transpose();
            ++known;
        }
    }
    if (known == 0) return std::nullopt;
    return Eigen::VectorXd(sum / static_cast<double>(known));
}

}  // namespace privpol
