#include "privpol/ingestion.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <unordered_set>

#include "privpol/embedding.hpp"
#include "privpol/rng.hpp"

namespace privpol {

namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool iequals_at(std::string_view s, std::size_t pos, std::string_view word) {
    if (pos + word.size() > s.size()) return false;
    for (std::size_t i = 0; i < word.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(s[pos + i])) != word[i]) return false;
    }
    return true;
}

std::size_t ifind(std::string_view s, std::string_view needle, std::size_t from) {
    for (std::size_t i = from; i + needle.size() <= s.size(); ++i) {
        if (iequals_at(s, i, needle)) return i;
    }
    return std::string_view::npos;
}

void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

// Decodes the entity starting at s[pos] == '&'. Returns the number of bytes
// consumed, or 0 when the text is not a recognised entity.
std::size_t decode_entity(std::string_view s, std::size_t pos, std::string& out) {
    const auto semi = s.find(';', pos);
    if (semi == std::string_view::npos || semi - pos > 10) return 0;
    const auto body = s.substr(pos + 1, semi - pos - 1);
    if (body.empty()) return 0;

    if (body[0] == '#') {
        std::uint32_t cp = 0;
        const bool hex = body.size() > 1 && (body[1] == 'x' || body[1] == 'X');
        const auto digits = body.substr(hex ? 2 : 1);
        if (digits.empty()) return 0;
        for (char c : digits) {
            int d;
            if (c >= '0' && c <= '9') d = c - '0';
            else if (hex && c >= 'a' && c <= 'f') d = c - 'a' + 10;
            else if (hex && c >= 'A' && c <= 'F') d = c - 'A' + 10;
            else return 0;
            cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(d);
            if (cp > 0x10FFFF) return 0;
        }
        if (cp == 0 || (cp >= 0xD800 && cp <= 0xDFFF)) return 0;
        if (cp == 0xA0) cp = ' ';
        append_utf8(out, cp);
        return semi - pos + 1;
    }

    static constexpr std::array<std::pair<std::string_view, std::string_view>, 6> named{{
        {"amp", "&"}, {"lt", "<"}, {"gt", ">"}, {"quot", "\""}, {"apos", "'"}, {"nbsp", " "},
    }};
    for (const auto& [name, text] : named) {
        if (body == name) {
            out += text;
            return semi - pos + 1;
        }
    }
    return 0;
}

bool starts_tag(std::string_view s, std::size_t pos) {
    if (pos + 1 >= s.size()) return false;
    const auto c = static_cast<unsigned char>(s[pos + 1]);
    return std::isalpha(c) || c == '/' || c == '!' || c == '?';
}

// For an opening <script> or <style> tag at pos (whose '>' is at close), the
// index just past the matching end tag, or s.size() when it is missing.
// npos for any other tag.
std::size_t raw_text_element_end(std::string_view s, std::size_t pos, std::size_t close) {
    for (std::string_view element : {"script", "style"}) {
        if (!iequals_at(s, pos + 1, element)) continue;
        const auto after = pos + 1 + element.size();
        if (after < s.size() && std::isalnum(static_cast<unsigned char>(s[after]))) continue;
        const auto end_tag = ifind(s, "</" + std::string(element), close + 1);
        if (end_tag == std::string_view::npos) return s.size();
        const auto gt = s.find('>', end_tag);
        return gt == std::string_view::npos ? s.size() : gt + 1;
    }
    return std::string_view::npos;
}

std::string strip_once(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const char c = s[i];
        if (c == '<' && s.compare(i, 4, "<!--") == 0) {
            const auto end = s.find("-->", i + 4);
            out += ' ';
            i = end == std::string_view::npos ? s.size() : end + 3;
            continue;
        }
        if (c == '<' && starts_tag(s, i)) {
            const auto close = s.find('>', i + 1);
            if (close == std::string_view::npos) {
                // unclosed: not a tag, keep verbatim
                out += c;
                ++i;
                continue;
            }
            if (const auto end = raw_text_element_end(s, i, close); end != std::string_view::npos) {
                out += ' ';
                i = end;
                continue;
            }
            out += ' ';
            i = close + 1;
            continue;
        }
        if (c == '&') {
            if (const auto used = decode_entity(s, i, out); used > 0) {
                i += used;
                continue;
            }
        }
        out += c;
        ++i;
    }

    std::string collapsed;
    collapsed.reserve(out.size());
    bool pending_space = false;
    for (char ch : out) {
        if (is_space(static_cast<unsigned char>(ch))) {
            pending_space = !collapsed.empty();
            continue;
        }
        if (pending_space) collapsed += ' ';
        pending_space = false;
        collapsed += ch;
    }
    return collapsed;
}

const std::unordered_set<std::string>& english_stopwords() {
    static const std::unordered_set<std::string> words{
        "a",     "about", "above", "after", "again", "all",   "also",  "am",    "an",    "and",   "any",
        "are",   "as",    "at",    "be",    "been",  "before", "being", "below", "between", "both", "but",
        "by",    "can",   "could", "did",   "do",    "does",  "doing", "down",  "during", "each",  "few",
        "for",   "from",  "further", "had", "has",   "have",  "having", "he",   "her",   "here",  "hers",
        "him",   "his",   "how",   "i",     "if",    "in",    "into",  "is",    "it",    "its",   "itself",
        "just",  "may",   "me",    "might", "more",  "most",  "must",  "my",    "no",    "nor",   "not",
        "now",   "of",    "off",   "on",    "once",  "only",  "or",    "other", "our",   "ours",  "out",
        "over",  "own",   "same",  "she",   "should", "so",   "some",  "such",  "than",  "that",  "the",
        "their", "them",  "then",  "there", "these", "they",  "this",  "those", "through", "to",  "too",
        "under", "until", "up",    "us",    "very",  "was",   "we",    "were",  "what",  "when",  "where",
        "which", "while", "who",   "whom",  "why",   "will",  "with",  "would", "you",   "your",  "yours",
    };
    return words;
}

}  // namespace

std::string sanitize_markup(std::string_view raw) {
    std::string current = strip_once(raw);
    for (int guard = 0; guard < 64; ++guard) {
        std::string next = strip_once(current);
        if (next == current) break;
        current = std::move(next);
    }
    return current;
}

std::size_t whitespace_word_count(std::string_view text) {
    std::size_t count = 0;
    bool in_word = false;
    for (char c : text) {
        const bool space = is_space(static_cast<unsigned char>(c));
        if (!space && !in_word) ++count;
        in_word = !space;
    }
    return count;
}

std::uint64_t content_hash(std::string_view sanitized) { return fnv1a64(sanitized); }

double english_stopword_ratio(std::string_view text) {
    const auto tokens = tokenize(text);
    if (tokens.empty()) return 0.0;
    const auto& stop = english_stopwords();
    const auto hits = std::count_if(tokens.begin(), tokens.end(), [&](const std::string& t) { return stop.contains(t); });
    return static_cast<double>(hits) / static_cast<double>(tokens.size());
}

Validity is_valid_policy(std::string_view text, const ValidityRules& rules) {
    if (text.starts_with("%PDF-") || text.find('\0') != std::string_view::npos) return {false, "format"};
    const std::size_t words = whitespace_word_count(text);
    if (words == 0) return {false, "length"};

    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    const bool has_keyword = std::any_of(rules.required_keywords.begin(), rules.required_keywords.end(),
                                         [&](const std::string& k) { return lower.find(k) != std::string::npos; });
    if (!has_keyword) return {false, "keyword"};
    if (words < rules.min_words) return {false, "length"};

    if (english_stopword_ratio(text) < rules.min_stopword_ratio) return {false, "language"};
    return {true, "ok"};
}

CorpusLoad load_corpus(const std::filesystem::path& dir, const ValidityRules& rules) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw std::runtime_error("cannot read corpus directory: " + dir.string());

    std::vector<fs::path> files;
    fs::recursive_directory_iterator it(dir, ec);
    if (ec) throw std::runtime_error("cannot read corpus directory: " + dir.string() + ": " + ec.message());
    for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
        if (ec) throw std::runtime_error("error walking corpus directory: " + ec.message());
        if (!it->is_regular_file(ec)) continue;
        auto ext = it->path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (ext == ".txt" || ext == ".html" || ext == ".htm") files.push_back(it->path());
    }
    std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) { return a.generic_string() < b.generic_string(); });

    CorpusLoad result;
    std::unordered_set<std::uint64_t> seen;
    for (const auto& file : files) {
        std::ifstream in(file, std::ios::binary);
        if (!in) {
            ++result.skipped_unreadable;
            continue;
        }
        std::string raw{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
        if (in.bad()) {
            ++result.skipped_unreadable;
            continue;
        }
        Policy p;
        p.source_path = file.generic_string();
        p.id = fs::relative(file, dir, ec).generic_string();
        if (ec || p.id.empty()) p.id = p.source_path;
        p.raw_text = std::move(raw);
        p.sanitized_text = sanitize_markup(p.raw_text);
        if (!is_valid_policy(p.sanitized_text, rules).valid) {
            ++result.skipped_invalid;
            continue;
        }
        p.word_count = whitespace_word_count(p.sanitized_text);
        p.content_hash = content_hash(p.sanitized_text);
        if (!seen.insert(p.content_hash).second) {
            ++result.skipped_duplicate;
            continue;
        }
        result.policies.push_back(std::move(p));
    }
    return result;
}

}  // namespace privpol
