#include "privpol/segmenter.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "privpol/transport.hpp"

namespace privpol {

std::string_view to_string(Category c) {
    switch (c) {
        case Category::contact: return "contact";
        case Category::location: return "location";
        case Category::device: return "device";
    }
    return "contact";
}

Category parse_category(std::string_view s) {
    if (s == "contact") return Category::contact;
    if (s == "location") return Category::location;
    if (s == "device" || s == "device_id") return Category::device;
    throw std::invalid_argument("unknown category: " + std::string(s));
}

std::string_view to_string(SegmentStatus s) {
    switch (s) {
        case SegmentStatus::unlabeled: return "unlabeled";
        case SegmentStatus::published: return "published";
        case SegmentStatus::aligned: return "aligned";
        case SegmentStatus::discarded: return "discarded";
        case SegmentStatus::ambiguous: return "ambiguous";
        case SegmentStatus::irrelevant: return "irrelevant";
    }
    return "unlabeled";
}

SegmentStatus parse_segment_status(std::string_view s) {
    for (auto st : {SegmentStatus::unlabeled, SegmentStatus::published, SegmentStatus::aligned, SegmentStatus::discarded,
                    SegmentStatus::ambiguous, SegmentStatus::irrelevant}) {
        if (to_string(st) == s) return st;
    }
    throw std::invalid_argument("unknown segment status: " + std::string(s));
}

std::string_view to_string(BinaryLabel l) { return l == BinaryLabel::positive ? "positive" : "negative"; }

BinaryLabel parse_binary_label(std::string_view s) {
    if (s == "positive") return BinaryLabel::positive;
    if (s == "negative") return BinaryLabel::negative;
    throw std::invalid_argument("unknown label: " + std::string(s));
}

CategoryKeywords default_keywords(Category c) {
    switch (c) {
        case Category::contact: return {c, {"email", "phone number", "contact", "address book", "name"}};
        case Category::location: return {c, {"location", "gps", "geo", "latitude", "longitude"}};
        case Category::device: return {c, {"device", "ip address", "identifier", "imei", "advertising id"}};
    }
    return {c, {}};
}

namespace {

constexpr std::array<std::string_view, 14> kAbbreviations{
    "e.g.", "i.e.", "etc.", "inc.", "ltd.", "co.", "corp.", "mr.", "mrs.", "ms.", "dr.", "vs.", "no.", "u.s.",
};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

bool protected_abbreviation(std::string_view text, std::size_t dot) {
    std::size_t start = dot;
    while (start > 0 && !is_space(text[start - 1])) --start;
    std::string word(text.substr(start, dot - start + 1));
    std::transform(word.begin(), word.end(), word.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    // tolerate an opening bracket or quote glued to the word
    while (!word.empty() && (word.front() == '(' || word.front() == '"' || word.front() == '\'')) word.erase(word.begin());
    return std::find(kAbbreviations.begin(), kAbbreviations.end(), word) != kAbbreviations.end();
}

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

std::vector<Sentence> split_sentences(std::string_view text) {
    std::vector<Sentence> out;
    auto emit = [&](std::string_view piece) {
        auto t = trim(piece);
        if (t.empty()) return;
        Sentence s;
        s.index = out.size();
        s.tokens = tokenize(t);
        s.text = std::move(t);
        out.push_back(std::move(s));
    };

    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c != '.' && c != '!' && c != '?') continue;
        std::size_t k = i + 1;
        bool boundary = false;
        if (k >= text.size()) {
            boundary = true;
        } else if (is_space(text[k])) {
            while (k < text.size() && is_space(text[k])) ++k;
            boundary = k >= text.size() || std::isupper(static_cast<unsigned char>(text[k]));
        }
        if (boundary && c == '.' && protected_abbreviation(text, i)) boundary = false;
        if (!boundary) continue;
        emit(text.substr(start, i + 1 - start));
        start = i + 1;
    }
    emit(text.substr(start));
    return out;
}

bool category_matches(const Sentence& sentence, const CategoryKeywords& keywords) {
    const auto lower = lowercase(sentence.text);
    return std::any_of(keywords.keywords.begin(), keywords.keywords.end(),
                       [&](const std::string& k) { return lower.find(k) != std::string::npos; });
}

bool linkage_forward(const Sentence& sentence) {
    const auto t = trim(sentence.text);
    if (!t.empty() && (t.back() == ';' || t.back() == ':' || t.back() == '?')) return true;
    // cues match whole tokens
    static const std::array<std::string_view, 3> single{"include", "includes", "including"};
    for (const auto& tok : sentence.tokens) {
        if (std::find(single.begin(), single.end(), tok) != single.end()) return true;
    }
    for (std::size_t i = 0; i + 1 < sentence.tokens.size(); ++i) {
        const auto& a = sentence.tokens[i];
        const auto& b = sentence.tokens[i + 1];
        if ((a == "for" && b == "example") || (a == "such" && b == "as") || (a == "as" && b == "follows")) return true;
    }
    return false;
}

double segment_threshold(std::span<const double> distances, double c) {
    if (distances.empty()) throw NoAdjacentPairs();
    const double n = static_cast<double>(distances.size());
    const double mean = std::accumulate(distances.begin(), distances.end(), 0.0) / n;
    double ss = 0.0;
    for (double d : distances) ss += (d - mean) * (d - mean);
    return mean + c * std::sqrt(ss / n);
}

std::vector<double> adjacent_distances(const std::vector<Sentence>& sentences, const WordEmbedding& emb) {
    if (sentences.size() < 2) return {};
    std::vector<std::optional<NBowDoc>> docs;
    docs.reserve(sentences.size());
    for (const auto& s : sentences) docs.push_back(nbow(emb, s.tokens));

    std::vector<std::optional<double>> raw(sentences.size() - 1);
    double sum = 0.0;
    std::size_t computable = 0;
    for (std::size_t i = 0; i + 1 < sentences.size(); ++i) {
        if (!docs[i] || !docs[i + 1]) continue;
        raw[i] = wmd(*docs[i], *docs[i + 1], emb);
        sum += *raw[i];
        ++computable;
    }
    const double fill = computable > 0 ? sum / static_cast<double>(computable) : 0.0;
    std::vector<double> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i].value_or(fill);
    return out;
}

std::vector<std::size_t> topic_boundaries(const std::vector<Sentence>& sentences, std::span<const double> distances, double c) {
    std::vector<std::size_t> out;
    if (distances.empty()) return out;
    const double st = segment_threshold(distances, c);
    for (std::size_t i = 0; i < distances.size(); ++i) {
        if (distances[i] > st && !linkage_forward(sentences[i])) out.push_back(i);
    }
    return out;
}

std::vector<Segment> segment_policy(const Policy& policy, const CategoryKeywords& keywords, const WordEmbedding& emb, double c) {
    const auto sentences = split_sentences(policy.sanitized_text);
    if (sentences.empty()) return {};
    const auto distances = adjacent_distances(sentences, emb);
    const auto cuts = topic_boundaries(sentences, distances, c);

    std::vector<Segment> out;
    std::size_t run_start = 0;
    auto close_run = [&](std::size_t run_end) {
        bool matches = false;
        for (std::size_t i = run_start; i <= run_end && !matches; ++i) matches = category_matches(sentences[i], keywords);
        if (matches) {
            Segment seg;
            char suffix[32];
            std::snprintf(suffix, sizeof suffix, "%05zu", run_start);
            seg.id = policy.id + "#" + std::string(to_string(keywords.category)) + "-" + suffix;
            seg.policy_id = policy.id;
            seg.category = keywords.category;
            seg.span_start = run_start;
            seg.span_end = run_end;
            for (std::size_t i = run_start; i <= run_end; ++i) {
                if (!seg.text.empty()) seg.text += ' ';
                seg.text += sentences[i].text;
            }
            out.push_back(std::move(seg));
        }
        run_start = run_end + 1;
    };
    for (std::size_t cut : cuts) close_run(cut);
    close_run(sentences.size() - 1);
    return out;
}

}  // namespace privpol
