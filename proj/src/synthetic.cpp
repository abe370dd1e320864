#include "privpol/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "privpol/rng.hpp"

namespace privpol {

namespace {

struct WordGroup {
    const char* name;
    std::vector<std::string> words;
};

const std::vector<WordGroup>& vocabulary_groups() {
    static const std::vector<WordGroup> groups{
        {"function", {"we", "our", "us", "you", "your", "the", "a", "an", "and", "or", "to", "of", "in", "on", "for", "with",
                      "by", "from", "this", "that", "these", "it", "is", "are", "be", "will", "may", "can", "do", "does",
                      "as", "at", "any", "all", "such", "when", "which", "other", "its", "their", "time", "how", "also",
                      "only", "some", "about", "into", "through", "each"}},
        {"negation", {"not", "never", "no", "neither", "nor", "without", "none", "cannot"}},
        {"collect", {"collect", "collects", "gather", "obtain", "receive", "access", "use", "store", "process", "record",
                     "retain", "request", "save", "track", "read", "log", "capture", "acquire"}},
        {"purpose", {"provide", "improve", "services", "service", "app", "application", "features", "account", "support",
                     "personalize", "deliver", "experience", "users", "user", "information", "data", "personal", "operate",
                     "analytics", "communicate", "respond", "maintain"}},
        {"contact", {"email", "phone", "number", "address", "book", "contacts", "name", "names", "telephone", "mobile",
                     "contact", "addresses"}},
        {"location", {"location", "gps", "geo", "geolocation", "latitude", "longitude", "coordinates", "position", "precise",
                      "city", "region", "approximate"}},
        {"device", {"device", "ip", "identifier", "identifiers", "imei", "advertising", "id", "hardware", "serial", "mac",
                    "model", "operating"}},
        {"filler", {"update", "changes", "notify", "terms", "law", "children", "security", "encrypt", "protect", "payment",
                    "questions", "effective", "date", "agreement", "rights", "jurisdiction", "governed", "amend", "review",
                    "website", "links", "policy", "privacy", "legal", "reasonable", "measures", "unauthorized", "disclosure",
                    "compliance", "dispute", "explains", "handle", "inform", "please", "read", "carefully"}},
        {"hedge", {"might", "sometimes", "certain", "occasionally", "possibly", "limited", "aggregated", "anonymous", "partners",
                   "third", "party", "parties", "affiliates", "vendors", "circumstances", "applicable"}},
    };
    return groups;
}

const std::vector<std::string>& group(const char* name) {
    for (const auto& g : vocabulary_groups())
        if (std::string_view(g.name) == name) return g.words;
    throw std::logic_error("unknown word group");
}

const std::vector<std::string>& category_nouns(Category c) {
    switch (c) {
        case Category::contact: return group("contact");
        case Category::location: return group("location");
        case Category::device: return group("device");
    }
    return group("contact");
}

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
    return v[static_cast<std::size_t>(uniform_index(rng, v.size()))];
}

void push_words(std::vector<std::string>& out, std::string_view phrase) {
    std::size_t i = 0;
    while (i < phrase.size()) {
        const auto j = phrase.find(' ', i);
        const auto end = j == std::string_view::npos ? phrase.size() : j;
        if (end > i) out.emplace_back(phrase.substr(i, end - i));
        i = end + 1;
    }
}

std::string render(const std::vector<std::string>& words) {
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) out += ' ';
        out += w;
    }
    if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
    out += '.';
    return out;
}

void data_phrase(std::vector<std::string>& out, Category c, Rng& rng) {
    out.push_back(bernoulli(rng, 0.7) ? "your" : "the");
    const auto& nouns = category_nouns(c);
    const auto first = pick(nouns, rng);
    out.push_back(first);
    if (bernoulli(rng, 0.5)) {
        auto second = pick(nouns, rng);
        if (second != first) out.push_back(second);
    }
    if (bernoulli(rng, 0.4)) out.push_back(pick(std::vector<std::string>{"information", "data"}, rng));
}

void purpose_clause(std::vector<std::string>& out, Rng& rng) {
    static const std::vector<std::string> verbs{"provide", "improve", "personalize", "deliver", "support", "operate", "maintain"};
    static const std::vector<std::string> objects{"services", "service", "app", "features", "experience", "account", "application"};
    out.push_back("to");
    out.push_back(pick(verbs, rng));
    out.push_back(bernoulli(rng, 0.6) ? "our" : "the");
    out.push_back(pick(objects, rng));
}

void subject(std::vector<std::string>& out, Rng& rng) {
    static const std::vector<std::string> subjects{"we", "we", "our app", "the service", "our application", "this app"};
    push_words(out, pick(subjects, rng));
}

void hedge_prefix(std::vector<std::string>& out, Rng& rng) {
    static const std::vector<std::string> hedges{"in certain circumstances", "sometimes", "occasionally", "where applicable",
                                                 "in limited circumstances"};
    push_words(out, pick(hedges, rng));
}

void hedge_suffix(std::vector<std::string>& out, Rng& rng) {
    static const std::vector<std::string> tails{"with third party partners", "through our affiliates", "from certain vendors",
                                                "in aggregated form", "possibly with other parties"};
    push_words(out, pick(tails, rng));
}

}  // namespace

WordEmbedding synthetic_embedding(std::uint64_t seed, std::size_t dim) {
    if (dim < 2) throw std::invalid_argument("synthetic_embedding: dim must be at least 2");
    Rng rng(derive_seed(seed, "embedding"));
    const auto d = static_cast<Eigen::Index>(dim);
    std::vector<std::string> words;
    std::vector<Eigen::RowVectorXd> rows;
    std::set<std::string> seen;

    auto round6 = [](double x) { return std::round(x * 1e6) / 1e6; };

    for (const auto& g : vocabulary_groups()) {
        Eigen::RowVectorXd centroid(d);
        centroid(0) = 0.0;
        for (Eigen::Index k = 1; k < d; ++k) centroid(k) = standard_normal(rng);
        if (std::string_view(g.name) == "negation") centroid(0) = 8.0;
        for (const auto& w : g.words) {
            Eigen::RowVectorXd v(d);
            v(0) = centroid(0) + 0.1 * standard_normal(rng);
            for (Eigen::Index k = 1; k < d; ++k) v(k) = centroid(k) + 0.6 * standard_normal(rng);
            if (!seen.insert(w).second) continue;
            words.push_back(w);
            rows.push_back(v.unaryExpr(round6));
        }
    }
    RowMatrix m(static_cast<Eigen::Index>(rows.size()), d);
    for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i];
    return WordEmbedding(std::move(words), std::move(m));
}

std::string synthetic_statement(Answer truth, bool ambiguous, Category category, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::string> w;
    static const std::vector<std::string> aux{"", "", "may", "will", "can"};
    static const std::vector<std::string> negators{"do not", "does not", "will not", "never", "cannot", "do not ever"};

    if (truth == Answer::irrelevant) {
        static const std::vector<std::string> actions{"update", "review", "amend"};
        static const std::vector<std::string> things{"policy", "terms", "agreement"};
        switch (uniform_index(rng, 3)) {
            case 0:
                subject(w, rng);
                push_words(w, "may");
                w.push_back(pick(actions, rng));
                push_words(w, "this");
                w.push_back(pick(things, rng));
                push_words(w, "and notify you of changes");
                break;
            case 1:
                subject(w, rng);
                push_words(w, "use reasonable security measures to protect");
                push_words(w, bernoulli(rng, 0.5) ? "against unauthorized disclosure" : "your rights");
                break;
            default:
                push_words(w, "this");
                w.push_back(pick(things, rng));
                push_words(w, "is governed by the law of the applicable jurisdiction");
                break;
        }
        return render(w);
    }

    if (ambiguous) hedge_prefix(w, rng);
    subject(w, rng);
    if (truth == Answer::negative) {
        push_words(w, pick(negators, rng));
    } else if (const auto& a = pick(aux, rng); !a.empty()) {
        w.push_back(a);
    }
    w.push_back(pick(group("collect"), rng));
    data_phrase(w, category, rng);
    if (bernoulli(rng, 0.6)) purpose_clause(w, rng);
    if (ambiguous) hedge_suffix(w, rng);
    return render(w);
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticConfig& cfg) {
    if (!(cfg.nsr > 0.0 && cfg.nsr < 1.0)) throw std::invalid_argument("nsr must lie in (0, 1)");
    if (!(cfg.ambiguity >= 0.0 && cfg.ambiguity <= 1.0)) throw std::invalid_argument("ambiguity must lie in [0, 1]");
    if (!(cfg.irrelevant_rate >= 0.0 && cfg.irrelevant_rate < 1.0)) throw std::invalid_argument("irrelevant_rate must lie in [0, 1)");

    const auto n_neg = static_cast<std::size_t>(std::llround(cfg.nsr * static_cast<double>(cfg.n)));
    const auto n_irr = static_cast<std::size_t>(std::llround(cfg.irrelevant_rate * static_cast<double>(cfg.n)));
    if (n_neg + n_irr > cfg.n) throw std::invalid_argument("nsr + irrelevant_rate exceed the corpus size");

    std::vector<Answer> truths(cfg.n, Answer::positive);
    std::fill_n(truths.begin(), n_neg, Answer::negative);
    std::fill_n(truths.begin() + static_cast<std::ptrdiff_t>(n_neg), n_irr, Answer::irrelevant);
    Rng rng(derive_seed(cfg.seed, "corpus"));
    shuffle(truths, rng);

    SyntheticCorpus out;
    out.segments.reserve(cfg.n);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        char id[64];
        std::snprintf(id, sizeof id, "%s-%06zu", cfg.id_prefix.c_str(), i);
        const bool ambiguous = truths[i] != Answer::irrelevant && bernoulli(rng, cfg.ambiguity);
        Segment seg;
        seg.id = id;
        seg.policy_id = cfg.id_prefix;
        seg.category = cfg.category;
        seg.span_start = seg.span_end = i;
        seg.text = synthetic_statement(truths[i], ambiguous, cfg.category, derive_seed(cfg.seed, "statement", seg.id));
        out.truths.emplace(seg.id, SegmentTruth{truths[i], ambiguous});
        out.segments.push_back(std::move(seg));
    }
    return out;
}

Policy synthetic_policy(std::size_t n_sentences, std::uint64_t seed, const std::string& id) {
    Rng rng(derive_seed(seed, "policy"));
    std::string text = "This privacy policy explains how we collect and use your information, please read it carefully.";
    for (std::size_t i = 0; i < n_sentences; ++i) {
        const auto category = static_cast<Category>(uniform_index(rng, 3));
        const double r = uniform01(rng);
        const Answer truth = r < 0.25 ? Answer::irrelevant : (r < 0.45 ? Answer::negative : Answer::positive);
        text += ' ';
        text += synthetic_statement(truth, bernoulli(rng, 0.1), category, derive_seed(seed, "sentence", i));
    }
    Policy p;
    p.id = id;
    p.source_path = id;
    p.raw_text = text;
    p.sanitized_text = text;
    p.word_count = whitespace_word_count(text);
    p.content_hash = content_hash(text);
    return p;
}

}  // namespace privpol
