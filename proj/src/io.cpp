#include "privpol/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace privpol {

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

std::uint64_t parse_hash_hex(std::string_view s) {
    if (s.size() != 16) throw std::invalid_argument("content_hash must be 16 hex digits");
    std::uint64_t out = 0;
    for (char c : s) {
        out <<= 4;
        if (c >= '0' && c <= '9') out |= static_cast<std::uint64_t>(c - '0');
        else if (c >= 'a' && c <= 'f') out |= static_cast<std::uint64_t>(c - 'a' + 10);
        else if (c >= 'A' && c <= 'F') out |= static_cast<std::uint64_t>(c - 'A' + 10);
        else throw std::invalid_argument("content_hash must be 16 hex digits");
    }
    return out;
}

namespace {

// Reads an optional field, wrapping type errors so they name the field.
template <typename T>
void read_field(const Json& j, const char* name, T& out, const std::string& prefix = "") {
    const auto it = j.find(name);
    if (it == j.end() || it->is_null()) return;
    try {
        out = it->get<T>();
    } catch (const Json::exception&) {
        throw std::invalid_argument(prefix + name + ": wrong type");
    }
}

template <typename T>
T required(const Json& j, const char* name) {
    const auto it = j.find(name);
    if (it == j.end()) throw std::invalid_argument(std::string("missing field ") + name);
    try {
        return it->get<T>();
    } catch (const Json::exception&) {
        throw std::invalid_argument(std::string(name) + ": wrong type");
    }
}

Answer parse_answer(std::string_view s) {
    if (s == "positive") return Answer::positive;
    if (s == "negative") return Answer::negative;
    if (s == "irrelevant") return Answer::irrelevant;
    throw std::invalid_argument("unknown truth: " + std::string(s));
}

}  // namespace

Json to_json(const Policy& p) {
    return Json{{"id", p.id},
                {"source_path", p.source_path},
                {"word_count", p.word_count},
                {"content_hash", hash_hex(p.content_hash)},
                {"sanitized_text", p.sanitized_text}};
}

Policy policy_from_json(const Json& j) {
    Policy p;
    p.id = required<std::string>(j, "id");
    read_field(j, "source_path", p.source_path);
    p.sanitized_text = required<std::string>(j, "sanitized_text");
    p.raw_text = p.sanitized_text;
    p.word_count = whitespace_word_count(p.sanitized_text);
    p.content_hash = content_hash(p.sanitized_text);
    return p;
}

Json to_json(const Segment& s) {
    Json j{{"id", s.id},
           {"policy_id", s.policy_id},
           {"category", to_string(s.category)},
           {"span_start", s.span_start},
           {"span_end", s.span_end},
           {"text", s.text},
           {"status", to_string(s.status)}};
    j["label"] = s.label ? Json(to_string(*s.label)) : Json(nullptr);
    return j;
}

Segment segment_from_json(const Json& j) {
    Segment s;
    s.id = required<std::string>(j, "id");
    read_field(j, "policy_id", s.policy_id);
    s.category = parse_category(required<std::string>(j, "category"));
    read_field(j, "span_start", s.span_start);
    read_field(j, "span_end", s.span_end);
    s.text = required<std::string>(j, "text");
    if (auto it = j.find("status"); it != j.end() && !it->is_null()) s.status = parse_segment_status(it->get<std::string>());
    if (auto it = j.find("label"); it != j.end() && !it->is_null()) s.label = parse_binary_label(it->get<std::string>());
    return s;
}

Json truth_to_json(const std::string& segment_id, const SegmentTruth& t) {
    return Json{{"segment_id", segment_id}, {"truth", to_string(t.truth)}, {"ambiguous", t.ambiguous}};
}

std::pair<std::string, SegmentTruth> truth_from_json(const Json& j) {
    SegmentTruth t;
    t.truth = parse_answer(required<std::string>(j, "truth"));
    read_field(j, "ambiguous", t.ambiguous);
    return {required<std::string>(j, "segment_id"), t};
}

Json to_json(const LabelResponse& r) {
    return Json{{"segment_id", r.segment_id},
                {"worker_id", r.worker_id},
                {"q1_relevant", r.q1_relevant},
                {"q2_collect", r.q2_collect},
                {"honesty_ok", r.honesty_ok}};
}

LabelResponse response_from_json(const Json& j) {
    if (!j.is_object()) throw std::invalid_argument("response must be an object");
    LabelResponse r;
    read_field(j, "segment_id", r.segment_id);
    r.worker_id = required<std::string>(j, "worker_id");
    r.q1_relevant = required<bool>(j, "q1_relevant");
    r.q2_collect = required<bool>(j, "q2_collect");
    r.honesty_ok = required<bool>(j, "honesty_ok");
    return r;
}

Json to_json(const ConsolidatedLabel& c) {
    return Json{{"segment_id", c.segment_id}, {"outcome", to_string(c.outcome)}, {"ap", c.ap}, {"n_responses", c.n_responses}};
}

Json to_json(const HitBatch& b) {
    Json responses = Json::object();
    for (const auto& [id, rs] : b.responses) {
        Json arr = Json::array();
        for (const auto& r : rs) arr.push_back(to_json(r));
        responses[id] = std::move(arr);
    }
    return Json{{"batch_id", b.batch_id},
                {"segment_ids", b.segment_ids},
                {"labeling_iteration", b.labeling_iteration},
                {"responses", std::move(responses)}};
}

HitBatch hit_batch_from_json(const Json& j) {
    HitBatch b;
    b.batch_id = required<std::size_t>(j, "batch_id");
    b.segment_ids = required<std::vector<std::string>>(j, "segment_ids");
    b.labeling_iteration = required<std::map<std::string, int>>(j, "labeling_iteration");
    const auto responses = required<Json>(j, "responses");
    for (const auto& [id, arr] : responses.items()) {
        auto& out = b.responses[id];
        for (const auto& r : arr) out.push_back(response_from_json(r));
    }
    return b;
}

Json to_json(const TrainConfig& c) {
    return Json{{"learning_rate", c.learning_rate},
                {"batch_size", c.batch_size},
                {"epochs", c.epochs},
                {"l2", c.l2},
                {"optimizer", c.optimizer == OptimizerKind::adam ? "adam" : "sgd"},
                {"beta1", c.beta1},
                {"beta2", c.beta2},
                {"adam_epsilon", c.adam_epsilon}};
}

TrainConfig train_config_from_json(const Json& j, const TrainConfig& defaults) {
    TrainConfig c = defaults;
    if (!j.is_object()) throw std::invalid_argument("train config must be an object");
    read_field(j, "learning_rate", c.learning_rate);
    read_field(j, "batch_size", c.batch_size);
    read_field(j, "epochs", c.epochs);
    read_field(j, "l2", c.l2);
    read_field(j, "beta1", c.beta1);
    read_field(j, "beta2", c.beta2);
    read_field(j, "adam_epsilon", c.adam_epsilon);
    if (auto it = j.find("optimizer"); it != j.end()) {
        const auto s = it->get<std::string>();
        if (s == "adam") c.optimizer = OptimizerKind::adam;
        else if (s == "sgd") c.optimizer = OptimizerKind::sgd;
        else throw std::invalid_argument("optimizer: unknown value " + s);
    }
    return c;
}

Json to_json(const LinearModel& m) {
    return Json{{"dim", m.dim()},
                {"weights", std::vector<double>(m.weights.data(), m.weights.data() + m.weights.size())},
                {"bias", m.bias},
                {"hyper", to_json(m.hyper)},
                {"train_seed", m.train_seed}};
}

LinearModel model_from_json(const Json& j) {
    const auto w = required<std::vector<double>>(j, "weights");
    const auto dim = required<std::size_t>(j, "dim");
    if (w.size() != dim) throw std::invalid_argument("weights: length does not match dim");
    LinearModel m;
    m.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    m.bias = required<double>(j, "bias");
    if (auto it = j.find("hyper"); it != j.end()) m.hyper = train_config_from_json(*it);
    read_field(j, "train_seed", m.train_seed);
    return m;
}

Json to_json(const IterationRecord& r) {
    return Json{{"iteration", r.iteration}, {"le_spent", r.le_spent}, {"labels_aligned", r.labels_aligned},
                {"nsr_train", r.nsr_train}, {"nsr_pool", r.nsr_pool},   {"ar", r.ar},
                {"accuracy", r.accuracy},   {"precision", r.precision}, {"recall", r.recall},
                {"f1", r.f1},               {"mcc", r.mcc}};
}

Json to_json(const ExperimentConfig& c) {
    Json j{{"category", to_string(c.category)},
           {"strategy", to_string(c.strategy)},
           {"at", c.at},
           {"relabel_mode", to_string(c.relabel_mode)},
           {"bootstrap_labels", c.bootstrap_labels},
           {"al_batch_requested", c.al_batch_requested},
           {"al_batch_published", c.al_batch_published()},
           {"expected_ar", c.expected_ar},
           {"bootstrap_train", to_json(c.bootstrap_train)},
           {"al_train", to_json(c.al_train)},
           {"le_budget", c.le_budget},
           {"eer_subsample", c.eer_subsample},
           {"seed", c.seed}};
    j["goals"] = c.goals ? Json{{"mcc", c.goals->mcc}, {"f1", c.goals->f1}} : Json(nullptr);
    return j;
}

ExperimentConfig experiment_config_from_json(const Json& j, const ExperimentConfig& defaults) {
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    ExperimentConfig c = defaults;
    auto enum_field = [&](const char* name, auto parse, auto& out) {
        const auto it = j.find(name);
        if (it == j.end() || it->is_null()) return;
        if (!it->is_string()) throw std::invalid_argument(std::string(name) + ": wrong type");
        try {
            out = parse(it->get<std::string>());
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(std::string(name) + ": " + e.what());
        }
    };
    enum_field("category", parse_category, c.category);
    enum_field("strategy", parse_strategy, c.strategy);
    enum_field("relabel_mode", parse_relabel_mode, c.relabel_mode);
    read_field(j, "at", c.at);
    read_field(j, "bootstrap_labels", c.bootstrap_labels);
    read_field(j, "al_batch_requested", c.al_batch_requested);
    read_field(j, "expected_ar", c.expected_ar);
    read_field(j, "le_budget", c.le_budget);
    read_field(j, "eer_subsample", c.eer_subsample);
    read_field(j, "seed", c.seed);
    if (auto it = j.find("bootstrap_train"); it != j.end()) c.bootstrap_train = train_config_from_json(*it, c.bootstrap_train);
    if (auto it = j.find("al_train"); it != j.end()) c.al_train = train_config_from_json(*it, c.al_train);
    if (auto it = j.find("goals"); it != j.end()) {
        if (it->is_null()) {
            c.goals.reset();
        } else {
            StopGoals g = c.goals.value_or(StopGoals{});
            read_field(*it, "mcc", g.mcc, "goals.");
            read_field(*it, "f1", g.f1, "goals.");
            c.goals = g;
        }
    }
    validate(c);
    return c;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void for_each_jsonl(const std::filesystem::path& path, const std::function<void(const Json&)>& fn) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        try {
            fn(j);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& rows) {
    std::string out;
    for (const auto& r : rows) {
        out += r.dump();
        out += '\n';
    }
    write_file(path, out);
}

std::vector<Segment> read_segments(const std::filesystem::path& path) {
    std::vector<Segment> out;
    for_each_jsonl(path, [&](const Json& j) { out.push_back(segment_from_json(j)); });
    return out;
}

void write_segments(const std::filesystem::path& path, const std::vector<Segment>& segments) {
    std::vector<Json> rows;
    rows.reserve(segments.size());
    for (const auto& s : segments) rows.push_back(to_json(s));
    write_jsonl(path, rows);
}

std::map<std::string, SegmentTruth> read_truths(const std::filesystem::path& path) {
    std::map<std::string, SegmentTruth> out;
    for_each_jsonl(path, [&](const Json& j) { out.insert(truth_from_json(j)); });
    return out;
}

void write_truths(const std::filesystem::path& path, const std::map<std::string, SegmentTruth>& truths) {
    std::vector<Json> rows;
    rows.reserve(truths.size());
    for (const auto& [id, t] : truths) rows.push_back(truth_to_json(id, t));
    write_jsonl(path, rows);
}

}  // namespace privpol
