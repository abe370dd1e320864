#include "privpol/service.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>

#include "httplib.h"

namespace privpol {

std::string_view to_string(SessionState s) {
    switch (s) {
        case SessionState::awaiting_labels: return "awaiting_labels";
        case SessionState::training: return "training";
        case SessionState::finished: return "finished";
    }
    return "finished";
}

SurveyQuestions survey_questions(Category c) {
    std::string noun;
    switch (c) {
        case Category::contact: noun = "CONTACT"; break;
        case Category::location: noun = "LOCATION"; break;
        case Category::device: noun = "DEVICE ID"; break;
    }
    return {"Does the segment talk about FIRST PARTY data practice (collect/use information from users)?",
            "Does the segment claim to collect/use " + noun + " information?",
            "Did you pay close attention to the questions and answer them accordingly? You will receive full payment either way."};
}

struct LabelingService::Session {
    std::string id;
    std::unique_ptr<Experiment> exp;
    std::mutex mu;
    std::atomic<SessionState> state{SessionState::awaiting_labels};
    std::vector<Json> history;
    std::map<std::string, ApiResponse> tokens;
};

namespace {

ApiResponse error(int status, const std::string& message) { return {status, Json{{"error", message}}}; }

// Leading identifier of a validation message, e.g. "at" from "at must exceed 0.5".
std::string field_of(std::string_view message) {
    std::size_t n = 0;
    while (n < message.size() && (std::isalnum(static_cast<unsigned char>(message[n])) || message[n] == '_' || message[n] == '.')) ++n;
    return std::string(message.substr(0, n));
}

ApiResponse invalid(const std::invalid_argument& e) {
    return {400, Json{{"error", e.what()}, {"field", field_of(e.what())}}};
}

Json pending_json(const Experiment& exp, const SurveyQuestions& q) {
    Json items = Json::array();
    for (const auto& p : exp.pending()) {
        items.push_back(Json{{"segment_id", p.segment_id},
                             {"text", p.text},
                             {"labeling_iteration", p.labeling_iteration},
                             {"prior_worker_ids", p.prior_workers},
                             {"questions",
                              Json::array({Json{{"field", "q1_relevant"}, {"text", q.q1_relevant}},
                                           Json{{"field", "q2_collect"}, {"text", q.q2_collect}},
                                           Json{{"field", "honesty_ok"}, {"text", q.honesty_ok}}})},
                             {"answer_fields", Json::array({"q1_relevant", "q2_collect", "honesty_ok"})}});
    }
    return items;
}

SessionState state_of(const Experiment& exp) {
    return exp.finished() ? SessionState::finished : SessionState::awaiting_labels;
}

std::string token_of(const httplib::Request& req, const Json& body) {
    if (req.has_header("Idempotency-Key")) return req.get_header_value("Idempotency-Key");
    if (body.is_object()) {
        if (auto it = body.find("request_token"); it != body.end() && it->is_string()) return it->get<std::string>();
    }
    return {};
}

}  // namespace

LabelingService::LabelingService(std::shared_ptr<const WordEmbedding> emb, InputsProvider inputs,
                                 std::optional<std::filesystem::path> journal)
    : emb_(std::move(emb)), inputs_(std::move(inputs)), journal_path_(std::move(journal)) {
    if (!emb_) throw std::invalid_argument("service needs an embedding");
    if (journal_path_ && std::filesystem::exists(*journal_path_)) replay();
}

LabelingService::~LabelingService() = default;

std::size_t LabelingService::session_count() const {
    std::lock_guard lock(sessions_mu_);
    return sessions_.size();
}

std::shared_ptr<LabelingService::Session> LabelingService::find(const std::string& id) const {
    std::lock_guard lock(sessions_mu_);
    const auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

void LabelingService::journal(const Json& entry) {
    if (!journal_path_) return;
    std::lock_guard lock(journal_mu_);
    std::ofstream out(*journal_path_, std::ios::app);
    out << entry.dump() << '\n';
    out.flush();
    if (!out) throw std::runtime_error("cannot append to journal " + journal_path_->string());
}

void LabelingService::replay() {
    for_each_jsonl(*journal_path_, [&](const Json& e) {
        const auto op = e.at("op").get<std::string>();
        const auto token = e.value("token", std::string{});
        if (op == "create") {
            const auto r = do_create(e.at("config"), token, true);
            if (r.status != 201 || r.body.at("session_id") != e.at("session_id"))
                throw std::runtime_error("journal replay diverged at session " + e.at("session_id").dump());
            return;
        }
        auto s = find(e.at("session_id").get<std::string>());
        if (!s) throw std::runtime_error("journal names unknown session " + e.at("session_id").dump());
        const auto r = op == "labels" ? do_submit(*s, e.at("body"), token, true) : do_patch(*s, e.at("body"), token, true);
        if (r.status != 200) throw std::runtime_error("journal replay failed for session " + s->id);
    });
}

ApiResponse LabelingService::create_session(const Json& body, const std::string& token) { return do_create(body, token, false); }

ApiResponse LabelingService::do_create(const Json& body, const std::string& token, bool replaying) {
    std::lock_guard create_lock(create_mu_);
    if (!token.empty()) {
        std::lock_guard lock(sessions_mu_);
        if (auto it = create_tokens_.find(token); it != create_tokens_.end()) return it->second;
    }

    ExperimentConfig cfg;
    try {
        Json fields = body;
        if (fields.is_object()) fields.erase("request_token");
        cfg = experiment_config_from_json(fields);
    } catch (const std::invalid_argument& e) {
        return invalid(e);
    }

    auto session = std::make_shared<Session>();
    try {
        SimulatedInputs in = inputs_(cfg);
        SimulatedOracle oracle(in.truths, in.workers, oracle_seed(cfg.seed));
        session->exp = std::make_unique<Experiment>(cfg, std::move(in.pool), *emb_, std::move(in.test), std::move(in.truths));
        session->exp->bootstrap(oracle);
    } catch (const BootstrapPoolExhausted& e) {
        return error(422, e.what());
    } catch (const std::invalid_argument& e) {
        return invalid(e);
    }
    session->state = state_of(*session->exp);

    ApiResponse out;
    {
        std::lock_guard lock(sessions_mu_);
        char id[32];
        std::snprintf(id, sizeof id, "s%04zu", next_id_++);
        session->id = id;
        sessions_.emplace(session->id, session);
        out = {201, Json{{"session_id", session->id},
                         {"state", to_string(session->state.load())},
                         {"pending", session->exp->pending().size()},
                         {"config", to_json(session->exp->config())}}};
        if (!token.empty()) create_tokens_[token] = out;
    }
    if (!replaying) journal(Json{{"op", "create"}, {"session_id", session->id}, {"token", token}, {"config", to_json(cfg)}});
    return out;
}

ApiResponse LabelingService::get_batch(const std::string& id) {
    auto s = find(id);
    if (!s) return error(404, "session not found: " + id);
    if (s->state == SessionState::training) return error(409, "session is training");
    std::lock_guard lock(s->mu);
    if (s->state != SessionState::awaiting_labels) return error(409, "session is " + std::string(to_string(s->state.load())));
    const auto& exp = *s->exp;
    return {200, Json{{"session_id", s->id},
                      {"state", to_string(s->state.load())},
                      {"iteration", exp.records().size()},
                      {"category", to_string(exp.config().category)},
                      {"items", pending_json(exp, survey_questions(exp.config().category))}}};
}

ApiResponse LabelingService::submit_labels(const std::string& id, const Json& body, const std::string& token) {
    auto s = find(id);
    if (!s) return error(404, "session not found: " + id);
    std::unique_lock lock(s->mu, std::try_to_lock);
    if (!lock.owns_lock()) return error(409, "session busy");
    return do_submit(*s, body, token, false);
}

ApiResponse LabelingService::do_submit(Session& s, const Json& body, const std::string& token, bool replaying) {
    if (!token.empty()) {
        if (auto it = s.tokens.find(token); it != s.tokens.end()) return it->second;
    }
    if (s.state != SessionState::awaiting_labels) return error(409, "session is " + std::string(to_string(s.state.load())));

    const Json* list = &body;
    if (body.is_object()) {
        const auto it = body.find("responses");
        if (it == body.end()) return {400, Json{{"error", "missing field responses"}, {"field", "responses"}}};
        list = &*it;
    }
    if (!list->is_array()) return {400, Json{{"error", "responses must be an array"}, {"field", "responses"}}};

    std::map<std::string, std::vector<LabelResponse>> grouped;
    for (const auto& j : *list) {
        LabelResponse r;
        try {
            r = response_from_json(j);
        } catch (const std::invalid_argument& e) {
            return invalid(e);
        }
        if (r.segment_id.empty()) return {400, Json{{"error", "segment_id: missing"}, {"field", "segment_id"}}};
        grouped[r.segment_id].push_back(std::move(r));
    }
    if (auto offenders = s.exp->check_submission(grouped); !offenders.empty())
        return {422, Json{{"error", "submission rejected"}, {"offenders", offenders}}};

    s.state = SessionState::training;
    std::vector<ConsolidatedLabel> outcomes;
    try {
        outcomes = s.exp->submit(grouped);
    } catch (const std::exception& e) {
        s.state = SessionState::finished;
        return error(500, e.what());
    }
    s.state = state_of(*s.exp);

    Json out_outcomes = Json::array();
    for (const auto& o : outcomes) out_outcomes.push_back(to_json(o));
    ApiResponse out{200, Json{{"session_id", s.id},
                              {"state", to_string(s.state.load())},
                              {"outcomes", std::move(out_outcomes)},
                              {"metrics", to_json(s.exp->records().back())},
                              {"stop_reason", to_string(s.exp->stop_reason())}}};
    if (!token.empty()) s.tokens[token] = out;
    if (!replaying) journal(Json{{"op", "labels"}, {"session_id", s.id}, {"token", token}, {"body", body}});
    return out;
}

ApiResponse LabelingService::get_metrics(const std::string& id) {
    auto s = find(id);
    if (!s) return error(404, "session not found: " + id);
    std::lock_guard lock(s->mu);
    const auto& exp = *s->exp;
    Json records = Json::array();
    for (const auto& r : exp.records()) records.push_back(to_json(r));
    const double ar = exp.records().empty() ? 0.0 : exp.records().back().ar;
    return {200, Json{{"session_id", s->id},
                      {"state", to_string(s->state.load())},
                      {"stop_reason", to_string(exp.stop_reason())},
                      {"config", to_json(exp.config())},
                      {"records", std::move(records)},
                      {"csv", to_csv(exp.records())},
                      {"live",
                       Json{{"nsr_train", exp.current_nsr_train()},
                            {"nsr_pool", exp.current_nsr_pool()},
                            {"ar", ar},
                            {"le_spent", exp.le_spent()},
                            {"labels_aligned", exp.labeled_ids().size()},
                            {"pool_size", exp.pool_size()}}},
                      {"history", s->history}}};
}

ApiResponse LabelingService::patch_config(const std::string& id, const Json& body, const std::string& token) {
    auto s = find(id);
    if (!s) return error(404, "session not found: " + id);
    std::unique_lock lock(s->mu, std::try_to_lock);
    if (!lock.owns_lock()) return error(409, "session busy");
    return do_patch(*s, body, token, false);
}

ApiResponse LabelingService::do_patch(Session& s, const Json& body, const std::string& token, bool replaying) {
    if (!token.empty()) {
        if (auto it = s.tokens.find(token); it != s.tokens.end()) return it->second;
    }
    if (!body.is_object()) return error(400, "config update must be a JSON object");
    for (const auto& [key, _] : body.items()) {
        if (key != "strategy" && key != "at" && key != "request_token")
            return {400, Json{{"error", key + ": cannot change during a session"}, {"field", key}}};
    }
    if (s.state == SessionState::finished) return error(409, "session is finished");

    std::optional<StrategyKind> strategy;
    std::optional<double> at;
    try {
        if (auto it = body.find("strategy"); it != body.end()) {
            if (!it->is_string()) throw std::invalid_argument("strategy: wrong type");
            try {
                strategy = parse_strategy(it->get<std::string>());
            } catch (const std::invalid_argument& e) {
                throw std::invalid_argument(std::string("strategy: ") + e.what());
            }
        }
        if (auto it = body.find("at"); it != body.end()) {
            if (!it->is_number()) throw std::invalid_argument("at: wrong type");
            at = it->get<double>();
            validate_acceptance_threshold(*at);
        }
    } catch (const std::invalid_argument& e) {
        return invalid(e);
    }

    const auto effective = s.exp->records().size();
    if (strategy) {
        s.history.push_back(Json{{"effective_iteration", effective},
                                 {"field", "strategy"},
                                 {"from", to_string(s.exp->config().strategy)},
                                 {"to", to_string(*strategy)}});
        s.exp->set_strategy(*strategy);
    }
    if (at) {
        s.history.push_back(Json{{"effective_iteration", effective}, {"field", "at"}, {"from", s.exp->config().at}, {"to", *at}});
        s.exp->set_acceptance_threshold(*at);
    }
    ApiResponse out{200, Json{{"session_id", s.id}, {"history", s.history}}};
    if (!token.empty()) s.tokens[token] = out;
    if (!replaying) journal(Json{{"op", "config"}, {"session_id", s.id}, {"token", token}, {"body", body}});
    return out;
}

void LabelingService::attach(httplib::Server& server) {
    auto reply = [](httplib::Response& res, const ApiResponse& r) {
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    auto parse = [](const httplib::Request& req, Json& out) {
        if (req.body.empty()) {
            out = Json::object();
            return true;
        }
        out = Json::parse(req.body, nullptr, false);
        return !out.is_discarded();
    };

    server.Post("/sessions", [=, this](const httplib::Request& req, httplib::Response& res) {
        Json body;
        if (!parse(req, body)) return reply(res, error(400, "malformed JSON"));
        reply(res, create_session(body, token_of(req, body)));
    });
    server.Get(R"(/sessions/([^/]+)/batch)", [=, this](const httplib::Request& req, httplib::Response& res) {
        reply(res, get_batch(req.matches[1]));
    });
    server.Post(R"(/sessions/([^/]+)/labels)", [=, this](const httplib::Request& req, httplib::Response& res) {
        Json body;
        if (!parse(req, body)) return reply(res, error(400, "malformed JSON"));
        reply(res, submit_labels(req.matches[1], body, token_of(req, body)));
    });
    server.Get(R"(/sessions/([^/]+)/metrics)", [=, this](const httplib::Request& req, httplib::Response& res) {
        reply(res, get_metrics(req.matches[1]));
    });
    server.Patch(R"(/sessions/([^/]+)/config)", [=, this](const httplib::Request& req, httplib::Response& res) {
        Json body;
        if (!parse(req, body)) return reply(res, error(400, "malformed JSON"));
        reply(res, patch_config(req.matches[1], body, token_of(req, body)));
    });
}

bool serve(LabelingService& service, const std::string& host, int port) {
    httplib::Server server;
    service.attach(server);
    return server.listen(host, port);
}

}  // namespace privpol
