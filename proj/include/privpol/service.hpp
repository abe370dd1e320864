#pragma once

// Live labeling sessions over HTTP. Each session wraps one Experiment; the
// bootstrap runs against the simulated crowd, later batches wait for a client.

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "privpol/experiment.hpp"
#include "privpol/io.hpp"

namespace httplib {
class Server;
}

namespace privpol {

enum class SessionState { awaiting_labels, training, finished };
std::string_view to_string(SessionState s);

/// Survey wording with the category substituted.
struct SurveyQuestions {
    std::string q1_relevant, q2_collect, honesty_ok;
};
SurveyQuestions survey_questions(Category c);

struct ApiResponse {
    int status = 200;
    Json body;
};

/// Supplies pool, truths, test set and worker pool for a new session's config.
using InputsProvider = std::function<SimulatedInputs(const ExperimentConfig&)>;

class LabelingService {
public:
    /// With a journal path, every accepted mutation is appended there and
    /// existing entries are replayed on construction.
    LabelingService(std::shared_ptr<const WordEmbedding> emb, InputsProvider inputs,
                    std::optional<std::filesystem::path> journal = std::nullopt);
    ~LabelingService();

    // `token` is the client's request token; a repeated token returns the
    // first response without acting again.
    ApiResponse create_session(const Json& body, const std::string& token = "");
    ApiResponse get_batch(const std::string& id);
    ApiResponse submit_labels(const std::string& id, const Json& body, const std::string& token = "");
    ApiResponse get_metrics(const std::string& id);
    ApiResponse patch_config(const std::string& id, const Json& body, const std::string& token = "");

    /// Registers the five endpoints. Request tokens come from the
    /// Idempotency-Key header or a "request_token" body field.
    void attach(httplib::Server& server);

    std::size_t session_count() const;

private:
    struct Session;

    std::shared_ptr<Session> find(const std::string& id) const;
    ApiResponse do_create(const Json& body, const std::string& token, bool replaying);
    ApiResponse do_submit(Session& s, const Json& body, const std::string& token, bool replaying);
    ApiResponse do_patch(Session& s, const Json& body, const std::string& token, bool replaying);
    void journal(const Json& entry);
    void replay();

    std::shared_ptr<const WordEmbedding> emb_;
    InputsProvider inputs_;
    std::optional<std::filesystem::path> journal_path_;

    mutable std::mutex sessions_mu_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::map<std::string, ApiResponse> create_tokens_;
    std::size_t next_id_ = 1;
    std::mutex create_mu_;
    std::mutex journal_mu_;
};

/// Blocks serving `service` until the server is stopped.
bool serve(LabelingService& service, const std::string& host, int port);

}  // namespace privpol
