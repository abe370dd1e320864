#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "privpol/segmenter.hpp"

namespace privpol {

/// Answer implied by one survey response.
enum class Answer { irrelevant, negative, positive };
enum class Outcome { positive, negative, irrelevant, unaligned };

std::string_view to_string(Answer a);
std::string_view to_string(Outcome o);
Outcome parse_outcome(std::string_view s);

constexpr std::size_t kWorkersPerSegment = 5;
constexpr int kMaxLabelingIterations = 3;
constexpr double kDefaultAcceptanceThreshold = 0.8;
constexpr double kHonestyYesRate = 0.9963;

struct WorkerProfile {
    std::string id;
    double competence = 0.9;  // in [0.5, 1]
    double approval_rate = 0.95;
    int hits_approved = 100;
};

/// Approval rate above 85% and more than 50 approved HITs.
bool eligible(const WorkerProfile& w);

/// Workers w0000.. with competence ~ U[competence_lo, competence_hi].
std::vector<WorkerProfile> make_worker_pool(std::size_t n, std::uint64_t seed, double competence_lo = 0.8, double competence_hi = 0.98);

struct LabelResponse {
    std::string worker_id;
    std::string segment_id;
    bool q1_relevant = true;
    bool q2_collect = true;
    bool honesty_ok = true;
};

Answer answer_of(const LabelResponse& r);

struct Agreement {
    Answer modal = Answer::irrelevant;
    double ap = 0.0;
    std::size_t usable = 0;
    std::size_t count_positive = 0, count_negative = 0, count_irrelevant = 0;
};

class NoUsableResponses : public std::invalid_argument {
public:
    NoUsableResponses() : std::invalid_argument("no usable responses") {}
};

/// Drops responses that failed the honesty question, then takes the modal
/// answer. ap = modal count / usable responses. On a tie positive beats
/// negative beats irrelevant; a tie never clears a threshold above 0.5.
Agreement agreement(std::span<const LabelResponse> responses);

struct ConsolidatedLabel {
    std::string segment_id;
    Outcome outcome = Outcome::unaligned;
    double ap = 0.0;
    std::size_t n_responses = 0;
};

/// at must lie in (0.5, 1].
ConsolidatedLabel consolidate(std::span<const LabelResponse> responses, double at);

void validate_acceptance_threshold(double at);

/// Hidden truth of a segment, simulation only.
struct SegmentTruth {
    Answer truth = Answer::positive;
    bool ambiguous = false;
};

class WorkerPoolExhausted : public std::runtime_error {
public:
    WorkerPoolExhausted() : std::runtime_error("worker pool exhausted") {}
};

/// Five eligible workers outside `exclude` each answer the survey. A worker
/// passes the honesty question with probability 0.9963, answers Q1 correctly
/// with probability = competence, and answers Q2 correctly with probability =
/// competence unless the segment is ambiguous, where Q2 is a fair coin.
std::vector<LabelResponse> simulate_responses(std::string_view segment_id, const SegmentTruth& truth,
                                              std::span<const WorkerProfile> workers, const std::set<std::string>& exclude,
                                              std::uint64_t seed);

/// Ambiguity flag for a segment drawn at the given rate; stable per (seed, id).
bool draw_ambiguous(double rate, std::uint64_t seed, std::string_view segment_id);

enum class RelabelMode { label_and_discard, incremental_relabel };
std::string_view to_string(RelabelMode m);
RelabelMode parse_relabel_mode(std::string_view s);

enum class UnalignedAction { discard, republish, mark_ambiguous };

/// What to do with a segment whose latest consolidation (after
/// `labeling_iteration` rounds) is unaligned.
UnalignedAction handle_unaligned(RelabelMode mode, int labeling_iteration, int max_iterations = kMaxLabelingIterations);

/// Fraction of published segments whose outcome is positive or negative.
double alignment_rate(std::span<const ConsolidatedLabel> outcomes);

/// Supplies five responses for a published segment.
class Responder {
public:
    virtual ~Responder() = default;
    virtual std::vector<LabelResponse> respond(const std::string& segment_id, int labeling_iteration,
                                               const std::set<std::string>& exclude) = 0;
};

/// Crowd simulation over a fixed worker pool and hidden truths. Responses are a
/// pure function of (seed, segment id, labeling iteration, exclusions).
class SimulatedOracle : public Responder {
public:
    SimulatedOracle(std::map<std::string, SegmentTruth> truths, std::vector<WorkerProfile> workers, std::uint64_t seed);

    std::vector<LabelResponse> respond(const std::string& segment_id, int labeling_iteration,
                                       const std::set<std::string>& exclude) override;

    const std::map<std::string, SegmentTruth>& truths() const { return truths_; }
    const std::vector<WorkerProfile>& workers() const { return workers_; }

private:
    std::map<std::string, SegmentTruth> truths_;
    std::vector<WorkerProfile> workers_;
    std::uint64_t seed_;
};

/// One published batch and the responses it received.
struct HitBatch {
    std::size_t batch_id = 0;
    std::vector<std::string> segment_ids;
    std::map<std::string, int> labeling_iteration;  // N for each segment in this publication
    std::map<std::string, std::vector<LabelResponse>> responses;
};

/// Accumulated crowd state for every segment that has been published.
struct SegmentLedgerEntry {
    int labeling_iteration = 0;
    std::vector<LabelResponse> responses;  // all rounds
    std::set<std::string> workers;
};

class LabelLedger {
public:
    /// Records one round of responses for a segment; throws std::invalid_argument
    /// on a repeated worker or a response for another segment.
    void add_round(const std::string& segment_id, const std::vector<LabelResponse>& responses);

    const SegmentLedgerEntry* find(const std::string& segment_id) const;
    int labeling_iteration(const std::string& segment_id) const;
    std::set<std::string> workers_for(const std::string& segment_id) const;

    /// Responses recorded so far (one LE unit each).
    std::size_t effort() const { return effort_; }
    const std::map<std::string, SegmentLedgerEntry>& entries() const { return entries_; }

private:
    std::map<std::string, SegmentLedgerEntry> entries_;
    std::size_t effort_ = 0;
};

}  // namespace privpol
