#pragma once

// Active-learning experiments: bootstrap, select -> label -> consolidate ->
// retrain, per-iteration metrics, and the derived statistics over curves.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "privpol/classifier.hpp"
#include "privpol/embedding.hpp"
#include "privpol/oracle.hpp"
#include "privpol/segmenter.hpp"
#include "privpol/strategies.hpp"

namespace privpol {

struct StopGoals {
    double mcc = 0.2;
    double f1 = 0.70;
};

struct ExperimentConfig {
    Category category = Category::contact;
    StrategyKind strategy = StrategyKind::random;
    double at = kDefaultAcceptanceThreshold;
    RelabelMode relabel_mode = RelabelMode::label_and_discard;
    std::size_t bootstrap_labels = 100;
    std::size_t al_batch_requested = 30;
    double expected_ar = 0.73;
    TrainConfig bootstrap_train{};
    TrainConfig al_train{.batch_size = 8};
    std::size_t le_budget = 8000;
    /// Stop once both goals are exceeded; nullopt runs until budget or pool run out.
    std::optional<StopGoals> goals = StopGoals{};
    double eer_subsample = 0.5;
    std::uint64_t seed = 1;

    /// ceil(requested / expected_ar); 30 / 0.73 -> 42.
    std::size_t al_batch_published() const;
    /// Segments to publish for new selections in one AL iteration.
    std::size_t new_per_iteration() const;
};

/// Throws std::invalid_argument with a message starting with the field name
/// (except for at, which uses the oracle's wording).
void validate(const ExperimentConfig& cfg);

struct IterationRecord {
    std::size_t iteration = 0;
    std::size_t le_spent = 0;
    std::size_t labels_aligned = 0;
    double nsr_train = 0, nsr_pool = 0, ar = 0;
    double accuracy = 0, precision = 0, recall = 0, f1 = 0, mcc = 0;

    bool operator==(const IterationRecord&) const = default;
};

extern const char* const kRecordCsvHeader;
std::string to_csv(const std::vector<IterationRecord>& records);
std::vector<IterationRecord> parse_records_csv(std::string_view csv);

enum class StopReason { none, budget, goals, pool_exhausted };
std::string_view to_string(StopReason r);

/// Raised when the pool runs dry before the bootstrap quota of aligned labels.
/// Carries the record of whatever could be trained.
class BootstrapPoolExhausted : public std::runtime_error {
public:
    explicit BootstrapPoolExhausted(std::vector<IterationRecord> partial)
        : std::runtime_error("pool exhausted during bootstrap"), partial_(std::move(partial)) {}
    const std::vector<IterationRecord>& partial() const { return partial_; }

private:
    std::vector<IterationRecord> partial_;
};

/// Raised by Experiment::submit; the experiment is left untouched.
class SubmissionRejected : public std::invalid_argument {
public:
    explicit SubmissionRejected(std::vector<std::string> offenders);
    const std::vector<std::string>& offenders() const { return offenders_; }

private:
    std::vector<std::string> offenders_;
};

struct PendingItem {
    std::string segment_id;
    std::string text;
    int labeling_iteration = 1;  // N of this publication
    std::set<std::string> prior_workers;
};

/// Featurized test segments with binary labels; irrelevant and unfeaturizable
/// segments are skipped.
Dataset make_test_set(const std::vector<Segment>& segments, const std::map<std::string, SegmentTruth>& truths,
                      const WordEmbedding& emb);

/// One experiment as an explicit state machine, so the same loop can be driven
/// in-process or one HTTP request at a time.
class Experiment {
public:
    /// Segments that cannot be featurized are dropped from the pool. `truths`
    /// is optional and only feeds nsr_pool; without it the model's estimate is used.
    Experiment(ExperimentConfig cfg, std::vector<Segment> pool, const WordEmbedding& emb, Dataset test,
               std::map<std::string, SegmentTruth> truths = {});

    /// Random bootstrap through `oracle`, initial training, iteration-0 record,
    /// then the first selection. Throws BootstrapPoolExhausted.
    void bootstrap(Responder& oracle);

    bool bootstrapped() const { return bootstrapped_; }
    bool finished() const { return stop_ != StopReason::none; }
    StopReason stop_reason() const { return stop_; }

    /// The published batch awaiting responses; empty once finished.
    const std::vector<PendingItem>& pending() const { return pending_; }

    /// Responses keyed by segment id, exactly 5 per pending segment from workers
    /// who have not answered it before. Consolidates, handles unaligned
    /// segments, retrains, records, and selects the next batch.
    std::vector<ConsolidatedLabel> submit(const std::map<std::string, std::vector<LabelResponse>>& responses);

    /// Checks a submission without applying it; returns the offenders.
    std::vector<std::string> check_submission(const std::map<std::string, std::vector<LabelResponse>>& responses) const;

    /// Staged; applied after the current batch has been consolidated.
    void set_strategy(StrategyKind s);
    void set_acceptance_threshold(double at);

    const ExperimentConfig& config() const { return cfg_; }
    const std::vector<IterationRecord>& records() const { return records_; }
    const LinearModel& model() const { return model_; }
    const LabelLedger& ledger() const { return ledger_; }
    /// Batch 0 holds every bootstrap publication; batch i the i-th AL batch.
    const std::vector<HitBatch>& batches() const { return batches_; }
    std::size_t le_spent() const { return ledger_.effort(); }
    std::size_t pool_size() const { return unlabeled_.size(); }
    std::size_t dropped_unfeaturizable() const { return dropped_; }
    std::vector<std::string> labeled_ids() const;
    std::vector<std::string> unlabeled_ids() const;
    SegmentStatus status(const std::string& segment_id) const;
    double current_nsr_train() const;
    double current_nsr_pool() const;

private:
    struct Resolution {
        ConsolidatedLabel label;
        bool aligned = false;
        bool carry = false;
    };

    std::size_t index_of(const std::string& id) const;
    Resolution resolve(std::size_t idx, const std::vector<LabelResponse>& round);
    Dataset labeled_dataset() const;
    void retrain_and_record(const TrainConfig& cfg, double ar);
    void apply_staged();
    void prepare_next();
    void remove_from_pool(std::size_t idx);

    ExperimentConfig cfg_;
    std::vector<Segment> segments_;
    RowMatrix features_;
    std::map<std::string, std::size_t> index_;
    Dataset test_;
    std::map<std::string, SegmentTruth> truths_;
    std::size_t dropped_ = 0;

    std::set<std::size_t> unlabeled_;
    std::vector<std::size_t> labeled_;
    std::vector<double> labeled_y_;
    std::vector<SegmentStatus> status_;
    std::vector<std::size_t> carryover_;
    LabelLedger ledger_;
    std::vector<HitBatch> batches_;
    LinearModel model_;
    std::vector<IterationRecord> records_;
    std::vector<PendingItem> pending_;
    std::size_t iteration_ = 0;
    bool bootstrapped_ = false;
    StopReason stop_ = StopReason::none;

    std::optional<StrategyKind> staged_strategy_;
    std::optional<double> staged_at_;
};

/// Bootstrap plus the AL loop against one responder until a stop condition.
std::vector<IterationRecord> run_experiment(const ExperimentConfig& cfg, std::vector<Segment> pool, const WordEmbedding& emb,
                                            Dataset test, Responder& oracle, std::map<std::string, SegmentTruth> truths = {});

/// Drives a started experiment to completion with `oracle`.
void drive(Experiment& exp, Responder& oracle);

/// negatives / total.
double nsr(std::span<const BinaryLabel> labels);
double nsr(std::size_t negatives, std::size_t positives);

enum class Metric { accuracy, f1, mcc };
Metric parse_metric(std::string_view s);
double metric_of(const IterationRecord& r, Metric m);

/// First aligned-label count at which the curve reaches target; nullopt if never.
std::optional<std::size_t> labels_to_reach(const std::vector<IterationRecord>& curve, double target, Metric metric);

/// n_AL / n_BASE. Throws std::invalid_argument "target not achieved by <name>".
double tep(const std::vector<IterationRecord>& curve_al, const std::vector<IterationRecord>& curve_base, double target,
           Metric metric);

struct PercentileTargets {
    double ps_low = 0, ps_high = 0;
};

/// f1: {0.95, 0.99} x converged; mcc: {0.85, 0.90} x converged.
PercentileTargets percentile_targets(double converged_value, Metric metric);

/// Mean WMD over unordered distinct pairs within one set (when both arguments
/// hold the same ids) or over all cross pairs, after excluding all-OOV
/// segments and sampling at most sample_cap per set.
double corpus_similarity(const std::vector<Segment>& set_a, const std::vector<Segment>& set_b, const WordEmbedding& emb,
                         std::size_t sample_cap = 100, std::uint64_t seed = 0);

/// Everything one simulated run needs besides the config.
struct SimulatedInputs {
    std::vector<Segment> pool;
    std::map<std::string, SegmentTruth> truths;
    Dataset test;
    std::vector<WorkerProfile> workers;
};

struct SweepResult {
    StrategyKind strategy = StrategyKind::random;
    std::uint64_t seed = 0;
    std::vector<IterationRecord> records;
};

/// Every (strategy, seed) pair as an isolated run, concurrently. `inputs` is
/// called once per seed and must be thread-safe. The oracle for a run is
/// seeded from the run seed, so strategies under one seed see the same crowd.
std::vector<SweepResult> compare_strategies(const ExperimentConfig& base, const std::vector<StrategyKind>& strategies,
                                            const std::vector<std::uint64_t>& seeds, const WordEmbedding& emb,
                                            const std::function<SimulatedInputs(std::uint64_t)>& inputs,
                                            std::size_t max_threads = 0);

/// Oracle seed used by compare_strategies and the CLI for run seed `seed`.
std::uint64_t oracle_seed(std::uint64_t seed);

/// Knobs for a fully synthetic run.
struct SyntheticSetup {
    std::size_t n = 2000;
    double nsr = 0.10;
    double ambiguity = 0.05;
    double irrelevant_rate = 0.05;
    std::size_t test_n = 1000;  // balanced, unambiguous, no filler
    std::size_t workers = 100;
    double competence_lo = 0.8, competence_hi = 0.98;
};

/// Pool "<category>-pool-*", test set "<category>-test-*" and a worker pool, all
/// derived from `seed`.
SimulatedInputs synthetic_inputs(const SyntheticSetup& setup, Category category, std::uint64_t seed, const WordEmbedding& emb);

}  // namespace privpol
