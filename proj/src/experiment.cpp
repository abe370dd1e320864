#include "privpol/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <sstream>
#include <thread>

#include "privpol/rng.hpp"
#include "privpol/synthetic.hpp"
#include "privpol/transport.hpp"

namespace privpol {

std::size_t ExperimentConfig::al_batch_published() const {
    return static_cast<std::size_t>(std::ceil(static_cast<double>(al_batch_requested) / expected_ar - 1e-9));
}

std::size_t ExperimentConfig::new_per_iteration() const {
    return relabel_mode == RelabelMode::label_and_discard ? al_batch_published() : al_batch_requested;
}

void validate(const ExperimentConfig& cfg) {
    validate_acceptance_threshold(cfg.at);
    if (cfg.bootstrap_labels == 0) throw std::invalid_argument("bootstrap_labels must be positive");
    if (cfg.al_batch_requested == 0) throw std::invalid_argument("al_batch_requested must be positive");
    if (!(cfg.expected_ar > 0.0 && cfg.expected_ar <= 1.0)) throw std::invalid_argument("expected_ar must lie in (0, 1]");
    if (cfg.le_budget == 0) throw std::invalid_argument("le_budget must be positive");
    if (!(cfg.eer_subsample > 0.0 && cfg.eer_subsample <= 1.0)) throw std::invalid_argument("eer_subsample must lie in (0, 1]");
    try {
        validate(cfg.bootstrap_train);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(std::string("bootstrap_train.") + e.what());
    }
    try {
        validate(cfg.al_train);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(std::string("al_train.") + e.what());
    }
}

const char* const kRecordCsvHeader = "iteration,le_spent,labels_aligned,nsr_train,nsr_pool,ar,accuracy,precision,recall,f1,mcc";

std::string to_csv(const std::vector<IterationRecord>& records) {
    std::string out = kRecordCsvHeader;
    out += '\n';
    char line[256];
    for (const auto& r : records) {
        std::snprintf(line, sizeof line, "%zu,%zu,%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", r.iteration, r.le_spent,
                      r.labels_aligned, r.nsr_train, r.nsr_pool, r.ar, r.accuracy, r.precision, r.recall, r.f1, r.mcc);
        out += line;
    }
    return out;
}

std::vector<IterationRecord> parse_records_csv(std::string_view csv) {
    std::istringstream in{std::string(csv)};
    std::string line;
    if (!std::getline(in, line) || line != kRecordCsvHeader) throw std::invalid_argument("records csv: unexpected header");
    std::vector<IterationRecord> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        IterationRecord r;
        const int got = std::sscanf(line.c_str(), "%zu,%zu,%zu,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf", &r.iteration, &r.le_spent,
                                    &r.labels_aligned, &r.nsr_train, &r.nsr_pool, &r.ar, &r.accuracy, &r.precision, &r.recall,
                                    &r.f1, &r.mcc);
        if (got != 11) throw std::invalid_argument("records csv: malformed line " + std::to_string(lineno));
        out.push_back(r);
    }
    return out;
}

std::string_view to_string(StopReason r) {
    switch (r) {
        case StopReason::none: return "none";
        case StopReason::budget: return "budget";
        case StopReason::goals: return "goals";
        case StopReason::pool_exhausted: return "pool_exhausted";
    }
    return "none";
}

namespace {

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) out += "; ";
        out += p;
    }
    return out;
}

}  // namespace

SubmissionRejected::SubmissionRejected(std::vector<std::string> offenders)
    : std::invalid_argument("submission rejected: " + join(offenders)), offenders_(std::move(offenders)) {}

Dataset make_test_set(const std::vector<Segment>& segments, const std::map<std::string, SegmentTruth>& truths,
                      const WordEmbedding& emb) {
    std::vector<Eigen::VectorXd> rows;
    std::vector<double> ys;
    for (const auto& s : segments) {
        const auto t = truths.find(s.id);
        if (t == truths.end() || t->second.truth == Answer::irrelevant) continue;
        try {
            rows.push_back(featurize(s, emb));
        } catch (const Unfeaturizable&) {
            continue;
        }
        ys.push_back(t->second.truth == Answer::positive ? 1.0 : 0.0);
    }
    Dataset out;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(emb.dim()));
    out.labels.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.features.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
        out.labels(static_cast<Eigen::Index>(i)) = ys[i];
    }
    return out;
}

Experiment::Experiment(ExperimentConfig cfg, std::vector<Segment> pool, const WordEmbedding& emb, Dataset test,
                       std::map<std::string, SegmentTruth> truths)
    : cfg_(std::move(cfg)), test_(std::move(test)), truths_(std::move(truths)) {
    validate(cfg_);
    if (test_.size() == 0) throw std::invalid_argument("test set is empty");
    if (test_.dim() != emb.dim()) throw std::invalid_argument("test set dimension does not match the embedding");

    std::vector<Eigen::VectorXd> rows;
    for (auto& s : pool) {
        if (index_.contains(s.id)) throw std::invalid_argument("duplicate segment id " + s.id);
        try {
            rows.push_back(featurize(s, emb));
        } catch (const Unfeaturizable&) {
            ++dropped_;
            continue;
        }
        s.status = SegmentStatus::unlabeled;
        index_.emplace(s.id, segments_.size());
        segments_.push_back(std::move(s));
    }
    features_.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(emb.dim()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        features_.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
        unlabeled_.insert(i);
    }
    status_.assign(segments_.size(), SegmentStatus::unlabeled);
    model_ = LinearModel::zeros(emb.dim());
}

std::size_t Experiment::index_of(const std::string& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) throw std::out_of_range("unknown segment " + id);
    return it->second;
}

SegmentStatus Experiment::status(const std::string& segment_id) const { return status_[index_of(segment_id)]; }

std::vector<std::string> Experiment::labeled_ids() const {
    std::vector<std::string> out;
    for (auto i : labeled_) out.push_back(segments_[i].id);
    return out;
}

std::vector<std::string> Experiment::unlabeled_ids() const {
    std::vector<std::string> out;
    for (auto i : unlabeled_) out.push_back(segments_[i].id);
    return out;
}

void Experiment::remove_from_pool(std::size_t idx) {
    unlabeled_.erase(idx);
    status_[idx] = SegmentStatus::published;
}

Dataset Experiment::labeled_dataset() const {
    Dataset d;
    std::vector<Eigen::Index> rows(labeled_.begin(), labeled_.end());
    d.features = features_(rows, Eigen::all);
    d.labels = Eigen::Map<const Eigen::VectorXd>(labeled_y_.data(), static_cast<Eigen::Index>(labeled_y_.size()));
    return d;
}

double Experiment::current_nsr_train() const {
    if (labeled_y_.empty()) return 0.0;
    const auto neg = static_cast<std::size_t>(std::count(labeled_y_.begin(), labeled_y_.end(), 0.0));
    return nsr(neg, labeled_y_.size() - neg);
}

double Experiment::current_nsr_pool() const {
    std::size_t neg = 0, pos = 0;
    for (auto i : unlabeled_) {
        const auto t = truths_.find(segments_[i].id);
        if (t != truths_.end()) {
            if (t->second.truth == Answer::negative) ++neg;
            else if (t->second.truth == Answer::positive) ++pos;
        } else if (predict_one(model_, features_.row(static_cast<Eigen::Index>(i)).transpose()) < 0.5) {
            ++neg;
        } else {
            ++pos;
        }
    }
    return neg + pos == 0 ? 0.0 : nsr(neg, pos);
}

Experiment::Resolution Experiment::resolve(std::size_t idx, const std::vector<LabelResponse>& round) {
    const auto& id = segments_[idx].id;
    ledger_.add_round(id, round);
    const auto* entry = ledger_.find(id);

    Resolution r;
    try {
        r.label = consolidate(entry->responses, cfg_.at);
    } catch (const NoUsableResponses&) {
        r.label.segment_id = id;
        r.label.outcome = Outcome::unaligned;
        r.label.ap = 0.0;
    }
    r.label.segment_id = id;
    r.label.n_responses = entry->responses.size();

    switch (r.label.outcome) {
        case Outcome::positive:
        case Outcome::negative: {
            const bool pos = r.label.outcome == Outcome::positive;
            labeled_.push_back(idx);
            labeled_y_.push_back(pos ? 1.0 : 0.0);
            status_[idx] = SegmentStatus::aligned;
            segments_[idx].label = pos ? BinaryLabel::positive : BinaryLabel::negative;
            r.aligned = true;
            break;
        }
        case Outcome::irrelevant: status_[idx] = SegmentStatus::irrelevant; break;
        case Outcome::unaligned:
            switch (handle_unaligned(cfg_.relabel_mode, entry->labeling_iteration)) {
                case UnalignedAction::discard: status_[idx] = SegmentStatus::discarded; break;
                case UnalignedAction::mark_ambiguous: status_[idx] = SegmentStatus::ambiguous; break;
                case UnalignedAction::republish: r.carry = true; break;
            }
            break;
    }
    return r;
}

void Experiment::retrain_and_record(const TrainConfig& tc, double ar) {
    model_ = train(labeled_dataset(), tc, derive_seed(cfg_.seed, "train", static_cast<std::uint64_t>(iteration_)));
    const auto ev = evaluate(model_, test_);
    IterationRecord rec;
    rec.iteration = iteration_;
    rec.le_spent = ledger_.effort();
    rec.labels_aligned = labeled_.size();
    rec.nsr_train = current_nsr_train();
    rec.nsr_pool = current_nsr_pool();
    rec.ar = ar;
    rec.accuracy = ev.accuracy;
    rec.precision = ev.precision;
    rec.recall = ev.recall;
    rec.f1 = ev.f1;
    rec.mcc = ev.mcc;
    records_.push_back(rec);
}

void Experiment::bootstrap(Responder& oracle) {
    if (bootstrapped_) throw std::logic_error("experiment already bootstrapped");
    bootstrapped_ = true;

    std::vector<std::size_t> order(unlabeled_.begin(), unlabeled_.end());
    Rng rng(derive_seed(cfg_.seed, "bootstrap"));
    shuffle(order, rng);

    std::size_t published = 0, aligned = 0, next = 0;
    bool pool_ran_out = false;
    HitBatch batch;
    batch.batch_id = 0;
    while (labeled_.size() < cfg_.bootstrap_labels) {
        if (ledger_.effort() + kWorkersPerSegment > cfg_.le_budget) {
            stop_ = StopReason::budget;
            break;
        }
        if (next == order.size()) {
            pool_ran_out = true;
            break;
        }
        const auto idx = order[next++];
        remove_from_pool(idx);
        const auto& id = segments_[idx].id;
        for (;;) {
            const int n = ledger_.labeling_iteration(id) + 1;
            const auto round = oracle.respond(id, n, ledger_.workers_for(id));
            ++published;
            if (n == 1) batch.segment_ids.push_back(id);
            batch.labeling_iteration[id] = n;
            auto& logged = batch.responses[id];
            logged.insert(logged.end(), round.begin(), round.end());
            const auto res = resolve(idx, round);
            if (res.aligned) ++aligned;
            if (!res.carry) break;
            if (ledger_.effort() + kWorkersPerSegment > cfg_.le_budget) {
                stop_ = StopReason::budget;
                break;
            }
        }
        if (stop_ != StopReason::none) break;
    }

    const double ar = published == 0 ? 0.0 : static_cast<double>(aligned) / static_cast<double>(published);
    batches_.push_back(std::move(batch));
    if (!labeled_.empty()) retrain_and_record(cfg_.bootstrap_train, ar);
    if (pool_ran_out) {
        stop_ = StopReason::pool_exhausted;
        throw BootstrapPoolExhausted(records_);
    }
    if (labeled_.empty()) stop_ = StopReason::budget;
    prepare_next();
}

void Experiment::apply_staged() {
    if (staged_strategy_) cfg_.strategy = *staged_strategy_;
    if (staged_at_) cfg_.at = *staged_at_;
    staged_strategy_.reset();
    staged_at_.reset();
}

void Experiment::set_strategy(StrategyKind s) { staged_strategy_ = s; }

void Experiment::set_acceptance_threshold(double at) {
    validate_acceptance_threshold(at);
    staged_at_ = at;
}

void Experiment::prepare_next() {
    pending_.clear();
    if (stop_ != StopReason::none) return;

    if (cfg_.goals && !records_.empty()) {
        const auto& last = records_.back();
        if (last.mcc > cfg_.goals->mcc && last.f1 > cfg_.goals->f1) {
            stop_ = StopReason::goals;
            return;
        }
    }
    const std::size_t slots = (cfg_.le_budget - std::min(cfg_.le_budget, ledger_.effort())) / kWorkersPerSegment;
    if (slots == 0) {
        stop_ = StopReason::budget;
        return;
    }
    const std::size_t carried = std::min(slots, carryover_.size());
    const std::size_t fresh = std::min({cfg_.new_per_iteration(), unlabeled_.size(), slots - carried});
    if (carried + fresh == 0) {
        stop_ = StopReason::pool_exhausted;
        return;
    }

    for (std::size_t c = 0; c < carried; ++c) {
        const auto idx = carryover_[c];
        const auto& id = segments_[idx].id;
        pending_.push_back({id, segments_[idx].text, ledger_.labeling_iteration(id) + 1, ledger_.workers_for(id)});
    }
    carryover_.erase(carryover_.begin(), carryover_.begin() + static_cast<std::ptrdiff_t>(carried));

    if (fresh > 0) {
        SelectionRequest req;
        req.k = fresh;
        std::vector<Eigen::Index> rows;
        rows.reserve(unlabeled_.size());
        for (auto i : unlabeled_) {
            req.pool_ids.push_back(segments_[i].id);
            rows.push_back(static_cast<Eigen::Index>(i));
        }
        req.pool_features = features_(rows, Eigen::all);
        req.labeled = labeled_dataset();
        req.model = model_;
        req.train_cfg = cfg_.al_train;
        req.seed = derive_seed(cfg_.seed, "select", static_cast<std::uint64_t>(iteration_));
        req.eer_subsample = cfg_.eer_subsample;
        for (const auto& id : select(cfg_.strategy, req)) {
            const auto idx = index_of(id);
            remove_from_pool(idx);
            pending_.push_back({id, segments_[idx].text, 1, {}});
        }
    }
}

std::vector<std::string> Experiment::check_submission(const std::map<std::string, std::vector<LabelResponse>>& responses) const {
    std::vector<std::string> offenders;
    std::set<std::string> pending_ids;
    for (const auto& p : pending_) pending_ids.insert(p.segment_id);
    for (const auto& [id, _] : responses) {
        if (!pending_ids.contains(id)) offenders.push_back(id + ": not pending");
    }
    for (const auto& p : pending_) {
        const auto it = responses.find(p.segment_id);
        const std::size_t got = it == responses.end() ? 0 : it->second.size();
        if (got != kWorkersPerSegment) {
            offenders.push_back(p.segment_id + ": expected 5 responses, got " + std::to_string(got));
            continue;
        }
        std::set<std::string> seen;
        for (const auto& r : it->second) {
            if (!r.segment_id.empty() && r.segment_id != p.segment_id)
                offenders.push_back(p.segment_id + ": response names segment " + r.segment_id);
            if (r.worker_id.empty()) offenders.push_back(p.segment_id + ": missing worker_id");
            else if (!seen.insert(r.worker_id).second) offenders.push_back(p.segment_id + ": duplicate worker " + r.worker_id);
            else if (p.prior_workers.contains(r.worker_id))
                offenders.push_back(p.segment_id + ": worker " + r.worker_id + " already answered this segment");
        }
    }
    return offenders;
}

std::vector<ConsolidatedLabel> Experiment::submit(const std::map<std::string, std::vector<LabelResponse>>& responses) {
    if (!bootstrapped_ || pending_.empty()) throw std::logic_error("no batch is awaiting labels");
    if (auto offenders = check_submission(responses); !offenders.empty()) throw SubmissionRejected(std::move(offenders));

    std::vector<ConsolidatedLabel> outcomes;
    outcomes.reserve(pending_.size());
    std::size_t aligned = 0;
    HitBatch batch;
    batch.batch_id = iteration_ + 1;
    for (const auto& p : pending_) {
        auto round = responses.at(p.segment_id);
        for (auto& r : round) r.segment_id = p.segment_id;
        batch.segment_ids.push_back(p.segment_id);
        batch.labeling_iteration[p.segment_id] = p.labeling_iteration;
        batch.responses[p.segment_id] = round;
        const auto idx = index_of(p.segment_id);
        const auto res = resolve(idx, round);
        if (res.aligned) ++aligned;
        if (res.carry) carryover_.push_back(idx);
        outcomes.push_back(res.label);
    }
    const double ar = static_cast<double>(aligned) / static_cast<double>(pending_.size());
    batches_.push_back(std::move(batch));

    ++iteration_;
    apply_staged();
    retrain_and_record(cfg_.al_train, ar);
    prepare_next();
    return outcomes;
}

void drive(Experiment& exp, Responder& oracle) {
    while (!exp.finished()) {
        std::map<std::string, std::vector<LabelResponse>> responses;
        for (const auto& item : exp.pending())
            responses[item.segment_id] = oracle.respond(item.segment_id, item.labeling_iteration, item.prior_workers);
        exp.submit(responses);
    }
}

std::vector<IterationRecord> run_experiment(const ExperimentConfig& cfg, std::vector<Segment> pool, const WordEmbedding& emb,
                                            Dataset test, Responder& oracle, std::map<std::string, SegmentTruth> truths) {
    Experiment exp(cfg, std::move(pool), emb, std::move(test), std::move(truths));
    exp.bootstrap(oracle);
    drive(exp, oracle);
    return exp.records();
}

double nsr(std::size_t negatives, std::size_t positives) {
    if (negatives + positives == 0) throw std::invalid_argument("nsr: no labels");
    return static_cast<double>(negatives) / static_cast<double>(negatives + positives);
}

double nsr(std::span<const BinaryLabel> labels) {
    const auto neg = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), BinaryLabel::negative));
    return nsr(neg, labels.size() - neg);
}

Metric parse_metric(std::string_view s) {
    if (s == "f1") return Metric::f1;
    if (s == "mcc") return Metric::mcc;
    if (s == "accuracy") return Metric::accuracy;
    throw std::invalid_argument("unknown metric: " + std::string(s));
}

double metric_of(const IterationRecord& r, Metric m) {
    switch (m) {
        case Metric::accuracy: return r.accuracy;
        case Metric::f1: return r.f1;
        case Metric::mcc: return r.mcc;
    }
    return r.f1;
}

std::optional<std::size_t> labels_to_reach(const std::vector<IterationRecord>& curve, double target, Metric metric) {
    for (const auto& r : curve) {
        if (metric_of(r, metric) >= target) return r.labels_aligned;
    }
    return std::nullopt;
}

double tep(const std::vector<IterationRecord>& curve_al, const std::vector<IterationRecord>& curve_base, double target,
           Metric metric) {
    const auto n_al = labels_to_reach(curve_al, target, metric);
    if (!n_al) throw std::invalid_argument("target not achieved by AL curve");
    const auto n_base = labels_to_reach(curve_base, target, metric);
    if (!n_base) throw std::invalid_argument("target not achieved by BASE curve");
    if (*n_base == 0) throw std::invalid_argument("BASE curve reaches the target with no labels");
    return static_cast<double>(*n_al) / static_cast<double>(*n_base);
}

PercentileTargets percentile_targets(double converged_value, Metric metric) {
    if (!(converged_value > 0.0)) throw std::invalid_argument("degenerate convergence");
    if (converged_value > 1.0) throw std::invalid_argument("converged value exceeds 1");
    switch (metric) {
        case Metric::f1: return {0.95 * converged_value, 0.99 * converged_value};
        case Metric::mcc: return {0.85 * converged_value, 0.90 * converged_value};
        case Metric::accuracy: break;
    }
    throw std::invalid_argument("percentile targets are defined for f1 and mcc");
}

namespace {

std::vector<NBowDoc> sample_docs(const std::vector<Segment>& set, const WordEmbedding& emb, std::size_t cap, std::uint64_t seed) {
    std::vector<NBowDoc> docs;
    for (const auto& s : set) {
        if (auto d = nbow(emb, tokenize(s.text))) docs.push_back(std::move(*d));
    }
    if (docs.empty()) throw std::invalid_argument("similarity: no segment has in-vocabulary tokens");
    if (docs.size() <= cap) return docs;
    Rng rng(seed);
    auto idx = sample_without_replacement(docs.size(), cap, rng);
    std::sort(idx.begin(), idx.end());
    std::vector<NBowDoc> out;
    out.reserve(cap);
    for (auto i : idx) out.push_back(std::move(docs[i]));
    return out;
}

bool same_ids(const std::vector<Segment>& a, const std::vector<Segment>& b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](const Segment& x, const Segment& y) { return x.id == y.id; });
}

}  // namespace

double corpus_similarity(const std::vector<Segment>& set_a, const std::vector<Segment>& set_b, const WordEmbedding& emb,
                         std::size_t sample_cap, std::uint64_t seed) {
    if (set_a.empty() || set_b.empty()) throw std::invalid_argument("similarity: empty segment set");
    if (sample_cap == 0) throw std::invalid_argument("similarity: sample_cap must be positive");
    double total = 0.0;
    std::size_t pairs = 0;
    if (same_ids(set_a, set_b)) {
        const auto docs = sample_docs(set_a, emb, sample_cap, derive_seed(seed, "intra"));
        if (docs.size() < 2) throw std::invalid_argument("similarity: intra mode needs two segments");
        for (std::size_t i = 0; i < docs.size(); ++i)
            for (std::size_t j = i + 1; j < docs.size(); ++j, ++pairs) total += wmd(docs[i], docs[j], emb);
    } else {
        const auto a = sample_docs(set_a, emb, sample_cap, derive_seed(seed, "set-a"));
        const auto b = sample_docs(set_b, emb, sample_cap, derive_seed(seed, "set-b"));
        for (const auto& x : a)
            for (const auto& y : b) {
                total += wmd(x, y, emb);
                ++pairs;
            }
    }
    return total / static_cast<double>(pairs);
}

std::uint64_t oracle_seed(std::uint64_t seed) { return derive_seed(seed, "oracle"); }

SimulatedInputs synthetic_inputs(const SyntheticSetup& setup, Category category, std::uint64_t seed, const WordEmbedding& emb) {
    const std::string cat(to_string(category));
    SyntheticConfig pool_cfg;
    pool_cfg.n = setup.n;
    pool_cfg.nsr = setup.nsr;
    pool_cfg.ambiguity = setup.ambiguity;
    pool_cfg.irrelevant_rate = setup.irrelevant_rate;
    pool_cfg.category = category;
    pool_cfg.seed = derive_seed(seed, "pool");
    pool_cfg.id_prefix = cat + "-pool";
    auto pool = generate_synthetic_corpus(pool_cfg);

    SyntheticConfig test_cfg = pool_cfg;
    test_cfg.n = setup.test_n;
    test_cfg.nsr = 0.5;
    test_cfg.ambiguity = 0.0;
    test_cfg.irrelevant_rate = 0.0;
    test_cfg.seed = derive_seed(seed, "test");
    test_cfg.id_prefix = cat + "-test";
    const auto test = generate_synthetic_corpus(test_cfg);

    SimulatedInputs in;
    in.pool = std::move(pool.segments);
    in.truths = std::move(pool.truths);
    in.test = make_test_set(test.segments, test.truths, emb);
    in.workers = make_worker_pool(setup.workers, derive_seed(seed, "workers"), setup.competence_lo, setup.competence_hi);
    return in;
}

std::vector<SweepResult> compare_strategies(const ExperimentConfig& base, const std::vector<StrategyKind>& strategies,
                                            const std::vector<std::uint64_t>& seeds, const WordEmbedding& emb,
                                            const std::function<SimulatedInputs(std::uint64_t)>& inputs,
                                            std::size_t max_threads) {
    if (max_threads == 0) max_threads = std::max(1u, std::thread::hardware_concurrency());
    std::vector<SweepResult> out;
    for (auto seed : seeds) {
        const SimulatedInputs in = inputs(seed);
        std::vector<std::future<std::vector<IterationRecord>>> running;
        auto launch = [&](StrategyKind s) {
            return std::async(std::launch::async, [&, s] {
                ExperimentConfig cfg = base;
                cfg.strategy = s;
                cfg.seed = seed;
                SimulatedOracle oracle(in.truths, in.workers, oracle_seed(seed));
                return run_experiment(cfg, in.pool, emb, in.test, oracle, in.truths);
            });
        };
        for (std::size_t i = 0; i < strategies.size(); i += max_threads) {
            const std::size_t end = std::min(strategies.size(), i + max_threads);
            running.clear();
            for (std::size_t j = i; j < end; ++j) running.push_back(launch(strategies[j]));
            for (std::size_t j = i; j < end; ++j) out.push_back({strategies[j], seed, running[j - i].get()});
        }
    }
    return out;
}

}  // namespace privpol
