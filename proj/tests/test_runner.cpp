#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "privpol/experiment.hpp"
#include "privpol/rng.hpp"
#include "privpol/synthetic.hpp"
#include "privpol/transport.hpp"

using namespace privpol;

namespace {

const WordEmbedding& emb() {
    static const auto e = synthetic_embedding();
    return e;
}

SyntheticSetup noiseless(std::size_t n, double nsr) {
    SyntheticSetup s;
    s.n = n;
    s.nsr = nsr;
    s.ambiguity = 0;
    s.test_n = 400;
    s.competence_lo = s.competence_hi = 1.0;
    return s;
}

IterationRecord record_with(std::size_t labels, double f1) {
    IterationRecord r;
    r.labels_aligned = labels;
    r.f1 = f1;
    r.mcc = f1 / 2;
    return r;
}

// Counts publications on the way through, independently of the ledger.
class CountingResponder : public Responder {
public:
    explicit CountingResponder(Responder& inner) : inner_(inner) {}
    std::vector<LabelResponse> respond(const std::string& id, int n, const std::set<std::string>& exclude) override {
        ++publications;
        return inner_.respond(id, n, exclude);
    }
    std::size_t publications = 0;

private:
    Responder& inner_;
};

std::vector<LabelResponse> scripted(const std::string& id, int n, std::size_t positives) {
    std::vector<LabelResponse> out;
    for (std::size_t k = 0; k < kWorkersPerSegment; ++k) {
        LabelResponse r;
        r.worker_id = id + "-n" + std::to_string(n) + "-" + std::to_string(k);
        r.segment_id = id;
        r.q2_collect = k < positives;
        out.push_back(r);
    }
    return out;
}

// One-dimensional earth mover's distance between two weighted point sets.
double emd_1d(std::vector<std::pair<double, double>> a, std::vector<std::pair<double, double>> b) {
    std::vector<std::pair<double, double>> events;
    for (auto [x, w] : a) events.emplace_back(x, w);
    for (auto [x, w] : b) events.emplace_back(x, -w);
    std::sort(events.begin(), events.end());
    double cdf = 0, total = 0;
    for (std::size_t i = 0; i + 1 < events.size(); ++i) {
        cdf += events[i].second;
        total += std::abs(cdf) * (events[i + 1].first - events[i].first);
    }
    return total;
}

std::vector<std::pair<double, double>> on_line(const std::map<double, double>& counts) {
    double n = 0;
    for (auto [_, c] : counts) n += c;
    std::vector<std::pair<double, double>> out;
    for (auto [x, c] : counts) out.emplace_back(x, c / n);
    return out;
}

Segment seg(const std::string& id, const std::string& text) {
    Segment s;
    s.id = id;
    s.text = text;
    return s;
}

}  // namespace

TEST_CASE("synthetic corpus class counts") {
    SyntheticConfig cfg;
    cfg.n = 1000;
    cfg.nsr = 0.186;
    const auto corpus = generate_synthetic_corpus(cfg);
    REQUIRE(corpus.segments.size() == 1000);
    std::size_t neg = 0;
    for (const auto& [_, t] : corpus.truths) neg += t.truth == Answer::negative;
    CHECK(neg >= 185);
    CHECK(neg <= 187);

    cfg.nsr = 0.5;
    cfg.irrelevant_rate = 0;
    std::size_t pos = 0;
    neg = 0;
    for (const auto& [_, t] : generate_synthetic_corpus(cfg).truths) {
        neg += t.truth == Answer::negative;
        pos += t.truth == Answer::positive;
    }
    CHECK(neg == 500);
    CHECK(pos == 500);

    const auto a = generate_synthetic_corpus(cfg);
    const auto b = generate_synthetic_corpus(cfg);
    for (std::size_t i = 0; i < a.segments.size(); ++i) {
        CHECK(a.segments[i].id == b.segments[i].id);
        CHECK(a.segments[i].text == b.segments[i].text);
    }
    cfg.nsr = 0;
    CHECK_THROWS_AS(generate_synthetic_corpus(cfg), std::invalid_argument);
    cfg.nsr = 1;
    CHECK_THROWS_AS(generate_synthetic_corpus(cfg), std::invalid_argument);
}

TEST_CASE("ambiguity flag rate") {
    SyntheticConfig cfg;
    cfg.n = 4000;
    cfg.ambiguity = 0.3;
    std::size_t amb = 0, relevant = 0;
    for (const auto& [_, t] : generate_synthetic_corpus(cfg).truths) {
        if (t.truth == Answer::irrelevant) continue;
        ++relevant;
        amb += t.ambiguous;
    }
    CHECK(std::abs(static_cast<double>(amb) / static_cast<double>(relevant) - 0.3) < 0.03);
}

TEST_CASE("nsr") {
    CHECK(std::abs(nsr(40, 1990) - 0.0197) < 5e-5);
    CHECK(nsr(40, 1990) == 40.0 / 2030.0);
    CHECK(nsr(3, 7) == 0.3);
    const std::vector<BinaryLabel> all_neg(4, BinaryLabel::negative);
    CHECK(nsr(all_neg) == 1.0);
    std::vector<BinaryLabel> mixed(7, BinaryLabel::positive);
    mixed.insert(mixed.end(), 3, BinaryLabel::negative);
    CHECK(nsr(mixed) == 0.3);
    CHECK_THROWS_AS(nsr(0, 0), std::invalid_argument);
}

TEST_CASE("tep") {
    const std::vector<IterationRecord> al{record_with(100, 0.80), record_with(191, 0.934), record_with(233, 0.95)};
    const std::vector<IterationRecord> base{record_with(100, 0.70), record_with(300, 0.90), record_with(375, 0.94)};
    CHECK(labels_to_reach(al, 0.934, Metric::f1) == 191u);
    CHECK(std::abs(tep(al, base, 0.934, Metric::f1) - 0.5093) < 5e-5);
    CHECK(tep(base, base, 0.9, Metric::f1) == 1.0);
    CHECK(tep(al, al, 0.4, Metric::mcc) == 1.0);
    CHECK_THROWS_WITH(tep(al, base, 0.99, Metric::f1), "target not achieved by AL curve");
    CHECK_THROWS_WITH(tep(al, base, 0.945, Metric::f1), "target not achieved by BASE curve");
    CHECK_FALSE(labels_to_reach(al, 0.99, Metric::f1));
    CHECK(parse_metric("mcc") == Metric::mcc);
    CHECK_THROWS_AS(parse_metric("auc"), std::invalid_argument);
}

TEST_CASE("percentile targets") {
    const auto f1 = percentile_targets(0.983, Metric::f1);
    CHECK(std::abs(f1.ps_low - 0.93385) < 1e-12);
    CHECK(std::abs(f1.ps_high - 0.97317) < 1e-12);
    const auto mcc = percentile_targets(1.0, Metric::mcc);
    CHECK(mcc.ps_low == 0.85);
    CHECK(mcc.ps_high == 0.90);
    CHECK_THROWS_WITH(percentile_targets(0.0, Metric::f1), "degenerate convergence");
    CHECK_THROWS_AS(percentile_targets(1.2, Metric::f1), std::invalid_argument);
}

TEST_CASE("config defaults and validation") {
    ExperimentConfig cfg;
    CHECK(cfg.al_batch_published() == 42);
    CHECK(cfg.new_per_iteration() == 42);
    cfg.relabel_mode = RelabelMode::incremental_relabel;
    CHECK(cfg.new_per_iteration() == 30);
    CHECK(cfg.bootstrap_train.batch_size == 20);
    CHECK(cfg.al_train.batch_size == 8);
    CHECK(cfg.le_budget == 8000);
    CHECK(cfg.bootstrap_labels == 100);
    REQUIRE(cfg.goals);
    CHECK(cfg.goals->mcc == 0.2);
    CHECK(cfg.goals->f1 == 0.70);

    cfg.at = 0.4;
    CHECK_THROWS_WITH(validate(cfg), "at must exceed 0.5");
    cfg = {};
    cfg.le_budget = 0;
    CHECK_THROWS_WITH(validate(cfg), "le_budget must be positive");
    cfg = {};
    cfg.al_train.learning_rate = -1;
    CHECK_THROWS_WITH(validate(cfg), "al_train.learning_rate must be positive");
}

TEST_CASE("budget below the bootstrap cost stops during bootstrap") {
    const auto in = synthetic_inputs(noiseless(300, 0.3), Category::contact, 4, emb());
    ExperimentConfig cfg;
    cfg.le_budget = 50;
    SimulatedOracle oracle(in.truths, in.workers, 4);
    Experiment exp(cfg, in.pool, emb(), in.test, in.truths);
    exp.bootstrap(oracle);
    CHECK(exp.finished());
    CHECK(exp.stop_reason() == StopReason::budget);
    CHECK(exp.pending().empty());
    CHECK(exp.le_spent() <= 50);
    for (const auto& r : exp.records()) CHECK(r.iteration == 0);
    CHECK(exp.records().size() <= 1);
}

TEST_CASE("bootstrap pool exhaustion carries the partial record") {
    const auto in = synthetic_inputs(noiseless(40, 0.3), Category::contact, 6, emb());
    ExperimentConfig cfg;
    SimulatedOracle oracle(in.truths, in.workers, 6);
    try {
        run_experiment(cfg, in.pool, emb(), in.test, oracle, in.truths);
        FAIL("expected exhaustion");
    } catch (const BootstrapPoolExhausted& e) {
        REQUIRE(e.partial().size() == 1);
        CHECK(e.partial()[0].labels_aligned > 0);
        CHECK(e.partial()[0].labels_aligned < 40);
        CHECK(std::string(e.what()) == "pool exhausted during bootstrap");
    }
}

TEST_CASE("unfeaturizable segments are dropped") {
    const auto in = synthetic_inputs(noiseless(200, 0.3), Category::contact, 2, emb());
    auto pool = in.pool;
    pool.push_back(seg("oov", "zzzq qqqz"));
    Experiment exp(ExperimentConfig{}, pool, emb(), in.test);
    CHECK(exp.dropped_unfeaturizable() == 1);
    CHECK(exp.pool_size() == 200);
    CHECK_THROWS_AS(exp.status("oov"), std::out_of_range);
    pool.push_back(pool.front());
    CHECK_THROWS_AS(Experiment(ExperimentConfig{}, pool, emb(), in.test), std::invalid_argument);
    CHECK_THROWS_AS(Experiment(ExperimentConfig{}, in.pool, emb(), Dataset{}), std::invalid_argument);
}

TEST_CASE("noiseless random run reaches F1 0.95 within 600 aligned labels") {
    auto setup = noiseless(2000, 0.5);
    setup.test_n = 1000;
    const auto in = synthetic_inputs(setup, Category::contact, 21, emb());
    ExperimentConfig cfg;
    cfg.goals.reset();
    cfg.le_budget = 3500;
    SimulatedOracle oracle(in.truths, in.workers, oracle_seed(21));
    const auto records = run_experiment(cfg, in.pool, emb(), in.test, oracle, in.truths);
    const auto reached = labels_to_reach(records, 0.95, Metric::f1);
    REQUIRE(reached);
    CHECK(*reached <= 600);
    // noiseless crowd: every relevant segment aligns
    for (std::size_t i = 1; i < records.size(); ++i) CHECK(records[i].ar >= 0.85);
}

TEST_CASE("identical runs give byte-identical csv") {
    const auto in = synthetic_inputs(SyntheticSetup{.n = 600, .test_n = 300}, Category::device, 9, emb());
    ExperimentConfig cfg;
    cfg.strategy = StrategyKind::lc;
    cfg.goals.reset();
    cfg.le_budget = 1200;
    cfg.seed = 9;
    std::string csv[2];
    for (auto& c : csv) {
        SimulatedOracle oracle(in.truths, in.workers, oracle_seed(9));
        c = to_csv(run_experiment(cfg, in.pool, emb(), in.test, oracle, in.truths));
    }
    CHECK(csv[0] == csv[1]);
    CHECK(csv[0].rfind("iteration,le_spent,labels_aligned,nsr_train,nsr_pool,ar,accuracy,precision,recall,f1,mcc\n", 0) == 0);
}

TEST_CASE("loop invariants under both relabel modes") {
    for (auto mode : {RelabelMode::label_and_discard, RelabelMode::incremental_relabel}) {
        for (auto strategy : {StrategyKind::random, StrategyKind::lc}) {
            auto setup = SyntheticSetup{.n = 700, .nsr = 0.2, .ambiguity = 0.3, .test_n = 300};
            const auto in = synthetic_inputs(setup, Category::contact, 31, emb());
            ExperimentConfig cfg;
            cfg.relabel_mode = mode;
            cfg.strategy = strategy;
            cfg.goals.reset();
            cfg.le_budget = 2000;
            cfg.bootstrap_labels = 60;
            SimulatedOracle sim(in.truths, in.workers, 31);
            CountingResponder oracle(sim);
            Experiment exp(cfg, in.pool, emb(), in.test, in.truths);
            exp.bootstrap(oracle);

            std::set<std::string> removed_for_good;
            std::size_t pool_negatives = SIZE_MAX;
            auto check_state = [&] {
                CHECK(exp.le_spent() == kWorkersPerSegment * oracle.publications);
                const auto labeled = exp.labeled_ids();
                const auto unlabeled = exp.unlabeled_ids();
                std::set<std::string> l(labeled.begin(), labeled.end());
                CHECK(l.size() == labeled.size());
                std::size_t neg = 0, pos = 0;
                for (const auto& id : unlabeled) {
                    CHECK_FALSE(l.contains(id));
                    CHECK_FALSE(removed_for_good.contains(id));
                    CHECK(exp.status(id) == SegmentStatus::unlabeled);
                    const auto t = in.truths.at(id).truth;
                    neg += t == Answer::negative;
                    pos += t == Answer::positive;
                }
                CHECK(neg <= pool_negatives);
                pool_negatives = neg;
                // the record is taken before the next batch leaves the pool
                for (const auto& p : exp.pending()) {
                    if (p.labeling_iteration != 1) continue;
                    const auto t = in.truths.at(p.segment_id).truth;
                    neg += t == Answer::negative;
                    pos += t == Answer::positive;
                }
                if (!exp.records().empty() && neg + pos > 0)
                    CHECK(std::abs(exp.records().back().nsr_pool - nsr(neg, pos)) < 1e-15);
                for (const auto& id : labeled) {
                    CHECK(exp.status(id) == SegmentStatus::aligned);
                    const auto* entry = exp.ledger().find(id);
                    REQUIRE(entry);
                    CHECK(entry->workers.size() == entry->responses.size());
                }
                for (const auto& [id, entry] : exp.ledger().entries()) {
                    const auto s = exp.status(id);
                    if (s == SegmentStatus::discarded || s == SegmentStatus::ambiguous || s == SegmentStatus::irrelevant)
                        removed_for_good.insert(id);
                    if (mode == RelabelMode::label_and_discard) CHECK(entry.labeling_iteration == 1);
                    else CHECK(entry.labeling_iteration <= kMaxLabelingIterations);
                    if (s == SegmentStatus::ambiguous) CHECK(entry.responses.size() == 15);
                }
            };
            check_state();
            while (!exp.finished()) {
                std::map<std::string, std::vector<LabelResponse>> responses;
                for (const auto& item : exp.pending())
                    responses[item.segment_id] = oracle.respond(item.segment_id, item.labeling_iteration, item.prior_workers);
                exp.submit(responses);
                check_state();
            }
            const auto& recs = exp.records();
            REQUIRE(recs.size() > 3);
            for (std::size_t i = 0; i < recs.size(); ++i) {
                CHECK(recs[i].iteration == i);
                if (i > 0) CHECK(recs[i].le_spent >= recs[i - 1].le_spent);
                for (double v : {recs[i].nsr_train, recs[i].nsr_pool, recs[i].ar, recs[i].accuracy, recs[i].f1})
                    CHECK((v >= 0 && v <= 1));
                CHECK(std::abs(recs[i].mcc) <= 1);
            }
            CHECK(recs.back().le_spent <= cfg.le_budget);
            CHECK(exp.stop_reason() == StopReason::budget);
            std::size_t batch_responses = 0;
            for (const auto& b : exp.batches())
                for (const auto& [_, r] : b.responses) batch_responses += r.size();
            CHECK(batch_responses == exp.le_spent());
            CHECK(exp.batches().front().batch_id == 0);
        }
    }
}

TEST_CASE("stopping goals end the loop") {
    const auto in = synthetic_inputs(noiseless(800, 0.3), Category::contact, 14, emb());
    ExperimentConfig cfg;
    SimulatedOracle oracle(in.truths, in.workers, 14);
    Experiment exp(cfg, in.pool, emb(), in.test, in.truths);
    exp.bootstrap(oracle);
    drive(exp, oracle);
    CHECK(exp.stop_reason() == StopReason::goals);
    const auto& last = exp.records().back();
    CHECK(last.mcc > 0.2);
    CHECK(last.f1 > 0.7);
    CHECK(to_string(StopReason::goals) == "goals");
}

TEST_CASE("incremental relabeling lifecycle") {
    const auto in = synthetic_inputs(noiseless(300, 0.3), Category::contact, 17, emb());
    ExperimentConfig cfg;
    cfg.relabel_mode = RelabelMode::incremental_relabel;
    cfg.bootstrap_labels = 20;
    cfg.al_batch_requested = 3;
    cfg.goals.reset();
    SimulatedOracle oracle(in.truths, in.workers, 17);
    Experiment exp(cfg, in.pool, emb(), in.test, in.truths);
    exp.bootstrap(oracle);
    const auto le0 = exp.le_spent();

    REQUIRE(exp.pending().size() == 3);
    const std::string a = exp.pending()[0].segment_id, b = exp.pending()[1].segment_id, c = exp.pending()[2].segment_id;
    std::map<std::string, std::vector<LabelResponse>> round{{a, scripted(a, 1, 5)}, {b, scripted(b, 1, 3)}, {c, scripted(c, 1, 3)}};
    auto out = exp.submit(round);
    CHECK(out[0].outcome == Outcome::positive);
    CHECK(out[1].outcome == Outcome::unaligned);
    CHECK(exp.status(a) == SegmentStatus::aligned);
    CHECK(exp.status(b) == SegmentStatus::published);
    CHECK(exp.le_spent() - le0 == 15);

    // carried segments come first, with their history
    REQUIRE(exp.pending().size() == 5);
    CHECK(exp.pending()[0].segment_id == b);
    CHECK(exp.pending()[0].labeling_iteration == 2);
    CHECK(exp.pending()[0].prior_workers.size() == 5);
    CHECK(exp.pending()[1].segment_id == c);
    round.clear();
    round[b] = scripted(b, 2, 5);
    round[c] = scripted(c, 2, 3);
    for (std::size_t i = 2; i < 5; ++i) {
        const auto& id = exp.pending()[i].segment_id;
        CHECK(exp.pending()[i].labeling_iteration == 1);
        round[id] = scripted(id, 1, 5);
    }
    out = exp.submit(round);
    CHECK(out[0].outcome == Outcome::positive);
    CHECK(out[0].ap == 0.8);
    CHECK(out[0].n_responses == 10);
    CHECK(out[1].outcome == Outcome::unaligned);
    CHECK(exp.status(b) == SegmentStatus::aligned);

    REQUIRE(exp.pending()[0].segment_id == c);
    CHECK(exp.pending()[0].labeling_iteration == 3);
    round.clear();
    round[c] = scripted(c, 3, 3);
    for (std::size_t i = 1; i < exp.pending().size(); ++i) round[exp.pending()[i].segment_id] = scripted(exp.pending()[i].segment_id, 1, 0);
    out = exp.submit(round);
    CHECK(out[0].outcome == Outcome::unaligned);
    CHECK(out[0].n_responses == 15);
    CHECK(exp.status(c) == SegmentStatus::ambiguous);

    CHECK(exp.ledger().find(a)->responses.size() == 5);
    CHECK(exp.ledger().find(b)->responses.size() == 10);
    CHECK(exp.ledger().find(c)->responses.size() == 15);
    for (const auto& p : exp.pending()) CHECK(p.segment_id != c);
    const auto unl = exp.unlabeled_ids();
    CHECK(std::find(unl.begin(), unl.end(), c) == unl.end());
}

TEST_CASE("label and discard removes unaligned segments") {
    const auto in = synthetic_inputs(noiseless(300, 0.3), Category::contact, 18, emb());
    ExperimentConfig cfg;
    cfg.bootstrap_labels = 20;
    cfg.goals.reset();
    SimulatedOracle oracle(in.truths, in.workers, 18);
    Experiment exp(cfg, in.pool, emb(), in.test, in.truths);
    exp.bootstrap(oracle);
    REQUIRE(exp.pending().size() == 42);
    std::map<std::string, std::vector<LabelResponse>> round;
    for (const auto& p : exp.pending()) round[p.segment_id] = scripted(p.segment_id, 1, 3);
    const auto first = exp.pending()[0].segment_id;
    const auto out = exp.submit(round);
    for (const auto& o : out) CHECK(o.outcome == Outcome::unaligned);
    CHECK(exp.status(first) == SegmentStatus::discarded);
    CHECK(exp.records().back().ar == 0.0);
    for (const auto& p : exp.pending()) CHECK(p.labeling_iteration == 1);
}

TEST_CASE("rejected submissions change nothing") {
    const auto in = synthetic_inputs(noiseless(300, 0.3), Category::contact, 19, emb());
    ExperimentConfig cfg;
    cfg.bootstrap_labels = 20;
    cfg.goals.reset();
    SimulatedOracle oracle(in.truths, in.workers, 19);
    Experiment exp(cfg, in.pool, emb(), in.test, in.truths);
    CHECK_THROWS_AS(exp.submit({}), std::logic_error);
    exp.bootstrap(oracle);
    CHECK_THROWS_AS(exp.bootstrap(oracle), std::logic_error);

    std::map<std::string, std::vector<LabelResponse>> good;
    for (const auto& p : exp.pending()) good[p.segment_id] = scripted(p.segment_id, 1, 5);
    const auto le = exp.le_spent();
    const auto records = exp.records();
    const auto pending_first = exp.pending().front().segment_id;

    auto short_one = good;
    short_one[pending_first].pop_back();
    try {
        exp.submit(short_one);
        FAIL("expected rejection");
    } catch (const SubmissionRejected& e) {
        REQUIRE(e.offenders().size() == 1);
        CHECK(e.offenders()[0] == pending_first + ": expected 5 responses, got 4");
    }
    auto unknown = good;
    unknown["nope"] = scripted("nope", 1, 5);
    CHECK_THROWS_AS(exp.submit(unknown), SubmissionRejected);
    auto dup = good;
    dup[pending_first][1].worker_id = dup[pending_first][0].worker_id;
    CHECK_THROWS_AS(exp.submit(dup), SubmissionRejected);
    auto wrong = good;
    wrong[pending_first][0].segment_id = "other";
    CHECK_FALSE(exp.check_submission(wrong).empty());

    CHECK(exp.le_spent() == le);
    CHECK(exp.records() == records);
    CHECK(exp.pending().front().segment_id == pending_first);
    CHECK(exp.status(pending_first) == SegmentStatus::published);
    CHECK(exp.check_submission(good).empty());
    exp.submit(good);
    CHECK(exp.records().size() == records.size() + 1);
}

TEST_CASE("steering is staged until the batch is consolidated") {
    const auto in = synthetic_inputs(noiseless(300, 0.3), Category::contact, 20, emb());
    ExperimentConfig cfg;
    cfg.bootstrap_labels = 20;
    cfg.goals.reset();
    SimulatedOracle oracle(in.truths, in.workers, 20);
    Experiment exp(cfg, in.pool, emb(), in.test, in.truths);
    exp.bootstrap(oracle);
    exp.set_strategy(StrategyKind::lc);
    exp.set_acceptance_threshold(1.0);
    CHECK_THROWS_AS(exp.set_acceptance_threshold(0.5), std::invalid_argument);
    CHECK(exp.config().strategy == StrategyKind::random);
    CHECK(exp.config().at == 0.8);

    std::map<std::string, std::vector<LabelResponse>> round;
    for (const auto& p : exp.pending()) round[p.segment_id] = scripted(p.segment_id, 1, 4);
    const auto out = exp.submit(round);
    // consolidated at the old threshold
    for (const auto& o : out) CHECK(o.outcome == Outcome::positive);
    CHECK(exp.config().strategy == StrategyKind::lc);
    CHECK(exp.config().at == 1.0);
}

TEST_CASE("records csv round trip") {
    std::vector<IterationRecord> recs(3);
    for (std::size_t i = 0; i < 3; ++i) {
        recs[i].iteration = i;
        recs[i].le_spent = 500 + 210 * i;
        recs[i].labels_aligned = 100 + 30 * i;
        recs[i].nsr_train = 0.125;
        recs[i].f1 = 0.5 + 0.25 * static_cast<double>(i);
        recs[i].mcc = -0.25;
    }
    const auto csv = to_csv(recs);
    CHECK(csv.substr(0, csv.find('\n')) == kRecordCsvHeader);
    CHECK(parse_records_csv(csv) == recs);
    CHECK(to_csv({}) == std::string(kRecordCsvHeader) + "\n");
    CHECK_THROWS_WITH(parse_records_csv("a,b\n"), "records csv: unexpected header");
    CHECK_THROWS_WITH(parse_records_csv(std::string(kRecordCsvHeader) + "\n1,2,3\n"), "records csv: malformed line 2");
}

TEST_CASE("corpus similarity on a line") {
    RowMatrix v(3, 2);
    v << 0, 0, 1, 0, 9, 0;
    const WordEmbedding line({"email", "alpha", "omega"}, v);
    const std::vector<Segment> same{seg("a", "email alpha"), seg("b", "alpha email"), seg("c", "email alpha alpha email")};
    CHECK(corpus_similarity(same, same, line) == 0.0);

    const std::vector<Segment> a{seg("a1", "email"), seg("a2", "alpha omega"), seg("a3", "email email alpha")};
    const std::vector<Segment> b{seg("b1", "omega"), seg("b2", "email alpha"), seg("b3", "alpha alpha alpha omega")};
    const std::vector<std::map<double, double>> da{{{0, 1}}, {{1, 1}, {9, 1}}, {{0, 2}, {1, 1}}};
    const std::vector<std::map<double, double>> db{{{9, 1}}, {{0, 1}, {1, 1}}, {{1, 3}, {9, 1}}};
    double cross = 0;
    for (const auto& x : da)
        for (const auto& y : db) cross += emd_1d(on_line(x), on_line(y));
    cross /= 9;
    CHECK(std::abs(corpus_similarity(a, b, line) - cross) <= 1e-9);
    CHECK(std::abs(corpus_similarity(b, a, line) - cross) <= 1e-9);

    const double intra = (emd_1d(on_line(da[0]), on_line(da[1])) + emd_1d(on_line(da[0]), on_line(da[2])) +
                          emd_1d(on_line(da[1]), on_line(da[2]))) / 3;
    CHECK(std::abs(corpus_similarity(a, a, line) - intra) <= 1e-9);

    auto with_oov = a;
    with_oov.push_back(seg("x", "nothing known"));
    CHECK(std::abs(corpus_similarity(with_oov, b, line) - cross) <= 1e-9);
    CHECK_THROWS_AS(corpus_similarity({seg("x", "nothing")}, b, line), std::invalid_argument);
    CHECK_THROWS_AS(corpus_similarity({}, b, line), std::invalid_argument);
}

TEST_CASE("corpus similarity sampling") {
    SyntheticConfig sc;
    sc.n = 150;
    const auto big = generate_synthetic_corpus(sc).segments;
    sc.seed = 2;
    sc.category = Category::location;
    const auto other = generate_synthetic_corpus(sc).segments;
    const double s1 = corpus_similarity(big, other, emb(), 20, 3);
    CHECK(s1 == corpus_similarity(big, other, emb(), 20, 3));
    CHECK(s1 > 0);
    CHECK(corpus_similarity(big, big, emb(), 20, 3) > 0);
}

TEST_CASE("compare_strategies matches isolated runs") {
    ExperimentConfig base;
    base.goals.reset();
    base.le_budget = 900;
    const SyntheticSetup setup{.n = 500, .test_n = 200};
    auto inputs = [&](std::uint64_t seed) { return synthetic_inputs(setup, Category::contact, seed, emb()); };
    const auto results = compare_strategies(base, {StrategyKind::random, StrategyKind::margin}, {3, 4}, emb(), inputs, 2);
    REQUIRE(results.size() == 4);
    CHECK(results[0].strategy == StrategyKind::random);
    CHECK(results[1].strategy == StrategyKind::margin);
    CHECK(results[2].seed == 4);
    for (const auto& r : results) {
        const auto in = inputs(r.seed);
        ExperimentConfig cfg = base;
        cfg.strategy = r.strategy;
        cfg.seed = r.seed;
        SimulatedOracle oracle(in.truths, in.workers, oracle_seed(r.seed));
        CHECK(to_csv(run_experiment(cfg, in.pool, emb(), in.test, oracle, in.truths)) == to_csv(r.records));
    }
}
