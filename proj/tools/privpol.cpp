// privpol: command-line front end for ingestion, segmentation, synthetic
// corpora, active-learning runs and the labeling service.

#include <cstdio>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "privpol/experiment.hpp"
#include "privpol/ingestion.hpp"
#include "privpol/io.hpp"
#include "privpol/segmenter.hpp"
#include "privpol/service.hpp"
#include "privpol/synthetic.hpp"

using namespace privpol;

namespace {

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty() || out_path == "-") std::cout << content;
    else write_file(out_path, content);
}

std::string jsonl(const std::vector<Json>& rows) {
    std::string out;
    for (const auto& r : rows) out += r.dump() + "\n";
    return out;
}

WordEmbedding load_embedding(const std::string& path) {
    if (path.empty()) return synthetic_embedding();
    return load_vectors(path);
}

// Where a run's pool, truths and test set come from.
struct CorpusOptions {
    std::string embedding;
    std::string segments, truths, test_segments, test_truths;
    SyntheticSetup synth;
    std::optional<std::uint64_t> corpus_seed;

    void add(CLI::App* app) {
        app->add_option("--embedding", embedding, "word vector file (default: built-in fixture vectors)");
        app->add_option("--segments", segments, "pool segments JSONL (default: synthetic)");
        app->add_option("--truths", truths, "ground truth JSONL for --segments");
        app->add_option("--test-segments", test_segments, "test segments JSONL");
        app->add_option("--test-truths", test_truths, "test truth JSONL");
        app->add_option("--n", synth.n, "synthetic pool size")->capture_default_str();
        app->add_option("--nsr", synth.nsr, "synthetic negative sample ratio")->capture_default_str();
        app->add_option("--ambiguity", synth.ambiguity, "synthetic ambiguity rate")->capture_default_str();
        app->add_option("--irrelevant", synth.irrelevant_rate, "synthetic filler rate")->capture_default_str();
        app->add_option("--test-n", synth.test_n, "synthetic test set size")->capture_default_str();
        app->add_option("--workers", synth.workers, "simulated worker count")->capture_default_str();
        app->add_option("--competence-lo", synth.competence_lo)->capture_default_str();
        app->add_option("--competence-hi", synth.competence_hi)->capture_default_str();
        app->add_option("--corpus-seed", corpus_seed, "fix the synthetic corpus across run seeds");
    }

    SimulatedInputs inputs(Category category, std::uint64_t run_seed, const WordEmbedding& emb) const {
        const auto seed = corpus_seed.value_or(run_seed);
        if (segments.empty()) return synthetic_inputs(synth, category, seed, emb);
        if (truths.empty()) throw CLI::ValidationError("--truths", "required with --segments for simulated labeling");
        SimulatedInputs in;
        for (auto& s : read_segments(segments))
            if (s.category == category) in.pool.push_back(std::move(s));
        in.truths = read_truths(truths);
        if (test_segments.empty() || test_truths.empty())
            throw CLI::ValidationError("--test-segments", "--test-segments and --test-truths are required with --segments");
        in.test = make_test_set(read_segments(test_segments), read_truths(test_truths), emb);
        in.workers = make_worker_pool(synth.workers, seed, synth.competence_lo, synth.competence_hi);
        return in;
    }
};

struct RunOptions {
    std::string strategy = "random", relabel = "label_and_discard", category = "contact";
    double at = kDefaultAcceptanceThreshold;
    std::size_t budget = 8000, bootstrap = 100, batch = 30;
    std::size_t epochs = 4;
    bool no_goals = false;
    std::uint64_t seed = 1;

    void add(CLI::App* app, bool with_strategy) {
        if (with_strategy) app->add_option("--strategy", strategy, "random|lc|margin|entropy|eer|id|bmu")->capture_default_str();
        app->add_option("--at", at, "acceptance threshold")->capture_default_str();
        app->add_option("--relabel", relabel, "label_and_discard|incremental_relabel")->capture_default_str();
        app->add_option("--budget", budget, "labeling effort budget")->capture_default_str();
        app->add_option("--category", category, "contact|location|device")->capture_default_str();
        app->add_option("--bootstrap", bootstrap, "aligned labels before active learning")->capture_default_str();
        app->add_option("--batch", batch, "segments requested per iteration")->capture_default_str();
        app->add_option("--epochs", epochs, "training epochs")->capture_default_str();
        app->add_flag("--no-goals", no_goals, "ignore the MCC/F1 stopping goals");
    }

    ExperimentConfig config() const {
        ExperimentConfig c;
        c.strategy = parse_strategy(strategy);
        c.relabel_mode = parse_relabel_mode(relabel);
        c.category = parse_category(category);
        c.at = at;
        c.le_budget = budget;
        c.bootstrap_labels = bootstrap;
        c.al_batch_requested = batch;
        c.bootstrap_train.epochs = epochs;
        c.al_train.epochs = epochs;
        if (no_goals) c.goals.reset();
        c.seed = seed;
        validate(c);
        return c;
    }
};

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Active-learning privacy-policy labeling pipeline"};
    app.require_subcommand(1);

    // ingest
    std::string ingest_dir, ingest_out;
    auto* ingest = app.add_subcommand("ingest", "load, sanitize, filter and dedup a policy directory");
    ingest->add_option("dir", ingest_dir)->required()->check(CLI::ExistingDirectory);
    ingest->add_option("--out", ingest_out, "policies JSONL (default stdout)");

    // segment
    std::string seg_category = "contact", seg_embedding, seg_policies, seg_out;
    double seg_c = kTopicBoundaryConstant;
    auto* segment = app.add_subcommand("segment", "cut policies into category segments");
    segment->add_option("--category", seg_category)->required();
    segment->add_option("--embedding", seg_embedding, "word vector file")->required()->check(CLI::ExistingFile);
    segment->add_option("--policies", seg_policies, "policies JSONL from ingest")->required()->check(CLI::ExistingFile);
    segment->add_option("--c", seg_c, "topic boundary constant")->capture_default_str();
    segment->add_option("--out", seg_out, "segments JSONL (default stdout)");

    // synth
    SyntheticConfig synth_cfg;
    std::string synth_category = "contact", synth_segments, synth_truths, synth_vectors;
    auto* synth = app.add_subcommand("synth", "generate a synthetic labeled corpus");
    synth->add_option("--n", synth_cfg.n)->capture_default_str();
    synth->add_option("--nsr", synth_cfg.nsr)->capture_default_str();
    synth->add_option("--ambiguity", synth_cfg.ambiguity)->capture_default_str();
    synth->add_option("--irrelevant", synth_cfg.irrelevant_rate)->capture_default_str();
    synth->add_option("--seed", synth_cfg.seed)->capture_default_str();
    synth->add_option("--prefix", synth_cfg.id_prefix, "segment id prefix")->capture_default_str();
    synth->add_option("--category", synth_category)->capture_default_str();
    synth->add_option("--out", synth_segments, "segments JSONL (default stdout)");
    synth->add_option("--truths", synth_truths, "ground truth JSONL");
    synth->add_option("--vectors", synth_vectors, "also write the fixture word vectors here");

    // run
    RunOptions run_opts;
    CorpusOptions run_corpus;
    std::string run_out, run_ledger, run_model;
    auto* run = app.add_subcommand("run", "one active-learning experiment against the simulated crowd");
    run_opts.add(run, true);
    run->add_option("--seed", run_opts.seed)->capture_default_str();
    run->add_option("--out", run_out, "iteration records CSV (default stdout)");
    run->add_option("--ledger", run_ledger, "HitBatch ledger JSONL");
    run->add_option("--model", run_model, "final model checkpoint JSON");
    run_corpus.add(run);

    // compare
    RunOptions cmp_opts;
    CorpusOptions cmp_corpus;
    std::string cmp_strategies = "random,lc,bmu", cmp_seeds = "1,2,3,4,5", cmp_out;
    std::size_t cmp_threads = 0;
    auto* compare = app.add_subcommand("compare", "sweep strategies over seeds");
    cmp_opts.add(compare, false);
    compare->add_option("--strategies", cmp_strategies, "comma-separated strategy names")->capture_default_str();
    compare->add_option("--seeds", cmp_seeds, "comma-separated seeds")->capture_default_str();
    compare->add_option("--threads", cmp_threads, "concurrent runs (0 = hardware)");
    compare->add_option("--out", cmp_out, "CSV with strategy and seed columns (default stdout)");
    cmp_corpus.add(compare);

    // similarity
    std::string sim_a, sim_b, sim_embedding;
    std::size_t sim_cap = 100;
    std::uint64_t sim_seed = 0;
    auto* similarity = app.add_subcommand("similarity", "mean WMD within or between segment sets");
    similarity->add_option("--a", sim_a)->required()->check(CLI::ExistingFile);
    similarity->add_option("--b", sim_b)->required()->check(CLI::ExistingFile);
    similarity->add_option("--embedding", sim_embedding, "word vector file (default: fixture vectors)");
    similarity->add_option("--cap", sim_cap, "segments sampled per set")->capture_default_str();
    similarity->add_option("--seed", sim_seed)->capture_default_str();

    // serve
    int port = 8080;
    std::string host = "127.0.0.1", journal;
    CorpusOptions serve_corpus;
    auto* serve_cmd = app.add_subcommand("serve", "HTTP labeling service");
    serve_cmd->add_option("--port", port)->capture_default_str();
    serve_cmd->add_option("--host", host)->capture_default_str();
    serve_cmd->add_option("--journal", journal, "JSONL journal for crash recovery");
    serve_corpus.add(serve_cmd);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) {
            const auto load = load_corpus(ingest_dir);
            std::vector<Json> rows;
            for (const auto& p : load.policies) rows.push_back(to_json(p));
            emit(ingest_out, jsonl(rows));
            std::cerr << "kept " << load.policies.size() << ", invalid " << load.skipped_invalid << ", duplicate "
                      << load.skipped_duplicate << ", unreadable " << load.skipped_unreadable << "\n";
        } else if (*segment) {
            const auto emb = load_vectors(seg_embedding);
            const auto keywords = default_keywords(parse_category(seg_category));
            std::vector<Json> rows;
            for_each_jsonl(seg_policies, [&](const Json& j) {
                for (const auto& s : segment_policy(policy_from_json(j), keywords, emb, seg_c)) rows.push_back(to_json(s));
            });
            emit(seg_out, jsonl(rows));
        } else if (*synth) {
            synth_cfg.category = parse_category(synth_category);
            const auto corpus = generate_synthetic_corpus(synth_cfg);
            std::vector<Json> rows;
            for (const auto& s : corpus.segments) rows.push_back(to_json(s));
            emit(synth_segments, jsonl(rows));
            if (!synth_truths.empty()) write_truths(synth_truths, corpus.truths);
            if (!synth_vectors.empty()) write_vectors(synthetic_embedding(), synth_vectors);
        } else if (*run) {
            const auto cfg = run_opts.config();
            const auto emb = load_embedding(run_corpus.embedding);
            auto in = run_corpus.inputs(cfg.category, cfg.seed, emb);
            SimulatedOracle oracle(in.truths, in.workers, oracle_seed(cfg.seed));
            Experiment exp(cfg, std::move(in.pool), emb, std::move(in.test), std::move(in.truths));
            try {
                exp.bootstrap(oracle);
            } catch (const BootstrapPoolExhausted& e) {
                emit(run_out, to_csv(e.partial()));
                throw;
            }
            drive(exp, oracle);
            emit(run_out, to_csv(exp.records()));
            if (!run_ledger.empty()) {
                std::vector<Json> rows;
                for (const auto& b : exp.batches()) rows.push_back(to_json(b));
                write_jsonl(run_ledger, rows);
            }
            if (!run_model.empty()) write_file(run_model, to_json(exp.model()).dump(2) + "\n");
            std::cerr << "stopped: " << to_string(exp.stop_reason()) << ", le_spent " << exp.le_spent() << "\n";
        } else if (*compare) {
            const auto base = cmp_opts.config();
            const auto emb = load_embedding(cmp_corpus.embedding);
            std::vector<StrategyKind> strategies;
            for (const auto& s : split_csv(cmp_strategies)) strategies.push_back(parse_strategy(s));
            std::vector<std::uint64_t> seeds;
            for (const auto& s : split_csv(cmp_seeds)) seeds.push_back(std::stoull(s));
            const auto results = compare_strategies(
                base, strategies, seeds, emb, [&](std::uint64_t seed) { return cmp_corpus.inputs(base.category, seed, emb); },
                cmp_threads);
            std::string out = std::string("strategy,seed,") + kRecordCsvHeader + "\n";
            for (const auto& r : results) {
                const auto csv = to_csv(r.records);
                std::istringstream lines(csv);
                std::string line;
                std::getline(lines, line);
                while (std::getline(lines, line)) out += std::string(to_string(r.strategy)) + "," + std::to_string(r.seed) + "," + line + "\n";
            }
            emit(cmp_out, out);
        } else if (*similarity) {
            const auto emb = load_embedding(sim_embedding);
            std::printf("%.9f\n", corpus_similarity(read_segments(sim_a), read_segments(sim_b), emb, sim_cap, sim_seed));
        } else if (*serve_cmd) {
            auto emb = std::make_shared<const WordEmbedding>(load_embedding(serve_corpus.embedding));
            LabelingService service(
                emb, [&, emb](const ExperimentConfig& cfg) { return serve_corpus.inputs(cfg.category, cfg.seed, *emb); },
                journal.empty() ? std::nullopt : std::optional<std::filesystem::path>(journal));
            std::cerr << "listening on " << host << ":" << port << "\n";
            if (!serve(service, host, port)) {
                std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
                return 1;
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
