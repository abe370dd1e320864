#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <thread>

#include "doctest.h"
#include "privpol/io.hpp"
#include "privpol/synthetic.hpp"

// after Eigen: resolv.h defines a _res macro
#include "httplib.h"

using namespace privpol;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out, err;
};

struct Workspace {
    fs::path dir;
    Workspace() {
        dir = fs::temp_directory_path() / ("privpol-cli-" + std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Workspace() { fs::remove_all(dir); }

    std::string path(const std::string& name) const { return (dir / name).string(); }

    Result run(const std::string& args) const {
        const auto err = dir / "stderr.txt";
        const std::string cmd = std::string(PRIVPOL_CLI) + " " + args + " 2>" + err.string();
        Result r;
        FILE* p = ::popen(cmd.c_str(), "r");
        REQUIRE(p);
        char buf[4096];
        std::size_t n;
        while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
        const int status = ::pclose(p);
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.err = read_file(err);
        return r;
    }
};

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

const WordEmbedding& emb() {
    static const auto e = synthetic_embedding();
    return e;
}

}  // namespace

TEST_CASE("ingest then segment") {
    Workspace ws;
    fs::create_directories(ws.dir / "corpus");
    for (int i = 0; i < 3; ++i) {
        const auto p = synthetic_policy(20, static_cast<std::uint64_t>(i));
        write_file(ws.dir / "corpus" / ("p" + std::to_string(i) + ".html"),
                   "<html><body><p>" + p.sanitized_text + "</p></body></html>");
    }
    write_file(ws.dir / "corpus" / "copy.html", "<p>" + synthetic_policy(20, 0).sanitized_text + "</p>");
    write_file(ws.dir / "corpus" / "short.html", "<p>We collect email.</p>");

    const auto ing = ws.run("ingest " + ws.path("corpus") + " --out " + ws.path("policies.jsonl"));
    CHECK(ing.code == 0);
    CHECK(ing.err.find("kept 3, invalid 1, duplicate 1") != std::string::npos);
    std::vector<Json> policies;
    for_each_jsonl(ws.path("policies.jsonl"), [&](const Json& j) { policies.push_back(j); });
    REQUIRE(policies.size() == 3);
    CHECK(policies[0]["content_hash"].get<std::string>().size() == 16);

    write_vectors(emb(), ws.path("vectors.txt"));
    const auto seg = ws.run("segment --category location --embedding " + ws.path("vectors.txt") + " --policies " +
                            ws.path("policies.jsonl"));
    CHECK(seg.code == 0);
    std::istringstream lines(seg.out);
    std::string line;
    std::size_t n = 0;
    while (std::getline(lines, line)) {
        const auto s = segment_from_json(Json::parse(line));
        CHECK(s.category == Category::location);
        CHECK(s.status == SegmentStatus::unlabeled);
        ++n;
    }
    CHECK(n > 0);

    CHECK(ws.run("ingest " + ws.path("nowhere")).code != 0);
    CHECK(ws.run("segment --category health --embedding " + ws.path("vectors.txt") + " --policies " + ws.path("policies.jsonl")).code ==
          1);
}

TEST_CASE("synth writes segments, truths and vectors") {
    Workspace ws;
    const auto r = ws.run("synth --n 120 --nsr 0.25 --seed 4 --category device --out " + ws.path("s.jsonl") + " --truths " +
                          ws.path("t.jsonl") + " --vectors " + ws.path("v.txt"));
    REQUIRE(r.code == 0);
    const auto segs = read_segments(ws.path("s.jsonl"));
    const auto truths = read_truths(ws.path("t.jsonl"));
    CHECK(segs.size() == 120);
    CHECK(truths.size() == 120);
    SyntheticConfig sc;
    sc.n = 120;
    sc.nsr = 0.25;
    sc.seed = 4;
    sc.category = Category::device;
    const auto expected = generate_synthetic_corpus(sc);
    for (std::size_t i = 0; i < segs.size(); ++i) {
        CHECK(segs[i].id == expected.segments[i].id);
        CHECK(segs[i].text == expected.segments[i].text);
        CHECK(truths.at(segs[i].id).truth == expected.truths.at(segs[i].id).truth);
    }
    CHECK(load_vectors(ws.path("v.txt")).size() == emb().size());
    CHECK(ws.run("synth --nsr 1.5").code == 1);
}

TEST_CASE("run matches the library and is deterministic") {
    Workspace ws;
    const std::string args = "run --strategy margin --budget 1200 --seed 6 --no-goals --n 500 --test-n 200 ";
    const auto a = ws.run(args + "--out " + ws.path("a.csv") + " --ledger " + ws.path("ledger.jsonl") + " --model " + ws.path("m.json"));
    REQUIRE(a.code == 0);
    CHECK(a.err.find("stopped: budget") != std::string::npos);
    const auto b = ws.run(args);
    REQUIRE(b.code == 0);
    const auto csv = read_file(ws.path("a.csv"));
    CHECK(csv == b.out);
    CHECK(csv.substr(0, csv.find('\n')) == "iteration,le_spent,labels_aligned,nsr_train,nsr_pool,ar,accuracy,precision,recall,f1,mcc");

    ExperimentConfig cfg;
    cfg.strategy = StrategyKind::margin;
    cfg.le_budget = 1200;
    cfg.seed = 6;
    cfg.goals.reset();
    const auto in = synthetic_inputs(SyntheticSetup{.n = 500, .test_n = 200}, Category::contact, 6, emb());
    SimulatedOracle oracle(in.truths, in.workers, oracle_seed(6));
    CHECK(csv == to_csv(run_experiment(cfg, in.pool, emb(), in.test, oracle, in.truths)));

    std::size_t batches = 0, responses = 0;
    for_each_jsonl(ws.path("ledger.jsonl"), [&](const Json& j) {
        const auto hb = hit_batch_from_json(j);
        CHECK(hb.batch_id == batches);
        ++batches;
        for (const auto& [_, rs] : hb.responses) responses += rs.size();
    });
    const auto records = parse_records_csv(csv);
    CHECK(batches == records.size());
    CHECK(responses == records.back().le_spent);
    CHECK(model_from_json(Json::parse(read_file(ws.path("m.json")))).dim() == emb().dim());
}

TEST_CASE("run on segment files") {
    Workspace ws;
    REQUIRE(ws.run("synth --n 400 --nsr 0.3 --seed 1 --out " + ws.path("pool.jsonl") + " --truths " + ws.path("pool_t.jsonl")).code == 0);
    REQUIRE(ws.run("synth --n 200 --nsr 0.5 --irrelevant 0 --seed 2 --prefix test --out " + ws.path("test.jsonl") + " --truths " +
                   ws.path("test_t.jsonl"))
                .code == 0);
    const auto r = ws.run("run --relabel incremental_relabel --budget 1000 --segments " + ws.path("pool.jsonl") + " --truths " +
                          ws.path("pool_t.jsonl") + " --test-segments " + ws.path("test.jsonl") + " --test-truths " +
                          ws.path("test_t.jsonl"));
    REQUIRE(r.code == 0);
    const auto records = parse_records_csv(r.out);
    REQUIRE_FALSE(records.empty());
    CHECK(records.front().labels_aligned >= 100);

    const auto missing = ws.run("run --segments " + ws.path("pool.jsonl"));
    CHECK(missing.code != 0);
}

TEST_CASE("run argument errors") {
    Workspace ws;
    const auto at = ws.run("run --at 0.4");
    CHECK(at.code == 1);
    CHECK(at.err.find("error: at must exceed 0.5") != std::string::npos);
    CHECK(ws.run("run --strategy qbc").code == 1);
    CHECK(ws.run("run --relabel sometimes").code == 1);
    CHECK(ws.run("").code != 0);
    CHECK(ws.run("frobnicate").code != 0);
    const auto small = ws.run("run --n 40 --test-n 40");
    CHECK(small.code == 1);
    CHECK(small.err.find("pool exhausted during bootstrap") != std::string::npos);
    CHECK(parse_records_csv(small.out).size() == 1);
}

TEST_CASE("compare sweeps strategies and seeds") {
    Workspace ws;
    const auto r = ws.run("compare --strategies random,lc --seeds 1,2 --budget 800 --no-goals --n 400 --test-n 200 --threads 2");
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string line;
    std::getline(lines, line);
    CHECK(line == std::string("strategy,seed,") + kRecordCsvHeader);
    std::map<std::string, std::size_t> rows;
    while (std::getline(lines, line)) ++rows[line.substr(0, line.find(',', line.find(',') + 1))];
    CHECK(rows.size() == 4);
    CHECK(rows.contains("random,1"));
    CHECK(rows.contains("lc,2"));
}

TEST_CASE("similarity") {
    Workspace ws;
    REQUIRE(ws.run("synth --n 60 --seed 1 --out " + ws.path("a.jsonl")).code == 0);
    REQUIRE(ws.run("synth --n 60 --seed 2 --category location --out " + ws.path("b.jsonl")).code == 0);
    const auto ab = ws.run("similarity --a " + ws.path("a.jsonl") + " --b " + ws.path("b.jsonl") + " --cap 15");
    const auto ba = ws.run("similarity --a " + ws.path("b.jsonl") + " --b " + ws.path("a.jsonl") + " --cap 15");
    REQUIRE(ab.code == 0);
    CHECK(std::stod(ab.out) > 0);
    CHECK(std::abs(std::stod(ab.out) - corpus_similarity(read_segments(ws.path("a.jsonl")), read_segments(ws.path("b.jsonl")), emb(), 15,
                                                          0)) < 1e-8);
    const auto aa = ws.run("similarity --a " + ws.path("a.jsonl") + " --b " + ws.path("a.jsonl") + " --cap 15");
    CHECK(std::stod(aa.out) > 0);
    CHECK(ab.out.size() > 0);
    CHECK(ba.code == 0);
    CHECK(ws.run("similarity --a " + ws.path("missing.jsonl") + " --b " + ws.path("a.jsonl")).code != 0);
}

TEST_CASE("serve answers http") {
    Workspace ws;
    const int port = 20000 + ::getpid() % 20000;
    const pid_t child = ::fork();
    REQUIRE(child >= 0);
    if (child == 0) {
        const std::string p = std::to_string(port);
        const auto journal = ws.path("journal.jsonl");
        ::execl(PRIVPOL_CLI, PRIVPOL_CLI, "serve", "--port", p.c_str(), "--n", "600", "--test-n", "300", "--journal", journal.c_str(),
                static_cast<char*>(nullptr));
        ::_exit(127);
    }
    httplib::Client cli("127.0.0.1", port);
    httplib::Result created;
    for (int i = 0; i < 100 && !created; ++i) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
        created = cli.Post("/sessions", R"({"seed": 3, "category": "location"})", "application/json");
    }
    REQUIRE(created);
    CHECK(created->status == 201);
    const auto id = Json::parse(created->body)["session_id"].get<std::string>();
    const auto batch = cli.Get("/sessions/" + id + "/batch");
    REQUIRE(batch);
    CHECK(batch->status == 200);
    CHECK(batch->body.find("LOCATION") != std::string::npos);
    CHECK(cli.Get("/sessions/" + id + "/metrics")->status == 200);
    CHECK(cli.Patch("/sessions/" + id + "/config", R"({"strategy": "bmu"})", "application/json")->status == 200);
    CHECK(cli.Post("/sessions", R"({"at": 0.4})", "application/json")->status == 400);
    ::kill(child, SIGTERM);
    ::waitpid(child, nullptr, 0);
    CHECK(line_count(read_file(ws.path("journal.jsonl"))) == 2);
}
