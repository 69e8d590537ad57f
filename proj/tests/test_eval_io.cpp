#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "bracketrank/eval_io.hpp"
#include "support/test_support.hpp"

using namespace bracketrank;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("brkt_eval_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }

    fs::path file(const std::string& name, const std::string& content) const {
        const fs::path p = path / name;
        std::ofstream out(p, std::ios::binary);
        out << content;
        return p;
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

}  // namespace

TEST_CASE("write_run: exact byte format with synthesized descending scores") {
    TempDir dir;
    const fs::path out = dir.path / "out.run";
    write_run({{"q1", {{"dA", "", 0, 1}, {"dB", "", 0, 2}}}}, "brkt", out);
    CHECK(slurp(out) == "q1 Q0 dA 1 2 brkt\nq1 Q0 dB 2 1 brkt\n");
}

TEST_CASE("write_run: empty input writes an empty file") {
    TempDir dir;
    const fs::path out = dir.path / "empty.run";
    write_run({}, "brkt", out);
    CHECK(slurp(out).empty());
}

TEST_CASE("write_run: scores run from N down to 1") {
    TempDir dir;
    std::map<std::string, std::vector<Candidate>> rankings;
    rankings["q1"] = testsupport::make_candidates(100);
    const fs::path out = dir.path / "big.run";
    write_run(rankings, "brkt", out);
    const std::string content = slurp(out);
    CHECK(content.rfind("q1 Q0 d1 1 100 brkt\n", 0) == 0);
    CHECK(content.find("q1 Q0 d100 100 1 brkt\n") != std::string::npos);
}

TEST_CASE("load_run: parses six whitespace-separated columns") {
    TempDir dir;
    const auto p = dir.file("a.run", "q1 Q0 d3 1 12.5 bm25\nq1 Q0 d7 2 11.0 bm25\n");
    const auto records = load_run(p);
    REQUIRE(records.size() == 2);
    CHECK(records[0].qid == "q1");
    CHECK(records[0].doc_id == "d3");
    CHECK(records[0].rank == 1);
    CHECK(records[0].score == doctest::Approx(12.5));
    CHECK(records[0].tag == "bm25");
}

TEST_CASE("load_run: rank gaps, duplicates and score inversions are malformed") {
    TempDir dir;
    CHECK_THROWS_AS(load_run(dir.file("gap.run", "q1 Q0 d1 1 2 t\nq1 Q0 d2 3 1 t\n")),
                    MalformedLineError);
    CHECK_THROWS_AS(load_run(dir.file("dup.run", "q1 Q0 d1 1 2 t\nq1 Q0 d1 2 1 t\n")),
                    MalformedLineError);
    CHECK_THROWS_AS(load_run(dir.file("score.run", "q1 Q0 d1 1 1 t\nq1 Q0 d2 2 5 t\n")),
                    MalformedLineError);
    CHECK_THROWS_AS(load_run(dir.file("cols.run", "q1 Q0 d1 1 1\n")), MalformedLineError);
    CHECK_THROWS_AS(load_run(dir.file("extra.run", "q1 Q0 d1 1 1 t trailing\n")),
                    MalformedLineError);
}

TEST_CASE("load_candidates: joins run, corpus and queries") {
    TempDir dir;
    const auto run = dir.file("a.run", "q1 Q0 d3 1 12.5 bm25\nq1 Q0 d9 2 10.0 bm25\n");
    const auto corpus = dir.file("corpus.jsonl",
                                 "{\"id\": \"d3\", \"contents\": \"third doc\"}\n"
                                 "{\"id\": \"d9\", \"contents\": \"ninth doc\"}\n");
    const auto queries = dir.file("queries.jsonl", "{\"id\": \"q1\", \"text\": \"a query\"}\n");
    const auto loaded = load_candidates(run, corpus, queries);
    REQUIRE(loaded.size() == 1);
    const QueryCandidates& qc = loaded.at("q1");
    CHECK(qc.query.text == "a query");
    REQUIRE(qc.candidates.size() == 2);
    CHECK(qc.candidates[0].doc_id == "d3");
    CHECK(qc.candidates[0].first_stage_rank == 1);
    CHECK(qc.candidates[0].first_stage_score == doctest::Approx(12.5));
    CHECK(qc.candidates[0].text == "third doc");
}

TEST_CASE("load_candidates: empty run file yields an empty map") {
    TempDir dir;
    const auto run = dir.file("empty.run", "");
    const auto corpus = dir.file("c.jsonl", "{\"id\": \"d1\", \"contents\": \"x\"}\n");
    const auto queries = dir.file("q.jsonl", "{\"id\": \"q1\", \"text\": \"y\"}\n");
    CHECK(load_candidates(run, corpus, queries).empty());
}

TEST_CASE("load_candidates: documents absent from the corpus are a hard error") {
    TempDir dir;
    const auto run = dir.file("a.run", "q1 Q0 d3 1 2 t\nq1 Q0 d4 2 1 t\n");
    const auto corpus = dir.file("c.jsonl", "{\"id\": \"d3\", \"contents\": \"x\"}\n");
    const auto queries = dir.file("q.jsonl", "{\"id\": \"q1\", \"text\": \"y\"}\n");
    try {
        load_candidates(run, corpus, queries);
        FAIL("expected MissingDocumentError");
    } catch (const MissingDocumentError& e) {
        REQUIRE(e.ids.size() == 1);
        CHECK(e.ids.front() == "d4");
        CHECK(std::string(e.what()).find("MissingDocument") != std::string::npos);
    }
}

TEST_CASE("load_candidates: a missing corpus file reports every document missing") {
    TempDir dir;
    const auto run = dir.file("a.run", "q1 Q0 d3 1 2 t\n");
    const auto queries = dir.file("q.jsonl", "{\"id\": \"q1\", \"text\": \"y\"}\n");
    CHECK_THROWS_AS(load_candidates(run, dir.path / "nowhere.jsonl", queries),
                    MissingDocumentError);
}

TEST_CASE("round trip: write_run then load_candidates preserves doc order") {
    TempDir dir;
    std::mt19937_64 rng(7);
    auto candidates = testsupport::make_candidates(25);
    std::shuffle(candidates.begin(), candidates.end(), rng);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        candidates[i].first_stage_rank = static_cast<int>(i) + 1;
    }

    std::ostringstream corpus_lines, query_lines;
    for (const auto& c : candidates) {
        corpus_lines << "{\"id\": \"" << c.doc_id << "\", \"contents\": \"text\"}\n";
    }
    query_lines << "{\"id\": \"q1\", \"text\": \"roundtrip\"}\n";

    const fs::path run = dir.path / "rt.run";
    write_run({{"q1", candidates}}, "tag", run);
    const auto loaded = load_candidates(run, dir.file("c.jsonl", corpus_lines.str()),
                                        dir.file("q.jsonl", query_lines.str()));
    const auto& reloaded = loaded.at("q1").candidates;
    REQUIRE(reloaded.size() == candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        CHECK(reloaded[i].doc_id == candidates[i].doc_id);
    }
}

TEST_CASE("ndcg_at_k: ideal ordering scores exactly one") {
    const std::vector<Qrel> qrels = {{"q", "a", 3}, {"q", "b", 2}, {"q", "c", 1}};
    CHECK(ndcg_at_k({"a", "b", "c"}, qrels, 3) == doctest::Approx(1.0));
    CHECK(ndcg_at_k({"a", "b", "c"}, qrels, 10) == doctest::Approx(1.0));
}

TEST_CASE("ndcg_at_k: pinned hand-worked value") {
    // DCG = 1 + 3/log2(3) + 7/2, IDCG = 7 + 3/log2(3) + 1/2; verified against
    // scikit-learn's evaluator with 2^rel - 1 gains before pinning.
    const std::vector<Qrel> qrels = {{"q", "a", 3}, {"q", "b", 2}, {"q", "c", 1}};
    CHECK(ndcg_at_k({"c", "b", "a"}, qrels, 3) == doctest::Approx(0.6806060567602009));
}

TEST_CASE("ndcg_at_k: no positive judgments means zero") {
    CHECK(ndcg_at_k({"a", "b"}, {}, 5) == 0.0);
    CHECK(ndcg_at_k({"a", "b"}, {{"q", "a", 0}, {"q", "b", 0}}, 5) == 0.0);
}

TEST_CASE("ndcg_at_k: unjudged documents after the cutoff never matter") {
    const std::vector<Qrel> qrels = {{"q", "a", 2}, {"q", "b", 1}};
    std::vector<std::string> ranking = {"b", "a"};
    const double base = ndcg_at_k(ranking, qrels, 2);
    for (int i = 0; i < 30; ++i) ranking.push_back("junk" + std::to_string(i));
    CHECK(ndcg_at_k(ranking, qrels, 2) == doctest::Approx(base));
}

TEST_CASE("ndcg_at_k: promoting a more relevant doc never hurts") {
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = std::uniform_int_distribution<int>(2, 20)(rng);
        std::vector<Qrel> qrels;
        std::vector<std::string> ranking;
        for (int i = 0; i < n; ++i) {
            const std::string doc = "d" + std::to_string(i);
            ranking.push_back(doc);
            qrels.push_back({"q", doc, std::uniform_int_distribution<int>(0, 3)(rng)});
        }
        std::shuffle(ranking.begin(), ranking.end(), rng);

        std::unordered_map<std::string, int> rel;
        for (const auto& q : qrels) rel[q.doc_id] = q.relevance;
        const int k = std::uniform_int_distribution<int>(1, n)(rng);
        const std::size_t i = std::uniform_int_distribution<std::size_t>(0, ranking.size() - 2)(rng);
        const std::size_t j =
            std::uniform_int_distribution<std::size_t>(i + 1, ranking.size() - 1)(rng);
        if (rel[ranking[j]] <= rel[ranking[i]]) continue;

        const double before = ndcg_at_k(ranking, qrels, k);
        std::swap(ranking[i], ranking[j]);  // higher-relevance doc moves earlier
        CHECK(ndcg_at_k(ranking, qrels, k) >= before - 1e-12);
    }
}

TEST_CASE("load_qrels: negative labels clamp to zero, duplicates are rejected") {
    TempDir dir;
    const auto good = dir.file("a.qrels", "q1 0 d1 2\nq1 0 d2 -1\n");
    const auto qrels = load_qrels(good);
    REQUIRE(qrels.size() == 2);
    CHECK(qrels[1].relevance == 0);
    CHECK_THROWS_AS(load_qrels(dir.file("dup.qrels", "q1 0 d1 2\nq1 0 d1 1\n")),
                    MalformedLineError);
}

TEST_CASE("evaluate_run: perfect run scores one at every cutoff") {
    TempDir dir;
    const auto run = dir.file("p.run", "q1 Q0 a 1 3 t\nq1 Q0 b 2 2 t\nq1 Q0 c 3 1 t\n");
    const auto qrels = dir.file("p.qrels", "q1 0 a 3\nq1 0 b 2\nq1 0 c 1\n");
    const EvalReport report = evaluate_run(run, qrels, {1, 5, 10});
    CHECK(report.judged_queries == 1);
    for (int k : {1, 5, 10}) CHECK(report.mean_ndcg.at(k) == doctest::Approx(1.0));
}

TEST_CASE("evaluate_run: the mean averages judged queries only") {
    TempDir dir;
    const auto run = dir.file("m.run",
                              "q1 Q0 a 1 2 t\nq1 Q0 b 2 1 t\n"    // perfect
                              "q2 Q0 c 1 2 t\nq2 Q0 d 2 1 t\n"    // zero (judged, no hit)
                              "q3 Q0 e 1 2 t\nq3 Q0 f 2 1 t\n");  // no qrels: excluded
    const auto qrels = dir.file("m.qrels", "q1 0 a 2\nq2 0 x 1\n");
    const EvalReport report = evaluate_run(run, qrels, {2});
    CHECK(report.judged_queries == 2);
    CHECK(report.excluded_queries == 1);
    CHECK(report.mean_ndcg.at(2) == doctest::Approx(0.5));
}
