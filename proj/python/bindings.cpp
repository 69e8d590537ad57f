#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "bracketrank/eval_io.hpp"
#include "bracketrank/grouping.hpp"
#include "bracketrank/llm_client.hpp"
#include "bracketrank/prompting.hpp"
#include "bracketrank/rankers.hpp"
#include "bracketrank/tournament.hpp"

namespace py = pybind11;
using namespace bracketrank;

namespace {

// Flat result type for Python callers: document order plus trace counters.
struct PyRerankResult {
    std::vector<std::string> ordered;
    std::int64_t llm_calls = 0;
    std::int64_t docs_processed = 0;
    std::map<std::string, int> rounds_per_bracket;
    std::string trace_jsonl;
};

PyRerankResult run_rerank(const std::string& query_id, const std::string& query_text,
                          const std::vector<Candidate>& candidates, const std::string& strategy,
                          int g_max, const std::string& ranker_kind,
                          const std::map<std::string, double>& oracle_scores,
                          int max_parallel_matches) {
    TournamentConfig config;
    config.g_max = g_max;
    config.strategy = strategy_from_name(strategy);
    config.max_parallel_matches = max_parallel_matches;

    std::unique_ptr<Ranker> ranker;
    if (ranker_kind == "identity") {
        ranker = std::make_unique<IdentityRanker>();
    } else if (ranker_kind == "oracle") {
        ranker = std::make_unique<OracleRanker>(
            std::unordered_map<std::string, double>(oracle_scores.begin(), oracle_scores.end()));
    } else {
        throw InvalidArgumentError("ranker must be identity or oracle; drive LLM ranking "
                                   "through build_prompt/parse_ranking or the CLI");
    }

    const AssembledRanking assembled =
        rerank({query_id, query_text}, candidates, config, *ranker);

    PyRerankResult out;
    out.ordered.reserve(assembled.ordered.size());
    for (const auto& c : assembled.ordered) out.ordered.push_back(c.doc_id);
    out.llm_calls = assembled.trace.llm_calls;
    out.docs_processed = assembled.trace.docs_processed;
    for (const auto& [bracket, rounds] : assembled.trace.rounds_per_bracket) {
        out.rounds_per_bracket[bracket_name(bracket)] = rounds;
    }
    std::ostringstream trace;
    write_trace_jsonl(assembled.trace, trace, query_id);
    out.trace_jsonl = trace.str();
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Tournament-style listwise reranking: grouping, prompt building, "
              "ranking-output parsing, bracket elimination and nDCG evaluation.";

    // Translators run newest-first, so the derived type goes last.
    py::register_exception<Error>(m, "BracketRankError", PyExc_RuntimeError);
    py::register_exception<UnparseableError>(m, "UnparseableError", PyExc_ValueError);

    py::class_<Candidate>(m, "Candidate")
        .def(py::init<const std::string&, const std::string&, double, int>(),
             py::arg("doc_id"), py::arg("text"), py::arg("first_stage_score"),
             py::arg("first_stage_rank"))
        .def_readwrite("doc_id", &Candidate::doc_id)
        .def_readwrite("text", &Candidate::text)
        .def_readwrite("first_stage_score", &Candidate::first_stage_score)
        .def_readwrite("first_stage_rank", &Candidate::first_stage_rank)
        .def("__repr__", [](const Candidate& c) {
            return "Candidate(doc_id='" + c.doc_id +
                   "', rank=" + std::to_string(c.first_stage_rank) + ")";
        });

    py::class_<GroupPlan>(m, "GroupPlan")
        .def_readonly("g_num", &GroupPlan::g_num)
        .def_readonly("base_size_s", &GroupPlan::base_size_s)
        .def_readonly("remainder_r", &GroupPlan::remainder_r)
        .def_readonly("sizes", &GroupPlan::sizes)
        .def_readonly("ranges", &GroupPlan::ranges);

    m.def("plan_groups", &plan_groups, py::arg("n"), py::arg("g_max"),
          "Contiguous even partition of n candidates into ceil(n/g_max) groups.");
    m.def(
        "derive_g_max",
        [](int budget_b, int overhead_t, int avg_passage_len, int per_doc_framing_h) {
            return derive_g_max({budget_b, overhead_t, avg_passage_len, per_doc_framing_h});
        },
        py::arg("budget_b"), py::arg("overhead_t"), py::arg("avg_passage_len"),
        py::arg("per_doc_framing_h"),
        "Largest per-prompt group size fitting the token budget.");
    m.def(
        "estimate_tokens",
        [](const std::string& text) { return estimate_tokens(text); },
        py::arg("text"));

    m.def(
        "build_prompt",
        [](const std::string& query_id, const std::string& query_text,
           const std::vector<std::string>& passages, bool reasoning) {
            std::vector<Candidate> group;
            group.reserve(passages.size());
            for (std::size_t i = 0; i < passages.size(); ++i) {
                group.push_back({"p" + std::to_string(i + 1), passages[i], 0.0,
                                 static_cast<int>(i) + 1});
            }
            const ChatPrompt prompt =
                build_prompt({query_id, query_text}, group, PromptTemplate{}, reasoning);
            return py::make_tuple(prompt.system_message, prompt.user_message);
        },
        py::arg("query_id"), py::arg("query_text"), py::arg("passages"),
        py::arg("reasoning") = true,
        "Render the (system, user) listwise ranking prompt for one passage group.");

    py::class_<ParsedRanking>(m, "ParsedRanking")
        .def_readonly("order", &ParsedRanking::order)
        .def_readonly("reasoning_text", &ParsedRanking::reasoning_text)
        .def_property_readonly("repairs_applied", [](const ParsedRanking& p) {
            std::vector<std::string> names;
            for (Repair r : p.repairs_applied) names.emplace_back(repair_name(r));
            return names;
        });

    m.def("parse_ranking", &parse_ranking, py::arg("raw_response"), py::arg("k"),
          "Extract and repair a '[1] > [2] > ...' ranking; always a permutation of 1..k.");
    m.def("serialize_ranking", &serialize_ranking, py::arg("order"));

    m.def(
        "ndcg_at_k",
        [](const std::vector<std::string>& ranking, const std::map<std::string, int>& qrels,
           int k) {
            std::vector<Qrel> converted;
            converted.reserve(qrels.size());
            for (const auto& [doc, rel] : qrels) converted.push_back({"q", doc, rel});
            return ndcg_at_k(ranking, converted, k);
        },
        py::arg("ranking"), py::arg("qrels"), py::arg("k"),
        "nDCG@k with gain 2^rel - 1 and log2(i + 1) discount.");

    py::class_<PyRerankResult>(m, "RerankResult")
        .def_readonly("ordered", &PyRerankResult::ordered)
        .def_readonly("llm_calls", &PyRerankResult::llm_calls)
        .def_readonly("docs_processed", &PyRerankResult::docs_processed)
        .def_readonly("rounds_per_bracket", &PyRerankResult::rounds_per_bracket)
        .def_readonly("trace_jsonl", &PyRerankResult::trace_jsonl);

    m.def("rerank", &run_rerank, py::arg("query_id"), py::arg("query_text"),
          py::arg("candidates"), py::arg("strategy") = "single", py::arg("g_max") = 20,
          py::arg("ranker") = "identity",
          py::arg("oracle_scores") = std::map<std::string, double>{},
          py::arg("max_parallel_matches") = 4,
          py::call_guard<py::gil_scoped_release>(),
          "Run one full tournament and return the reranked doc_id order plus trace counters.");

    m.def(
        "estimate_cost",
        [](int n, int g_max, const std::string& strategy) {
            const CostEstimate e = estimate_cost(n, g_max, strategy_from_name(strategy));
            return py::make_tuple(e.calls, e.docs_processed, e.rounds);
        },
        py::arg("n"), py::arg("g_max") = 20, py::arg("strategy") = "single",
        "Exact (calls, docs_processed, rounds) from a counting dry run.");
}
