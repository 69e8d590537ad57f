#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "bracketrank/eval_io.hpp"
#include "bracketrank/grouping.hpp"
#include "bracketrank/llm_client.hpp"
#include "bracketrank/parallel.hpp"
#include "bracketrank/prompting.hpp"
#include "bracketrank/rankers.hpp"
#include "bracketrank/tournament.hpp"

namespace {

using namespace bracketrank;

constexpr int kExitOk = 0;
constexpr int kExitQueryFailures = 1;
constexpr int kExitInputError = 2;

void print_error(const std::string& message) {
    std::cerr << "{\"error\": \"" << message << "\"}\n";
}

std::string trim(const std::string& text) {
    const auto begin = text.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = text.find_last_not_of(" \t\r");
    return text.substr(begin, end - begin + 1);
}

// Reads a flat key=value config file into "--key=value" tokens. Layering is
// defaults < config file < explicit flags: the tokens are injected before the
// user's flags and every option takes its last occurrence.
std::vector<std::string> config_file_args(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file: " + path);
    }
    std::vector<std::string> args;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.resize(comment);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw MalformedLineError(line_no, "expected key=value in " + path);
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw MalformedLineError(line_no, "empty key in " + path);
        }
        if (key == "config") continue;  // no recursive config files
        args.push_back("--" + key + "=" + value);
    }
    return args;
}

// Splices config-file tokens right after the subcommand token so they parse
// in subcommand scope yet lose to any flag that follows them.
std::vector<std::string> apply_config_layer(std::vector<std::string> args) {
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            config_path = args[i + 1];
        } else if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
        }
    }
    if (config_path.empty() || args.empty() || args.front().rfind("-", 0) == 0) {
        return args;
    }
    const std::vector<std::string> injected = config_file_args(config_path);
    args.insert(args.begin() + 1, injected.begin(), injected.end());
    return args;
}

struct RerankOptions {
    std::string config_path;
    std::string run_path;
    std::string corpus_path;
    std::string queries_path;
    std::string out_path;
    std::string trace_path;
    std::string strategy = "single";
    std::string ranker = "llm";
    std::string oracle_scores_path;
    std::string reasoning = "on";
    std::string template_path;
    std::string tag = "brkt";
    int g_max = 20;
    bool g_max_set = false;
    int jobs = 1;
    int max_parallel_matches = 4;
    int retry_limit = 0;
    bool dry_run = false;
    // Endpoint settings (api key comes from the environment, never a value here).
    std::string model = "gpt-4";
    std::string base_url = "https://api.openai.com/v1";
    std::string api_key_env = "OPENAI_API_KEY";
    double timeout_seconds = 120.0;
    int max_retries = 3;
    double backoff_base_seconds = 0.5;
    double temperature = 0.0;
    // Token budget fallback for g_max.
    int budget_b = 0;
    int overhead_t = 0;
    int avg_passage_len = 0;
    int per_doc_framing_h = 0;
};

int resolve_g_max(const RerankOptions& opt) {
    if (opt.g_max_set) return opt.g_max;  // explicit value wins over the budget
    if (opt.budget_b > 0) {
        TokenBudget budget{opt.budget_b, opt.overhead_t, opt.avg_passage_len,
                           opt.per_doc_framing_h};
        return derive_g_max(budget);
    }
    return opt.g_max;
}

std::unique_ptr<Ranker> make_ranker(const RerankOptions& opt) {
    if (opt.dry_run || opt.ranker == "identity") {
        // Dry runs never construct a transport, so nothing can reach the network.
        return std::make_unique<IdentityRanker>();
    }
    if (opt.ranker == "oracle") {
        if (opt.oracle_scores_path.empty()) {
            throw InvalidArgumentError("--ranker oracle requires --oracle-scores");
        }
        return std::make_unique<OracleRanker>(load_oracle_scores(opt.oracle_scores_path));
    }
    if (opt.ranker == "llm") {
        EndpointConfig endpoint;
        endpoint.base_url = opt.base_url;
        endpoint.model_name = opt.model;
        endpoint.api_key_env_var = opt.api_key_env;
        endpoint.timeout_seconds = opt.timeout_seconds;
        endpoint.max_retries = opt.max_retries;
        endpoint.backoff_base_seconds = opt.backoff_base_seconds;
        endpoint.temperature = opt.temperature;
        PromptTemplate tmpl;
        if (!opt.template_path.empty()) {
            tmpl = load_template_file(opt.template_path);
        }
        return std::make_unique<LlmRanker>(std::make_shared<HttpChatClient>(endpoint), tmpl,
                                           opt.reasoning == "on", opt.retry_limit);
    }
    throw InvalidArgumentError("unknown ranker: " + opt.ranker +
                               " (expected llm|oracle|identity)");
}

int max_competitive_rounds(const TournamentTrace& trace) {
    int rounds = 0;
    for (const auto& [bracket, r] : trace.rounds_per_bracket) {
        if (bracket != Bracket::kInitial) rounds = std::max(rounds, r);
    }
    return rounds;
}

int cmd_rerank(const RerankOptions& opt) {
    if (opt.run_path.empty() || opt.corpus_path.empty() || opt.queries_path.empty()) {
        print_error("rerank requires --run, --corpus and --queries");
        return kExitInputError;
    }
    if (opt.out_path.empty() && !opt.dry_run) {
        print_error("rerank requires --out (or --dry-run)");
        return kExitInputError;
    }

    const auto loaded = load_candidates(opt.run_path, opt.corpus_path, opt.queries_path);

    TournamentConfig config;
    config.g_max = resolve_g_max(opt);
    config.strategy = strategy_from_name(opt.strategy);
    config.max_parallel_matches = opt.max_parallel_matches;
    config.ranker_retry_limit = opt.retry_limit;
    config.tag = opt.tag;

    const auto ranker = make_ranker(opt);

    struct QueryResult {
        std::string qid;
        AssembledRanking ranking;
        bool failed = false;
        std::string failure;
    };
    std::vector<const std::pair<const std::string, QueryCandidates>*> work;
    work.reserve(loaded.size());
    for (const auto& item : loaded) work.push_back(&item);

    std::vector<QueryResult> results(work.size());
    parallel_for_indexed(work.size(), opt.jobs, [&](std::size_t i) {
        const auto& [qid, qc] = *work[i];
        results[i].qid = qid;
        try {
            results[i].ranking = rerank(qc.query, qc.candidates, config, *ranker);
        } catch (const Error& e) {
            // Per-query failures fall back to the first-stage order; the batch
            // continues and the exit code reports them.
            results[i].failed = true;
            results[i].failure = e.what();
            results[i].ranking.ordered = qc.candidates;
        }
    });

    std::map<std::string, std::vector<Candidate>> output;
    std::vector<std::string> failed_qids;
    std::int64_t total_calls = 0;
    std::int64_t total_docs = 0;
    for (const auto& res : results) {
        output[res.qid] = res.ranking.ordered;
        total_calls += res.ranking.trace.llm_calls;
        total_docs += res.ranking.trace.docs_processed;
        std::cout << res.qid << ": calls=" << res.ranking.trace.llm_calls
                  << " docs=" << res.ranking.trace.docs_processed
                  << " rounds=" << max_competitive_rounds(res.ranking.trace);
        if (res.failed) {
            std::cout << " (failed, fell back to first-stage order: " << res.failure << ")";
            failed_qids.push_back(res.qid);
        }
        std::cout << "\n";
    }
    std::cout << "total: queries=" << results.size() << " calls=" << total_calls
              << " docs=" << total_docs << "\n";

    if (opt.dry_run) {
        std::cout << "dry run: no output written, no network used\n";
    } else {
        write_run(output, config.tag, opt.out_path);
        if (!opt.trace_path.empty()) {
            std::ofstream trace_out(opt.trace_path, std::ios::binary);
            if (!trace_out) {
                throw IoError("cannot open trace file: " + opt.trace_path);
            }
            for (const auto& res : results) {
                write_trace_jsonl(res.ranking.trace, trace_out, res.qid);
            }
        }
    }

    if (!failed_qids.empty()) {
        std::cerr << "{\"error\": \"query failures\", \"failed_qids\": [";
        for (std::size_t i = 0; i < failed_qids.size(); ++i) {
            std::cerr << (i ? ", " : "") << "\"" << failed_qids[i] << "\"";
        }
        std::cerr << "]}\n";
        return kExitQueryFailures;
    }
    return kExitOk;
}

struct EvaluateOptions {
    std::string config_path;
    std::string run_path;
    std::string qrels_path;
    std::string per_query_csv;
    std::vector<int> cutoffs = {1, 5, 10};
};

int cmd_evaluate(const EvaluateOptions& opt) {
    if (opt.run_path.empty() || opt.qrels_path.empty()) {
        print_error("evaluate requires --run and --qrels");
        return kExitInputError;
    }
    const EvalReport report = evaluate_run(opt.run_path, opt.qrels_path, opt.cutoffs);

    std::cout.setf(std::ios::fixed);
    std::cout.precision(6);
    for (int k : opt.cutoffs) {
        std::cout << "nDCG@" << k << " " << report.mean_ndcg.at(k) << "\n";
    }
    std::cout << "queries evaluated: " << report.judged_queries
              << " (excluded, no qrels: " << report.excluded_queries << ")\n";

    if (!opt.per_query_csv.empty()) {
        std::ofstream csv(opt.per_query_csv, std::ios::binary);
        if (!csv) {
            throw IoError("cannot open csv file: " + opt.per_query_csv);
        }
        csv << "qid";
        for (int k : opt.cutoffs) csv << ",ndcg@" << k;
        csv << "\n";
        csv.setf(std::ios::fixed);
        csv.precision(6);
        for (const auto& row : report.per_query) {
            csv << row.qid;
            for (int k : opt.cutoffs) csv << "," << row.ndcg.at(k);
            csv << "\n";
        }
    }
    return kExitOk;
}

struct CostOptions {
    std::string config_path;
    int n = 0;
    int g_max = 20;
    std::string strategy = "single";
};

int cmd_cost(const CostOptions& opt) {
    if (opt.n < 1) {
        print_error("cost requires --n >= 1");
        return kExitInputError;
    }
    const CostEstimate estimate = estimate_cost(opt.n, opt.g_max, strategy_from_name(opt.strategy));
    std::cout << "strategy=" << opt.strategy << " n=" << opt.n << " g_max=" << opt.g_max
              << " calls=" << estimate.calls << " docs_processed=" << estimate.docs_processed
              << " rounds=" << estimate.rounds << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BracketRank: tournament-style zero-shot document reranking"};
    app.require_subcommand(1);
    // Config-file tokens are injected ahead of the real flags; the last
    // occurrence of an option wins, which makes flags override the file.
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    RerankOptions rerank_opt;
    auto* rerank_cmd = app.add_subcommand("rerank", "Rerank first-stage candidates per query");
    rerank_cmd->add_option("--config", rerank_opt.config_path,
                           "Key-value config file; flags override its values");
    rerank_cmd->add_option("--run", rerank_opt.run_path, "First-stage TREC run file");
    rerank_cmd->add_option("--corpus", rerank_opt.corpus_path,
                           "Corpus JSONL ({\"id\",\"contents\"})");
    rerank_cmd->add_option("--queries", rerank_opt.queries_path,
                           "Queries JSONL ({\"id\",\"text\"})");
    rerank_cmd->add_option("--out", rerank_opt.out_path, "Output run file");
    rerank_cmd->add_option("--trace", rerank_opt.trace_path, "Match audit JSONL output");
    auto* g_max_opt =
        rerank_cmd->add_option("--g-max", rerank_opt.g_max, "Max docs per prompt")
            ->capture_default_str();
    rerank_cmd->add_option("--strategy", rerank_opt.strategy, "single|double|round_robin")
        ->capture_default_str();
    rerank_cmd->add_option("--ranker", rerank_opt.ranker, "llm|oracle|identity")
        ->capture_default_str();
    rerank_cmd->add_option("--oracle-scores", rerank_opt.oracle_scores_path,
                           "doc_id<TAB>score table for the oracle ranker");
    rerank_cmd->add_option("--reasoning", rerank_opt.reasoning, "on|off (llm think scaffold)")
        ->capture_default_str();
    rerank_cmd->add_option("--template", rerank_opt.template_path,
                           "Prompt template file with {QUERY}/{PASSAGES}/{K}");
    rerank_cmd->add_option("--tag", rerank_opt.tag, "Run-file tag")->capture_default_str();
    rerank_cmd->add_option("--jobs", rerank_opt.jobs, "Queries processed in parallel")
        ->capture_default_str();
    rerank_cmd
        ->add_option("--max-parallel-matches", rerank_opt.max_parallel_matches,
                     "Concurrent matches per round")
        ->capture_default_str();
    rerank_cmd->add_option("--retry-limit", rerank_opt.retry_limit,
                           "Extra ranking attempts on unparseable LLM output")
        ->capture_default_str();
    rerank_cmd->add_flag("--dry-run", rerank_opt.dry_run,
                         "Run the pipeline with the identity ranker; no network, no output");
    rerank_cmd->add_option("--model", rerank_opt.model, "Model name")->capture_default_str();
    rerank_cmd->add_option("--base-url", rerank_opt.base_url, "Chat-completions base URL")
        ->capture_default_str();
    rerank_cmd
        ->add_option("--api-key-env", rerank_opt.api_key_env,
                     "Environment variable holding the API key (set it in the config file; "
                     "the key itself is never a flag)")
        ->capture_default_str();
    rerank_cmd->add_option("--timeout", rerank_opt.timeout_seconds, "HTTP timeout, seconds")
        ->capture_default_str();
    rerank_cmd->add_option("--max-retries", rerank_opt.max_retries, "HTTP retries on 429/5xx")
        ->capture_default_str();
    rerank_cmd
        ->add_option("--backoff-base", rerank_opt.backoff_base_seconds,
                     "Exponential backoff base, seconds")
        ->capture_default_str();
    rerank_cmd->add_option("--temperature", rerank_opt.temperature, "Decoding temperature")
        ->capture_default_str();
    rerank_cmd->add_option("--budget-b", rerank_opt.budget_b,
                           "Token budget per call (derives g-max when --g-max is absent)");
    rerank_cmd->add_option("--overhead-t", rerank_opt.overhead_t, "Prompt overhead tokens");
    rerank_cmd->add_option("--avg-passage-len", rerank_opt.avg_passage_len,
                           "Average passage length, tokens");
    rerank_cmd->add_option("--per-doc-framing-h", rerank_opt.per_doc_framing_h,
                           "Per-document framing tokens");

    EvaluateOptions eval_opt;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score a run file against qrels");
    eval_cmd->add_option("--config", eval_opt.config_path,
                         "Key-value config file; flags override its values");
    eval_cmd->add_option("--run", eval_opt.run_path, "Run file to score");
    eval_cmd->add_option("--qrels", eval_opt.qrels_path, "Relevance judgments");
    eval_cmd->add_option("--cutoffs", eval_opt.cutoffs, "nDCG cutoffs")->delimiter(',');
    eval_cmd->add_option("--per-query-csv", eval_opt.per_query_csv, "Per-query CSV output");

    CostOptions cost_opt;
    auto* cost_cmd = app.add_subcommand("cost", "Exact call/document cost, no network");
    cost_cmd->add_option("--config", cost_opt.config_path,
                         "Key-value config file; flags override its values");
    cost_cmd->add_option("--n", cost_opt.n, "Number of candidates");
    cost_cmd->add_option("--g-max", cost_opt.g_max, "Max docs per prompt")->capture_default_str();
    cost_cmd->add_option("--strategy", cost_opt.strategy, "single|double|round_robin")
        ->capture_default_str();

    std::vector<std::string> args;
    try {
        args = apply_config_layer(std::vector<std::string>(argv + 1, argv + argc));
    } catch (const Error& e) {
        print_error(e.what());
        return kExitInputError;
    }
    std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    rerank_opt.g_max_set = g_max_opt->count() > 0;

    try {
        if (rerank_cmd->parsed()) return cmd_rerank(rerank_opt);
        if (eval_cmd->parsed()) return cmd_evaluate(eval_opt);
        if (cost_cmd->parsed()) return cmd_cost(cost_opt);
    } catch (const Error& e) {
        print_error(e.what());
        return kExitInputError;
    } catch (const std::exception& e) {
        print_error(e.what());
        return kExitInputError;
    }
    return kExitOk;
}
