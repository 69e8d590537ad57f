#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "bracketrank/types.hpp"

namespace bracketrank {

// One line of a 6-column TREC run file: "qid Q0 docid rank score tag".
struct RunRecord {
    std::string qid;
    std::string doc_id;
    int rank = 0;
    double score = 0.0;
    std::string tag;
};

// One relevance judgment: "qid 0 docid rel".
struct Qrel {
    std::string qid;
    std::string doc_id;
    int relevance = 0;
};

struct QueryCandidates {
    Query query;
    std::vector<Candidate> candidates;  // sorted by first-stage rank
};

// Parses a TREC run file. Within each qid, ranks must be a dense permutation
// of 1..N and scores strictly decreasing with rank.
std::vector<RunRecord> load_run(const std::filesystem::path& run_path);

// Parses "qid 0 docid rel" judgments; negative labels clamp to 0.
std::vector<Qrel> load_qrels(const std::filesystem::path& qrels_path);

// Line-delimited JSON: {"id": ..., "contents": ...} per document.
std::unordered_map<std::string, std::string> load_corpus(const std::filesystem::path& path);

// Line-delimited JSON: {"id": ..., "text": ...} per query.
std::unordered_map<std::string, std::string> load_queries(const std::filesystem::path& path);

// Joins run + corpus + queries into per-query candidate lists, sorted by rank.
// Documents absent from the corpus raise MissingDocumentError listing the
// first 10 missing ids; an empty run file yields an empty map with a warning
// on stderr.
std::map<std::string, QueryCandidates> load_candidates(const std::filesystem::path& run_path,
                                                       const std::filesystem::path& corpus_path,
                                                       const std::filesystem::path& queries_path);

// Writes 6-column TREC lines, sorted by qid then rank, space separated, with
// a trailing newline. Scores are synthesized as N - rank + 1 so they decrease
// strictly with rank.
void write_run(const std::map<std::string, std::vector<Candidate>>& rankings,
               const std::string& tag, const std::filesystem::path& out_path);

// nDCG@k with gain 2^rel - 1 and discount log2(i + 1); documents without a
// judgment count as relevance 0 and the ideal ranking comes from the full
// qrel list. Returns 0 when the query has no positive judgment.
double ndcg_at_k(const std::vector<std::string>& ranking, const std::vector<Qrel>& qrels,
                 int k);

struct EvalReport {
    struct Row {
        std::string qid;
        std::map<int, double> ndcg;  // cutoff -> value
    };
    std::vector<Row> per_query;       // judged queries only, qid ascending
    std::map<int, double> mean_ndcg;  // cutoff -> mean over judged queries
    int judged_queries = 0;
    int excluded_queries = 0;  // run qids with no qrels at all
};

EvalReport evaluate_run(const std::filesystem::path& run_path,
                        const std::filesystem::path& qrels_path,
                        const std::vector<int>& cutoffs);

}  // namespace bracketrank
