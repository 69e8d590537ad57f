#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace bracketrank {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidArgumentError : Error {
    using Error::Error;
};

struct DuplicateDocIdError : Error {
    explicit DuplicateDocIdError(std::string id)
        : Error("duplicate doc_id: " + id), doc_id(std::move(id)) {}
    std::string doc_id;
};

struct RankGapOrDuplicateError : Error {
    explicit RankGapOrDuplicateError(const std::string& detail)
        : Error("first_stage_rank values are not a permutation of 1..N: " + detail) {}
};

struct SizeMismatchError : Error {
    using Error::Error;
};

struct BudgetTooSmallError : Error {
    using Error::Error;
};

struct EmptyGroupError : Error {
    using Error::Error;
};

struct UnparseableError : Error {
    using Error::Error;
};

struct TransportError : Error {
    using Error::Error;
};

struct AuthError : Error {
    using Error::Error;
};

struct MalformedResponseError : Error {
    using Error::Error;
};

struct MissingOracleScoreError : Error {
    explicit MissingOracleScoreError(std::string id)
        : Error("no oracle score for doc_id: " + id), doc_id(std::move(id)) {}
    std::string doc_id;
};

struct MalformedLineError : Error {
    MalformedLineError(std::size_t line, const std::string& detail)
        : Error("malformed line " + std::to_string(line) + ": " + detail), line_no(line) {}
    std::size_t line_no;
};

struct MissingDocumentError : Error {
    explicit MissingDocumentError(std::vector<std::string> missing);
    std::vector<std::string> ids;
};

struct IoError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct Query {
    std::string id;    // no whitespace, for run-file compatibility
    std::string text;
};

// One first-stage retrieval candidate. doc_id is the identity key everywhere;
// text equality is never used for identity.
struct Candidate {
    std::string doc_id;
    std::string text;
    double first_stage_score = 0.0;
    int first_stage_rank = 0;  // 1-based, dense within one query's list
};

enum class Strategy {
    kSingleElim,
    kDoubleElim,
    kRoundRobin,
};

const char* strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);  // "single"|"double"|"round_robin"

struct TournamentConfig {
    int g_max = 20;                 // max docs per listwise prompt, >= 2
    Strategy strategy = Strategy::kSingleElim;
    int max_parallel_matches = 4;   // >= 1
    int ranker_retry_limit = 0;     // extra ranking attempts on unparseable output
    std::string tag = "brkt";       // run-file tag
};

// Token budget used to derive g_max when it is not set explicitly.
struct TokenBudget {
    int budget_b = 0;            // tokens available per call
    int overhead_t = 0;          // instructions, delimiters
    int avg_passage_len = 1;     // tokens per passage
    int per_doc_framing_h = 0;   // identifier + separator cost per doc
};

enum class GroupSource {
    kInitialGroup,
    kMatchResult,
};

// Output of one listwise ranking call: a permutation of its input group.
struct RankedGroup {
    std::vector<Candidate> members;
    std::string reasoning_text;  // verbatim, audit only; empty for oracle rankers
    GroupSource source = GroupSource::kInitialGroup;
};

// Midpoint split of a ranked group: winner_half ++ loser_half == source ranking.
struct BracketSplit {
    std::vector<Candidate> winner_half;  // first ceil(k/2) members
    std::vector<Candidate> loser_half;   // remaining floor(k/2)
};

enum class Bracket {
    kWinner,
    kLoser,
    kInitial,
    kRoundRobin,
    kDoubleElimLosers,
};

const char* bracket_name(Bracket b);

// One ranking event: an initial group ranking, a head-to-head match, or a bye.
// bye == true implies split.loser_half is empty and combined_ranking is the
// single input group unchanged (no call was spent).
struct MatchRecord {
    int round_index = 0;  // contiguous from 0 within one bracket
    Bracket bracket = Bracket::kInitial;
    std::vector<std::string> input_group_ids;
    RankedGroup combined_ranking;
    BracketSplit split;
    bool bye = false;
};

struct TournamentTrace {
    std::vector<MatchRecord> matches;
    std::int64_t llm_calls = 0;       // non-bye ranking events (incl. initial groups)
    std::int64_t docs_processed = 0;  // documents placed into prompts, incl. initial ranking
    std::map<Bracket, int> rounds_per_bracket;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Throws DuplicateDocIdError or RankGapOrDuplicateError unless doc_ids are
// unique and first_stage_rank values are exactly a permutation of 1..N.
void validate_candidates(const std::vector<Candidate>& candidates);

}  // namespace bracketrank
