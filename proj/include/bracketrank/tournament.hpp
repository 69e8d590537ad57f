#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "bracketrank/grouping.hpp"
#include "bracketrank/rankers.hpp"
#include "bracketrank/types.hpp"

namespace bracketrank {

// Final output of one tournament: a full permutation of the input candidates
// plus the audit trace. Winner-track documents always precede loser-track
// documents in the elimination strategies.
struct AssembledRanking {
    std::vector<Candidate> ordered;
    TournamentTrace trace;
};

// Midpoint split: winner_half = first ceil(k/2) members, loser_half the rest.
BracketSplit split_group(const RankedGroup& ranked);

struct MatchContext {
    Bracket bracket = Bracket::kWinner;
    int round_index = 0;
    std::vector<std::string> input_group_ids;
    int prompt_cap = 0;  // max combined size; 0 disables the check
};

// Head-to-head match: concatenates group_a then group_b, ranks the union with
// the same listwise ranker, splits at the midpoint. The winner half advances.
// Byes never reach this function; the bracket loop records them directly.
MatchRecord run_match(const Query& query, const std::vector<Candidate>& group_a,
                      const std::vector<Candidate>& group_b, Ranker& ranker,
                      const MatchContext& ctx = {});

// A competing group plus the stable label it carries through the trace.
struct LabeledGroup {
    std::string label;
    RankedGroup group;
};

struct EliminatedHalf {
    int round_index = 0;
    std::string label;
    RankedGroup group;
};

struct BracketOutcome {
    LabeledGroup champion;
    std::vector<EliminatedHalf> eliminated;  // in play order (round asc, match asc)
    int rounds = 0;                          // ceil(log2(initial group count))
};

// Single-elimination loop: pairs adjacent groups per round, odd trailing group
// receives a bye, winners advance until one group remains. Exactly
// ceil(log2(n_groups)) rounds and n_groups - 1 non-bye matches. All matches of
// one round run concurrently (bounded by config.max_parallel_matches) and the
// outcome is identical regardless of completion order.
BracketOutcome run_iterative_bracket(const Query& query, std::vector<LabeledGroup> bracket,
                                     Ranker& ranker, Bracket which, TournamentTrace& trace,
                                     const TournamentConfig& config);

AssembledRanking run_single_elimination(const Query& query,
                                        const std::vector<Candidate>& candidates,
                                        const TournamentConfig& config, Ranker& ranker);

// Double elimination: loser halves of winner-track matches drop into the
// loser track's next round; a group is out only after its second loss.
AssembledRanking run_double_elimination(const Query& query,
                                        const std::vector<Candidate>& candidates,
                                        const TournamentConfig& config, Ranker& ranker);

// Round robin: every unordered pair of initial ranked groups plays one match;
// documents are ordered by mean match position, then group win count, then
// first-stage rank.
AssembledRanking run_round_robin(const Query& query,
                                 const std::vector<Candidate>& candidates,
                                 const TournamentConfig& config, Ranker& ranker);

// Dispatches on config.strategy.
AssembledRanking rerank(const Query& query, const std::vector<Candidate>& candidates,
                        const TournamentConfig& config, Ranker& ranker);

struct CostEstimate {
    std::int64_t calls = 0;
    std::int64_t docs_processed = 0;
    int rounds = 0;  // max elimination rounds over the competitive brackets
};

// Exact counts obtained by dry-running the engine with a counting ranker; no
// document text is involved and nothing touches the network.
CostEstimate estimate_cost(int n, int g_max, Strategy strategy);

// Line-delimited JSON audit stream, one MatchRecord per line. Document texts
// are not emitted; rankings are doc_id sequences.
void write_trace_jsonl(const TournamentTrace& trace, std::ostream& out,
                       const std::string& qid = "");

}  // namespace bracketrank
