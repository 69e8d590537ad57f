#include "bracketrank/tournament.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <ostream>
#include <unordered_map>

#include "bracketrank/parallel.hpp"

namespace bracketrank {

namespace {

using nlohmann::json;

void validate_config(const TournamentConfig& config) {
    if (config.g_max < 2) {
        throw InvalidArgumentError("g_max must be >= 2, got " + std::to_string(config.g_max));
    }
    if (config.max_parallel_matches < 1) {
        throw InvalidArgumentError("max_parallel_matches must be >= 1");
    }
}

std::vector<std::string> ids_of(const std::vector<Candidate>& docs) {
    std::vector<std::string> ids;
    ids.reserve(docs.size());
    for (const auto& d : docs) ids.push_back(d.doc_id);
    return ids;
}

std::string group_label(int index_1based) {
    return "g" + std::to_string(index_1based);
}

std::string match_label(Bracket which, int round, std::size_t match) {
    return std::string(bracket_name(which)) + "-r" + std::to_string(round) + "-m" +
           std::to_string(match);
}

void count_call(TournamentTrace& trace, const MatchRecord& rec) {
    if (!rec.bye) {
        trace.llm_calls += 1;
        trace.docs_processed += static_cast<std::int64_t>(rec.combined_ranking.members.size());
    }
}

MatchRecord make_bye_record(const LabeledGroup& solo, Bracket which, int round) {
    MatchRecord rec;
    rec.round_index = round;
    rec.bracket = which;
    rec.input_group_ids = {solo.label};
    rec.combined_ranking = solo.group;
    rec.split.winner_half = solo.group.members;  // whole group advances, nobody drops
    rec.bye = true;
    return rec;
}

// Matches within elimination tracks combine two halves, each at most
// ceil(g_max / 2) documents, so their prompts stay within one group budget.
int track_prompt_cap(const TournamentConfig& config) {
    return 2 * ((config.g_max + 1) / 2);
}

// Shared first phase of every strategy: plan, slice, rank every initial group
// in parallel, and record one Initial match per group (its split included).
std::vector<MatchRecord> rank_initial_groups(const Query& query,
                                             const std::vector<Candidate>& candidates,
                                             const TournamentConfig& config, Ranker& ranker,
                                             TournamentTrace& trace) {
    std::vector<Candidate> sorted = candidates;
    std::sort(sorted.begin(), sorted.end(), [](const Candidate& a, const Candidate& b) {
        return a.first_stage_rank < b.first_stage_rank;
    });

    const GroupPlan plan = plan_groups(static_cast<int>(sorted.size()), config.g_max);
    const auto groups = split_into_groups(sorted, plan);

    std::vector<MatchRecord> records(groups.size());
    parallel_for_indexed(groups.size(), config.max_parallel_matches, [&](std::size_t i) {
        RankedGroup ranked = ranker.rank_group(query, groups[i]);
        ranked.source = GroupSource::kInitialGroup;
        MatchRecord rec;
        rec.round_index = 0;
        rec.bracket = Bracket::kInitial;
        rec.input_group_ids = {group_label(static_cast<int>(i) + 1)};
        rec.split = split_group(ranked);
        rec.combined_ranking = std::move(ranked);
        records[i] = std::move(rec);
    });

    for (auto& rec : records) {
        count_call(trace, rec);
        trace.matches.push_back(rec);
    }
    trace.rounds_per_bracket[Bracket::kInitial] = records.empty() ? 0 : 1;
    return records;
}

void append_eliminated_desc(std::vector<Candidate>& ordered,
                            const std::vector<EliminatedHalf>& eliminated, int rounds) {
    // Later-round losers fell to stronger opposition and place higher; within a
    // round the play order breaks ties, then the half's own internal order.
    for (int r = rounds - 1; r >= 0; --r) {
        for (const auto& e : eliminated) {
            if (e.round_index != r) continue;
            ordered.insert(ordered.end(), e.group.members.begin(), e.group.members.end());
        }
    }
}

void merge_trace(TournamentTrace& into, TournamentTrace&& part) {
    for (auto& rec : part.matches) {
        into.matches.push_back(std::move(rec));
    }
    into.llm_calls += part.llm_calls;
    into.docs_processed += part.docs_processed;
    for (const auto& [bracket, rounds] : part.rounds_per_bracket) {
        into.rounds_per_bracket[bracket] = rounds;
    }
}

struct TrackInputs {
    std::vector<LabeledGroup> winners;
    std::vector<LabeledGroup> losers;
};

TrackInputs split_initial_records(const std::vector<MatchRecord>& records) {
    TrackInputs tracks;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        const std::string base = group_label(static_cast<int>(i) + 1);
        tracks.winners.push_back(
            {base + ".w", {rec.split.winner_half, "", GroupSource::kInitialGroup}});
        if (!rec.split.loser_half.empty()) {
            tracks.losers.push_back(
                {base + ".l", {rec.split.loser_half, "", GroupSource::kInitialGroup}});
        }
    }
    return tracks;
}

}  // namespace

BracketSplit split_group(const RankedGroup& ranked) {
    const std::size_t k = ranked.members.size();
    const std::size_t w = (k + 1) / 2;
    BracketSplit split;
    split.winner_half.assign(ranked.members.begin(), ranked.members.begin() + w);
    split.loser_half.assign(ranked.members.begin() + w, ranked.members.end());
    return split;
}

MatchRecord run_match(const Query& query, const std::vector<Candidate>& group_a,
                      const std::vector<Candidate>& group_b, Ranker& ranker,
                      const MatchContext& ctx) {
    if (group_a.empty() || group_b.empty()) {
        throw InvalidArgumentError("run_match: both groups must be non-empty");
    }
    const std::size_t combined_size = group_a.size() + group_b.size();
    if (ctx.prompt_cap > 0 && combined_size > static_cast<std::size_t>(ctx.prompt_cap)) {
        throw InvalidArgumentError("run_match: combined group of " +
                                   std::to_string(combined_size) + " exceeds prompt cap " +
                                   std::to_string(ctx.prompt_cap));
    }

    std::vector<Candidate> combined;
    combined.reserve(combined_size);
    combined.insert(combined.end(), group_a.begin(), group_a.end());
    combined.insert(combined.end(), group_b.begin(), group_b.end());

    RankedGroup ranked = ranker.rank_group(query, combined);
    ranked.source = GroupSource::kMatchResult;

    MatchRecord rec;
    rec.round_index = ctx.round_index;
    rec.bracket = ctx.bracket;
    rec.input_group_ids = ctx.input_group_ids;
    rec.split = split_group(ranked);
    rec.combined_ranking = std::move(ranked);
    return rec;
}

BracketOutcome run_iterative_bracket(const Query& query, std::vector<LabeledGroup> bracket,
                                     Ranker& ranker, Bracket which, TournamentTrace& trace,
                                     const TournamentConfig& config) {
    if (bracket.empty()) {
        throw InvalidArgumentError("run_iterative_bracket: bracket must be non-empty");
    }
    const int cap = track_prompt_cap(config);

    BracketOutcome out;
    int round = 0;
    while (bracket.size() > 1) {
        const std::size_t n_matches = bracket.size() / 2;
        const bool has_bye = bracket.size() % 2 == 1;

        std::vector<MatchRecord> records(n_matches);
        parallel_for_indexed(n_matches, config.max_parallel_matches, [&](std::size_t m) {
            const LabeledGroup& a = bracket[2 * m];
            const LabeledGroup& b = bracket[2 * m + 1];
            records[m] = run_match(query, a.group.members, b.group.members, ranker,
                                   {which, round, {a.label, b.label}, cap});
        });

        std::vector<LabeledGroup> next;
        next.reserve(n_matches + (has_bye ? 1 : 0));
        for (std::size_t m = 0; m < n_matches; ++m) {
            MatchRecord& rec = records[m];
            const std::string label = match_label(which, round, m);
            next.push_back(
                {label + ".w", {rec.split.winner_half, "", GroupSource::kMatchResult}});
            out.eliminated.push_back(
                {round, label + ".l", {rec.split.loser_half, "", GroupSource::kMatchResult}});
            count_call(trace, rec);
            trace.matches.push_back(std::move(rec));
        }
        if (has_bye) {
            LabeledGroup& solo = bracket.back();
            trace.matches.push_back(make_bye_record(solo, which, round));
            next.push_back(std::move(solo));
        }
        bracket = std::move(next);
        ++round;
    }

    out.rounds = round;
    out.champion = std::move(bracket.front());
    trace.rounds_per_bracket[which] = round;
    return out;
}

AssembledRanking run_single_elimination(const Query& query,
                                        const std::vector<Candidate>& candidates,
                                        const TournamentConfig& config, Ranker& ranker) {
    validate_config(config);
    validate_candidates(candidates);

    AssembledRanking result;
    if (candidates.empty()) return result;

    const auto initial = rank_initial_groups(query, candidates, config, ranker, result.trace);
    TrackInputs tracks = split_initial_records(initial);

    TournamentTrace winner_trace;
    TournamentTrace loser_trace;
    BracketOutcome winner_out;
    BracketOutcome loser_out;
    const bool have_losers = !tracks.losers.empty();

    // The two tracks are independent; run them concurrently when allowed.
    parallel_for_indexed(2, config.max_parallel_matches >= 2 ? 2 : 1, [&](std::size_t t) {
        if (t == 0) {
            winner_out = run_iterative_bracket(query, std::move(tracks.winners), ranker,
                                               Bracket::kWinner, winner_trace, config);
        } else if (have_losers) {
            loser_out = run_iterative_bracket(query, std::move(tracks.losers), ranker,
                                              Bracket::kLoser, loser_trace, config);
        }
    });
    merge_trace(result.trace, std::move(winner_trace));
    merge_trace(result.trace, std::move(loser_trace));
    if (!have_losers) {
        result.trace.rounds_per_bracket[Bracket::kLoser] = 0;
    }

    result.ordered.reserve(candidates.size());
    const auto& wc = winner_out.champion.group.members;
    result.ordered.insert(result.ordered.end(), wc.begin(), wc.end());
    append_eliminated_desc(result.ordered, winner_out.eliminated, winner_out.rounds);
    if (have_losers) {
        const auto& lc = loser_out.champion.group.members;
        result.ordered.insert(result.ordered.end(), lc.begin(), lc.end());
        append_eliminated_desc(result.ordered, loser_out.eliminated, loser_out.rounds);
    }
    return result;
}

AssembledRanking run_double_elimination(const Query& query,
                                        const std::vector<Candidate>& candidates,
                                        const TournamentConfig& config, Ranker& ranker) {
    validate_config(config);
    validate_candidates(candidates);

    AssembledRanking result;
    if (candidates.empty()) return result;

    const auto initial = rank_initial_groups(query, candidates, config, ranker, result.trace);
    TrackInputs tracks = split_initial_records(initial);

    // The loser track consumes winner-track drop-downs round by round, so the
    // winner track runs to completion first.
    TournamentTrace winner_trace;
    BracketOutcome winner_out = run_iterative_bracket(query, std::move(tracks.winners), ranker,
                                                      Bracket::kWinner, winner_trace, config);
    merge_trace(result.trace, std::move(winner_trace));

    // Winner-round r losers join the loser track at the start of round r + 1,
    // appended after that round's survivors in match order.
    std::vector<std::vector<LabeledGroup>> drop_downs(
        static_cast<std::size_t>(winner_out.rounds));
    for (auto& e : winner_out.eliminated) {
        drop_downs[static_cast<std::size_t>(e.round_index)].push_back(
            {e.label, std::move(e.group)});
    }

    const Bracket which = Bracket::kDoubleElimLosers;
    const int cap = track_prompt_cap(config);
    std::vector<LabeledGroup> current = std::move(tracks.losers);
    std::vector<EliminatedHalf> knocked_out;  // second loss: out for good
    int round = 0;
    for (;;) {
        if (round > 0 && static_cast<std::size_t>(round - 1) < drop_downs.size()) {
            for (auto& g : drop_downs[static_cast<std::size_t>(round - 1)]) {
                current.push_back(std::move(g));
            }
        }
        const bool injections_pending = static_cast<std::size_t>(round) < drop_downs.size();
        if (current.size() <= 1 && !injections_pending) break;
        if (current.size() <= 1) {
            // Lone survivor waits for the next drop-down.
            if (current.size() == 1) {
                result.trace.matches.push_back(make_bye_record(current.front(), which, round));
            }
            ++round;
            continue;
        }

        const std::size_t n_matches = current.size() / 2;
        const bool has_bye = current.size() % 2 == 1;
        std::vector<MatchRecord> records(n_matches);
        parallel_for_indexed(n_matches, config.max_parallel_matches, [&](std::size_t m) {
            const LabeledGroup& a = current[2 * m];
            const LabeledGroup& b = current[2 * m + 1];
            records[m] = run_match(query, a.group.members, b.group.members, ranker,
                                   {which, round, {a.label, b.label}, cap});
        });

        std::vector<LabeledGroup> next;
        next.reserve(n_matches + (has_bye ? 1 : 0));
        for (std::size_t m = 0; m < n_matches; ++m) {
            MatchRecord& rec = records[m];
            const std::string label = match_label(which, round, m);
            next.push_back(
                {label + ".w", {rec.split.winner_half, "", GroupSource::kMatchResult}});
            knocked_out.push_back(
                {round, label + ".l", {rec.split.loser_half, "", GroupSource::kMatchResult}});
            count_call(result.trace, rec);
            result.trace.matches.push_back(std::move(rec));
        }
        if (has_bye) {
            LabeledGroup& solo = current.back();
            result.trace.matches.push_back(make_bye_record(solo, which, round));
            next.push_back(std::move(solo));
        }
        current = std::move(next);
        ++round;
    }
    result.trace.rounds_per_bracket[which] = round;

    // Fewest losses first, then descending last-survival round.
    result.ordered.reserve(candidates.size());
    const auto& wc = winner_out.champion.group.members;
    result.ordered.insert(result.ordered.end(), wc.begin(), wc.end());
    if (!current.empty()) {
        const auto& lc = current.front().group.members;
        result.ordered.insert(result.ordered.end(), lc.begin(), lc.end());
    }
    append_eliminated_desc(result.ordered, knocked_out, round);
    return result;
}

AssembledRanking run_round_robin(const Query& query, const std::vector<Candidate>& candidates,
                                 const TournamentConfig& config, Ranker& ranker) {
    validate_config(config);
    validate_candidates(candidates);

    AssembledRanking result;
    if (candidates.empty()) return result;

    const auto initial = rank_initial_groups(query, candidates, config, ranker, result.trace);
    const std::size_t n_groups = initial.size();
    result.trace.rounds_per_bracket[Bracket::kRoundRobin] = n_groups > 1 ? 1 : 0;

    if (n_groups == 1) {
        const auto& members = initial.front().combined_ranking.members;
        result.ordered.assign(members.begin(), members.end());
        return result;
    }

    std::unordered_map<std::string, std::size_t> group_of;
    for (std::size_t g = 0; g < n_groups; ++g) {
        for (const auto& c : initial[g].combined_ranking.members) {
            group_of[c.doc_id] = g;
        }
    }

    std::vector<std::pair<std::size_t, std::size_t>> pairings;
    pairings.reserve(n_groups * (n_groups - 1) / 2);
    for (std::size_t i = 0; i < n_groups; ++i) {
        for (std::size_t j = i + 1; j < n_groups; ++j) {
            pairings.emplace_back(i, j);
        }
    }

    std::vector<MatchRecord> records(pairings.size());
    parallel_for_indexed(pairings.size(), config.max_parallel_matches, [&](std::size_t m) {
        const auto [i, j] = pairings[m];
        const auto& a = initial[i].combined_ranking.members;
        const auto& b = initial[j].combined_ranking.members;
        records[m] = run_match(query, a, b, ranker,
                               {Bracket::kRoundRobin, 0,
                                {group_label(static_cast<int>(i) + 1),
                                 group_label(static_cast<int>(j) + 1)},
                                2 * config.g_max});
    });

    struct DocStat {
        double position_sum = 0.0;
        int matches_played = 0;
    };
    std::unordered_map<std::string, DocStat> doc_stats;
    std::vector<int> wins(n_groups, 0);
    std::vector<double> norm_position_sum(n_groups, 0.0);
    std::vector<int> docs_seen(n_groups, 0);

    for (std::size_t m = 0; m < pairings.size(); ++m) {
        MatchRecord& rec = records[m];
        const auto [i, j] = pairings[m];
        const std::size_t k = rec.combined_ranking.members.size();

        double mean_pos_i = 0.0, mean_pos_j = 0.0;
        int count_i = 0, count_j = 0;
        int winner_half_i = 0, winner_half_j = 0;
        for (std::size_t p = 0; p < k; ++p) {
            const auto& doc = rec.combined_ranking.members[p];
            const std::size_t g = group_of.at(doc.doc_id);
            const double position = static_cast<double>(p + 1);
            auto& stat = doc_stats[doc.doc_id];
            stat.position_sum += position;
            stat.matches_played += 1;
            norm_position_sum[g] += position / static_cast<double>(k);
            docs_seen[g] += 1;
            if (g == i) {
                mean_pos_i += position;
                ++count_i;
            } else {
                mean_pos_j += position;
                ++count_j;
            }
        }
        for (const auto& doc : rec.split.winner_half) {
            (group_of.at(doc.doc_id) == i ? winner_half_i : winner_half_j) += 1;
        }
        mean_pos_i /= std::max(count_i, 1);
        mean_pos_j /= std::max(count_j, 1);

        // Majority of the winner half takes the match; ties go to the group
        // whose documents sit higher in the combined ranking, then to the
        // earlier retriever segment.
        std::size_t winner = i;
        if (winner_half_j > winner_half_i) {
            winner = j;
        } else if (winner_half_j == winner_half_i && mean_pos_j < mean_pos_i) {
            winner = j;
        }
        wins[winner] += 1;

        count_call(result.trace, rec);
        result.trace.matches.push_back(std::move(rec));
    }

    // Document-level standings: mean position across every match the document
    // played, group win record as the tie-break, retriever rank as the last
    // resort. The top-scored document sits first in every ranking it appears
    // in, so it always lands at final rank 1 under a consistent ranker.
    std::vector<const Candidate*> docs;
    docs.reserve(candidates.size());
    for (const auto& rec : initial) {
        for (const auto& c : rec.combined_ranking.members) docs.push_back(&c);
    }
    std::sort(docs.begin(), docs.end(), [&](const Candidate* a, const Candidate* b) {
        const auto& sa = doc_stats.at(a->doc_id);
        const auto& sb = doc_stats.at(b->doc_id);
        const double ma = sa.position_sum / sa.matches_played;
        const double mb = sb.position_sum / sb.matches_played;
        if (ma != mb) return ma < mb;
        const int wa = wins[group_of.at(a->doc_id)];
        const int wb = wins[group_of.at(b->doc_id)];
        if (wa != wb) return wa > wb;
        return a->first_stage_rank < b->first_stage_rank;
    });

    result.ordered.reserve(docs.size());
    for (const Candidate* c : docs) result.ordered.push_back(*c);
    return result;
}

AssembledRanking rerank(const Query& query, const std::vector<Candidate>& candidates,
                        const TournamentConfig& config, Ranker& ranker) {
    switch (config.strategy) {
        case Strategy::kSingleElim:
            return run_single_elimination(query, candidates, config, ranker);
        case Strategy::kDoubleElim:
            return run_double_elimination(query, candidates, config, ranker);
        case Strategy::kRoundRobin:
            return run_round_robin(query, candidates, config, ranker);
    }
    throw InvalidArgumentError("unknown strategy");
}

CostEstimate estimate_cost(int n, int g_max, Strategy strategy) {
    if (n < 1) throw InvalidArgumentError("estimate_cost: n must be >= 1");

    std::vector<Candidate> synthetic;
    synthetic.reserve(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) {
        synthetic.push_back({"d" + std::to_string(i), "", static_cast<double>(n - i + 1), i});
    }

    IdentityRanker counting_ranker;
    TournamentConfig config;
    config.g_max = g_max;
    config.strategy = strategy;
    config.max_parallel_matches = 1;
    const AssembledRanking dry =
        rerank({"cost", "cost"}, synthetic, config, counting_ranker);

    CostEstimate estimate;
    estimate.calls = dry.trace.llm_calls;
    estimate.docs_processed = dry.trace.docs_processed;
    for (const auto& [bracket, rounds] : dry.trace.rounds_per_bracket) {
        if (bracket == Bracket::kInitial) continue;
        estimate.rounds = std::max(estimate.rounds, rounds);
    }
    return estimate;
}

void write_trace_jsonl(const TournamentTrace& trace, std::ostream& out,
                       const std::string& qid) {
    for (const auto& rec : trace.matches) {
        json line;
        if (!qid.empty()) line["qid"] = qid;
        line["bracket"] = bracket_name(rec.bracket);
        line["round_index"] = rec.round_index;
        line["bye"] = rec.bye;
        line["input_group_ids"] = rec.input_group_ids;
        line["combined_ranking"] = ids_of(rec.combined_ranking.members);
        line["winner_half"] = ids_of(rec.split.winner_half);
        line["loser_half"] = ids_of(rec.split.loser_half);
        if (!rec.combined_ranking.reasoning_text.empty()) {
            line["reasoning_text"] = rec.combined_ranking.reasoning_text;
        }
        out << line.dump() << "\n";
    }
}

}  // namespace bracketrank
