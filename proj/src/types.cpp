#include "bracketrank/types.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace bracketrank {

namespace {

std::string join_ids(const std::vector<std::string>& ids) {
    std::ostringstream out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i > 0) out << ", ";
        out << ids[i];
    }
    return out.str();
}

}  // namespace

MissingDocumentError::MissingDocumentError(std::vector<std::string> missing)
    : Error("MissingDocument: corpus lacks " + std::to_string(missing.size()) +
            " document(s), first: " + join_ids(missing)),
      ids(std::move(missing)) {}

const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::kSingleElim: return "single";
        case Strategy::kDoubleElim: return "double";
        case Strategy::kRoundRobin: return "round_robin";
    }
    return "single";
}

Strategy strategy_from_name(const std::string& name) {
    if (name == "single") return Strategy::kSingleElim;
    if (name == "double") return Strategy::kDoubleElim;
    if (name == "round_robin") return Strategy::kRoundRobin;
    throw InvalidArgumentError("unknown strategy: " + name +
                               " (expected single|double|round_robin)");
}

const char* bracket_name(Bracket b) {
    switch (b) {
        case Bracket::kWinner: return "winner";
        case Bracket::kLoser: return "loser";
        case Bracket::kInitial: return "initial";
        case Bracket::kRoundRobin: return "round_robin";
        case Bracket::kDoubleElimLosers: return "double_elim_losers";
    }
    return "initial";
}

void validate_candidates(const std::vector<Candidate>& candidates) {
    std::unordered_set<std::string> seen_ids;
    seen_ids.reserve(candidates.size());
    for (const auto& c : candidates) {
        if (!seen_ids.insert(c.doc_id).second) {
            throw DuplicateDocIdError(c.doc_id);
        }
    }

    const int n = static_cast<int>(candidates.size());
    std::vector<char> seen_rank(static_cast<std::size_t>(n) + 1, 0);
    for (const auto& c : candidates) {
        if (c.first_stage_rank < 1 || c.first_stage_rank > n) {
            throw RankGapOrDuplicateError("rank " + std::to_string(c.first_stage_rank) +
                                          " outside 1.." + std::to_string(n));
        }
        if (seen_rank[static_cast<std::size_t>(c.first_stage_rank)]++) {
            throw RankGapOrDuplicateError("rank " + std::to_string(c.first_stage_rank) +
                                          " occurs more than once");
        }
    }
}

}  // namespace bracketrank
