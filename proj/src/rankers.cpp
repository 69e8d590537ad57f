#include "bracketrank/rankers.hpp"

#include <algorithm>
#include <fstream>

namespace bracketrank {

RankedGroup IdentityRanker::rank_group(const Query&, const std::vector<Candidate>& group) {
    RankedGroup out;
    out.members = group;
    return out;
}

OracleRanker::OracleRanker(std::unordered_map<std::string, double> scores)
    : scores_(std::move(scores)) {}

RankedGroup OracleRanker::rank_group(const Query&, const std::vector<Candidate>& group) {
    std::vector<std::pair<double, const Candidate*>> scored;
    scored.reserve(group.size());
    for (const auto& c : group) {
        const auto it = scores_.find(c.doc_id);
        if (it == scores_.end()) {
            throw MissingOracleScoreError(c.doc_id);
        }
        scored.emplace_back(it->second, &c);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second->first_stage_rank < b.second->first_stage_rank;
    });

    RankedGroup out;
    out.members.reserve(group.size());
    for (const auto& [score, candidate] : scored) {
        out.members.push_back(*candidate);
    }
    return out;
}

std::unordered_map<std::string, double> load_oracle_scores(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open oracle score file: " + path.string());
    }
    std::unordered_map<std::string, double> scores;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) {
            throw MalformedLineError(line_no, "expected doc_id<TAB>score");
        }
        try {
            scores[line.substr(0, tab)] = std::stod(line.substr(tab + 1));
        } catch (const std::exception&) {
            throw MalformedLineError(line_no, "score is not a number");
        }
    }
    return scores;
}

LlmRanker::LlmRanker(std::shared_ptr<ChatTransport> transport, PromptTemplate tmpl,
                     bool reasoning, int retry_limit)
    : transport_(std::move(transport)),
      template_(std::move(tmpl)),
      reasoning_(reasoning),
      retry_limit_(retry_limit < 0 ? 0 : retry_limit) {}

RankedGroup LlmRanker::rank_group(const Query& query, const std::vector<Candidate>& group) {
    const ChatPrompt prompt = build_prompt(query, group, template_, reasoning_);
    const int k = static_cast<int>(group.size());

    std::string failure;
    for (int attempt = 0; attempt <= retry_limit_; ++attempt) {
        std::string raw;
        try {
            raw = transport_->complete(prompt.system_message, prompt.user_message);
        } catch (const TransportError& e) {
            failure = e.what();
            break;  // the client has already retried the transport
        } catch (const MalformedResponseError& e) {
            failure = e.what();
            break;
        }
        try {
            const ParsedRanking parsed = parse_ranking(raw, k);
            RankedGroup out;
            out.members.reserve(group.size());
            for (int id : parsed.order) {
                out.members.push_back(group[static_cast<std::size_t>(id - 1)]);
            }
            out.reasoning_text = parsed.reasoning_text;
            return out;
        } catch (const UnparseableError& e) {
            failure = e.what();  // a fresh call may come back well-formed
        }
    }

    RankedGroup fallback;
    fallback.members = group;
    fallback.reasoning_text = std::string(kFallbackHeader) + failure + "\n";
    return fallback;
}

}  // namespace bracketrank
