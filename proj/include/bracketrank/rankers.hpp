#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "bracketrank/llm_client.hpp"
#include "bracketrank/prompting.hpp"
#include "bracketrank/types.hpp"

namespace bracketrank {

// A listwise ranker: every tournament stage calls exactly this. The returned
// group is always a permutation of the input. Implementations must be safe to
// invoke concurrently for distinct groups.
class Ranker {
public:
    virtual ~Ranker() = default;
    virtual RankedGroup rank_group(const Query& query,
                                   const std::vector<Candidate>& group) = 0;
};

// Neutral element: returns the input order unchanged.
class IdentityRanker final : public Ranker {
public:
    RankedGroup rank_group(const Query& query,
                           const std::vector<Candidate>& group) override;
};

// Deterministic test/ground-truth ranker: sorts descending by a known score
// table, ties broken by ascending first_stage_rank. Throws
// MissingOracleScoreError when a doc_id has no entry.
class OracleRanker final : public Ranker {
public:
    explicit OracleRanker(std::unordered_map<std::string, double> scores);

    RankedGroup rank_group(const Query& query,
                           const std::vector<Candidate>& group) override;

private:
    std::unordered_map<std::string, double> scores_;
};

// Loads a two-column "doc_id<TAB>score" table; later entries win.
std::unordered_map<std::string, double> load_oracle_scores(const std::filesystem::path& path);

// LLM-backed ranker: build_prompt -> complete -> parse_ranking -> reorder.
// Unparseable output is retried up to retry_limit fresh calls; when the call
// chain still fails (or transport retries are exhausted) the input order is
// returned with a "FallbackUsed:" header in reasoning_text so batch runs
// never abort on one bad generation. AuthError propagates.
class LlmRanker final : public Ranker {
public:
    LlmRanker(std::shared_ptr<ChatTransport> transport, PromptTemplate tmpl,
              bool reasoning, int retry_limit = 0);

    RankedGroup rank_group(const Query& query,
                           const std::vector<Candidate>& group) override;

    static constexpr const char* kFallbackHeader = "FallbackUsed: ";

private:
    std::shared_ptr<ChatTransport> transport_;
    PromptTemplate template_;
    bool reasoning_;
    int retry_limit_;
};

}  // namespace bracketrank
