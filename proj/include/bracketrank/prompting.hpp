#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bracketrank/types.hpp"

namespace bracketrank {

// Listwise ranking prompt. The defaults reproduce the reasoning-enhanced
// template: passages enumerated as "[i] <text>", the query stated both in the
// instruction and on a trailing "Search Query:" line, a mandatory <think>
// scaffold, and a strict "[1] > [2] > [3]" output format.
struct PromptTemplate {
    std::string system_text =
        "You are BracketRank, an intelligent assistant that can rank passages "
        "based on their relevancy to the query.";
    std::string instruction_preamble =
        "I will provide you with {K} passages, each indicated by number identifier [].\n"
        "Rank the passages based on their relevance to query: {QUERY}.";
    bool think_block_enabled = true;
    std::string output_format_suffix =
        "The output format should be [1] > [2] > [3]. Only output the ranking "
        "result in this format{AFTER_THINK}. Do not say any other words.";

    // Optional whole-body override loaded from a template file with {QUERY},
    // {PASSAGES} and {K} placeholders. When set it replaces the structured
    // rendering entirely.
    std::optional<std::string> custom_user_template;

    // Passage texts are truncated to this many characters before insertion.
    std::size_t passage_char_cap = 4000;
};

struct ChatPrompt {
    std::string system_message;
    std::string user_message;
};

// Renders the (system, user) message pair for one group. reasoning == false
// omits the <think> scaffold entirely (ablation mode); identifiers always
// restart at 1 inside every prompt. Throws EmptyGroupError on an empty group.
ChatPrompt build_prompt(const Query& query, const std::vector<Candidate>& group,
                        const PromptTemplate& tmpl, bool reasoning);

// Reads a user-message template file ({QUERY}/{PASSAGES}/{K} placeholders)
// into tmpl.custom_user_template.
PromptTemplate load_template_file(const std::filesystem::path& path,
                                  PromptTemplate tmpl = PromptTemplate{});

enum class Repair {
    kDedupedKeptFirst,
    kAppendedMissingInOriginalOrder,
    kDroppedOutOfRange,
};

const char* repair_name(Repair r);

// A repaired model ranking: always a full permutation of 1..k.
struct ParsedRanking {
    std::vector<int> order;  // 1-based passage identifiers
    std::vector<Repair> repairs_applied;
    std::string reasoning_text;  // contents of the outermost <think>...</think>
};

// Extracts the ranking from a raw model response. The region after the final
// "</think>" (when present) is scanned for bracketed integers in order of
// appearance; out-of-range identifiers are dropped, duplicates keep their
// first occurrence, and missing identifiers are appended in ascending order.
// Throws UnparseableError when not a single in-range identifier is found.
ParsedRanking parse_ranking(const std::string& raw_response, int k);

// Canonical "[a] > [b] > ..." form; parse_ranking round-trips it unchanged.
std::string serialize_ranking(const std::vector<int>& order);

}  // namespace bracketrank
