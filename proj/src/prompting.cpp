#include "bracketrank/prompting.hpp"

#include <fstream>
#include <sstream>

namespace bracketrank {

namespace {

void replace_all(std::string& text, const std::string& from, const std::string& to) {
    if (from.empty()) return;
    std::size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
}

std::string render_passages(const std::vector<Candidate>& group, std::size_t char_cap) {
    std::ostringstream out;
    for (std::size_t i = 0; i < group.size(); ++i) {
        std::string text = group[i].text;
        if (char_cap > 0 && text.size() > char_cap) {
            text.resize(char_cap);
        }
        out << "[" << (i + 1) << "] " << text;
        if (i + 1 < group.size()) out << "\n";
    }
    return out.str();
}

constexpr const char* kThinkScaffold =
    "First, analyse and compare the content of the passages. Think step-by-step "
    "about how each passage relates to the search query in terms of specificity, "
    "coverage, and relevance. Summarise your thoughts within the following tags:\n"
    "\n"
    "<think>\n"
    "1. Analyse query requirements and key concepts\n"
    "2. Evaluate how well each document addresses these requirements\n"
    "3. Provide explicit reasoning for relevance judgments\n"
    "4. Generate a ranked list based on this reasoning\n"
    "</think>\n";

}  // namespace

ChatPrompt build_prompt(const Query& query, const std::vector<Candidate>& group,
                        const PromptTemplate& tmpl, bool reasoning) {
    if (group.empty()) {
        throw EmptyGroupError("build_prompt: group is empty");
    }

    const std::string k_str = std::to_string(group.size());
    const std::string passages = render_passages(group, tmpl.passage_char_cap);

    if (tmpl.custom_user_template) {
        std::string body = *tmpl.custom_user_template;
        replace_all(body, "{QUERY}", query.text);
        replace_all(body, "{PASSAGES}", passages);
        replace_all(body, "{K}", k_str);
        return {tmpl.system_text, body};
    }

    std::string preamble = tmpl.instruction_preamble;
    replace_all(preamble, "{K}", k_str);
    replace_all(preamble, "{QUERY}", query.text);

    std::string suffix = tmpl.output_format_suffix;
    replace_all(suffix, "{AFTER_THINK}",
                reasoning && tmpl.think_block_enabled ? " after the <think> section" : "");

    std::ostringstream user;
    user << preamble << "\n\n";
    user << passages << "\n\n";
    user << "Search Query: " << query.text << "\n\n";
    user << "Rank the " << k_str
         << " passages above based on their relevance to the search query.\n\n";
    if (reasoning && tmpl.think_block_enabled) {
        user << kThinkScaffold << "\n";
        user << "Then, based on your reasoning, provide the final ranking. ";
    } else {
        user << "Provide the final ranking. ";
    }
    user << "The passages should be listed in descending order using their identifiers. "
            "The most relevant passages should be listed first.\n\n";
    user << suffix;

    return {tmpl.system_text, user.str()};
}

PromptTemplate load_template_file(const std::filesystem::path& path, PromptTemplate tmpl) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open template file: " + path.string());
    }
    std::ostringstream body;
    body << in.rdbuf();
    tmpl.custom_user_template = body.str();
    return tmpl;
}

const char* repair_name(Repair r) {
    switch (r) {
        case Repair::kDedupedKeptFirst: return "deduped_kept_first";
        case Repair::kAppendedMissingInOriginalOrder: return "appended_missing_in_original_order";
        case Repair::kDroppedOutOfRange: return "dropped_out_of_range";
    }
    return "";
}

ParsedRanking parse_ranking(const std::string& raw_response, int k) {
    if (k < 1) {
        throw InvalidArgumentError("parse_ranking: k must be >= 1");
    }

    ParsedRanking result;

    const std::size_t think_open = raw_response.find("<think>");
    const std::size_t think_close = raw_response.rfind("</think>");
    if (think_open != std::string::npos && think_close != std::string::npos &&
        think_open + 7 <= think_close) {
        result.reasoning_text = raw_response.substr(think_open + 7, think_close - (think_open + 7));
    }

    const std::size_t region_start =
        think_close != std::string::npos ? think_close + 8 : 0;

    bool saw_duplicate = false;
    bool saw_out_of_range = false;
    std::vector<char> taken(static_cast<std::size_t>(k) + 1, 0);
    for (std::size_t i = region_start; i < raw_response.size(); ++i) {
        if (raw_response[i] != '[') continue;
        std::size_t j = i + 1;
        long long value = 0;
        bool overflow = false;
        while (j < raw_response.size() && raw_response[j] >= '0' && raw_response[j] <= '9') {
            value = value * 10 + (raw_response[j] - '0');
            if (value > 1'000'000'000) overflow = true;
            ++j;
        }
        if (j == i + 1 || j >= raw_response.size() || raw_response[j] != ']') {
            continue;  // not a bracketed integer
        }
        i = j;
        if (overflow || value < 1 || value > k) {
            saw_out_of_range = true;
            continue;
        }
        const int id = static_cast<int>(value);
        if (taken[static_cast<std::size_t>(id)]) {
            saw_duplicate = true;
            continue;
        }
        taken[static_cast<std::size_t>(id)] = 1;
        result.order.push_back(id);
    }

    if (result.order.empty()) {
        throw UnparseableError("parse_ranking: no valid identifiers in response");
    }

    bool appended = false;
    for (int id = 1; id <= k; ++id) {
        if (!taken[static_cast<std::size_t>(id)]) {
            result.order.push_back(id);
            appended = true;
        }
    }

    if (saw_duplicate) result.repairs_applied.push_back(Repair::kDedupedKeptFirst);
    if (appended) result.repairs_applied.push_back(Repair::kAppendedMissingInOriginalOrder);
    if (saw_out_of_range) result.repairs_applied.push_back(Repair::kDroppedOutOfRange);
    return result;
}

std::string serialize_ranking(const std::vector<int>& order) {
    std::ostringstream out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i > 0) out << " > ";
        out << "[" << order[i] << "]";
    }
    return out.str();
}

}  // namespace bracketrank
