#pragma once

// Shared helpers for unit and acceptance tests: deterministic candidate
// generators and scripted chat transports that exercise the real LLM ranking
// path (prompt -> response -> parse -> repair) without a network.

#include <algorithm>
#include <cstdint>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "bracketrank/llm_client.hpp"
#include "bracketrank/types.hpp"

namespace testsupport {

inline std::vector<bracketrank::Candidate> make_candidates(int n) {
    std::vector<bracketrank::Candidate> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) {
        out.push_back({"d" + std::to_string(i),
                       "passage " + std::to_string(i) + " about topic " + std::to_string(i % 7),
                       static_cast<double>(n - i + 1), i});
    }
    return out;
}

inline std::unordered_map<std::string, double> random_scores(std::mt19937_64& rng, int n) {
    // Distinct scores so the oracle order is unambiguous.
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) values.push_back(static_cast<double>(i + 1));
    std::shuffle(values.begin(), values.end(), rng);
    std::unordered_map<std::string, double> scores;
    for (int i = 1; i <= n; ++i) {
        scores["d" + std::to_string(i)] = values[static_cast<std::size_t>(i - 1)];
    }
    return scores;
}

inline std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

// Group size as stated in the prompt's own instruction line.
inline int extract_group_size(const std::string& user_message) {
    const std::string marker = "I will provide you with ";
    const std::size_t pos = user_message.find(marker);
    if (pos == std::string::npos) return 0;
    int k = 0;
    std::size_t i = pos + marker.size();
    while (i < user_message.size() && user_message[i] >= '0' && user_message[i] <= '9') {
        k = k * 10 + (user_message[i] - '0');
        ++i;
    }
    return k;
}

// Produces a model response for a k-passage prompt, sometimes well formed and
// sometimes mutated: dropped ids, duplicates, out-of-range ids, prose noise,
// think blocks with or without a closing tag, or no identifiers at all.
inline std::string mutated_response(int k, std::mt19937_64& rng) {
    auto chance = [&](int percent) {
        return std::uniform_int_distribution<int>(0, 99)(rng) < percent;
    };

    if (chance(6)) {
        return "I cannot rank these passages, sorry.";
    }

    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(k));
    for (int i = 1; i <= k; ++i) order.push_back(i);
    std::shuffle(order.begin(), order.end(), rng);

    if (k > 1 && chance(25)) {  // lose a tail segment
        const auto keep = std::uniform_int_distribution<std::size_t>(1, order.size())(rng);
        order.resize(keep);
    }
    if (chance(25)) {  // repeat a random entry
        order.insert(order.begin() + std::uniform_int_distribution<std::size_t>(
                                         0, order.size() - 1)(rng),
                     order[std::uniform_int_distribution<std::size_t>(0, order.size() - 1)(rng)]);
    }
    if (chance(25)) {  // out-of-range identifiers
        order.push_back(k + 1 + std::uniform_int_distribution<int>(0, 40)(rng));
        if (chance(50)) order.insert(order.begin(), 0);
    }

    const char* separators[] = {" > ", ">", ", ", " "};
    const char* sep = separators[std::uniform_int_distribution<int>(0, 3)(rng)];
    std::ostringstream body;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i > 0) body << sep;
        body << "[" << order[i] << "]";
    }

    std::ostringstream response;
    if (chance(50)) {
        response << "<think>\nThe most relevant passage is [2] because it covers the query.\n";
        if (chance(85)) {
            response << "</think>\n";
        }  // else: unterminated think block
    }
    if (chance(30)) response << "Final Ranking: ";
    response << body.str();
    if (chance(20)) response << "\nHope this helps!";
    return response.str();
}

// Deterministic chat stand-in: the response is a pure function of the prompt
// text, so concurrent tournaments see identical answers in any schedule.
class FuzzTransport final : public bracketrank::ChatTransport {
public:
    explicit FuzzTransport(std::uint64_t seed) : seed_(seed) {}

    std::string complete(const std::string&, const std::string& user_message) override {
        const int k = extract_group_size(user_message);
        if (k <= 0) return "[1]";
        std::mt19937_64 rng(seed_ ^ fnv1a(user_message));
        return mutated_response(k, rng);
    }

private:
    std::uint64_t seed_;
};

// Always answers a clean identity permutation; deterministic per prompt.
class WellFormedTransport final : public bracketrank::ChatTransport {
public:
    explicit WellFormedTransport(std::uint64_t seed) : seed_(seed) {}

    std::string complete(const std::string&, const std::string& user_message) override {
        const int k = extract_group_size(user_message);
        std::vector<int> order;
        for (int i = 1; i <= std::max(k, 1); ++i) order.push_back(i);
        std::mt19937_64 rng(seed_ ^ fnv1a(user_message));
        std::shuffle(order.begin(), order.end(), rng);
        std::ostringstream out;
        out << "<think>\ncomparing passages\n</think>\n";
        for (std::size_t i = 0; i < order.size(); ++i) {
            out << (i ? " > " : "") << "[" << order[i] << "]";
        }
        return out.str();
    }

private:
    std::uint64_t seed_;
};

// Replays a fixed list of responses and records every received message.
class CannedTransport final : public bracketrank::ChatTransport {
public:
    explicit CannedTransport(std::vector<std::string> responses)
        : responses_(std::move(responses)) {}

    std::string complete(const std::string& system_message,
                         const std::string& user_message) override {
        std::lock_guard<std::mutex> lock(mutex_);
        received_.push_back({system_message, user_message});
        const std::string& response =
            responses_[std::min(received_.size() - 1, responses_.size() - 1)];
        if (response == "<transport-error>") {
            throw bracketrank::TransportError("scripted transport failure");
        }
        return response;
    }

    std::size_t calls() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return received_.size();
    }

    std::pair<std::string, std::string> received(std::size_t i) const {
        std::lock_guard<std::mutex> lock(mutex_);
        return received_.at(i);
    }

private:
    std::vector<std::string> responses_;
    mutable std::vector<std::pair<std::string, std::string>> received_;
    mutable std::mutex mutex_;
};

}  // namespace testsupport
