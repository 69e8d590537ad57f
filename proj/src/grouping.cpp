#include "bracketrank/grouping.hpp"

#include <string>

namespace bracketrank {

GroupPlan plan_groups(int n, int g_max) {
    if (n < 1) {
        throw InvalidArgumentError("plan_groups: n must be >= 1, got " + std::to_string(n));
    }
    if (g_max < 2) {
        throw InvalidArgumentError("plan_groups: g_max must be >= 2, got " + std::to_string(g_max));
    }

    GroupPlan plan;
    plan.g_num = (n + g_max - 1) / g_max;
    plan.base_size_s = n / plan.g_num;
    plan.remainder_r = n % plan.g_num;

    plan.sizes.reserve(static_cast<std::size_t>(plan.g_num));
    plan.ranges.reserve(static_cast<std::size_t>(plan.g_num));
    int next_start = 1;
    for (int i = 1; i <= plan.g_num; ++i) {
        const int size = (i <= plan.remainder_r) ? plan.base_size_s + 1 : plan.base_size_s;
        plan.sizes.push_back(size);
        plan.ranges.emplace_back(next_start, next_start + size - 1);
        next_start += size;
    }
    return plan;
}

std::vector<std::vector<Candidate>> split_into_groups(const std::vector<Candidate>& candidates,
                                                      const GroupPlan& plan) {
    std::size_t total = 0;
    for (int size : plan.sizes) total += static_cast<std::size_t>(size);
    if (candidates.size() != total) {
        throw SizeMismatchError("split_into_groups: got " + std::to_string(candidates.size()) +
                                " candidates for a plan of " + std::to_string(total));
    }

    std::vector<std::vector<Candidate>> groups;
    groups.reserve(plan.ranges.size());
    for (const auto& [a, b] : plan.ranges) {
        groups.emplace_back(candidates.begin() + (a - 1), candidates.begin() + b);
    }
    return groups;
}

int derive_g_max(const TokenBudget& budget) {
    if (budget.avg_passage_len < 1) {
        throw InvalidArgumentError("derive_g_max: avg_passage_len must be >= 1");
    }
    if (budget.per_doc_framing_h < 0 || budget.overhead_t < 0 || budget.budget_b < 1) {
        throw InvalidArgumentError("derive_g_max: negative or zero budget fields");
    }
    const long long usable = static_cast<long long>(budget.budget_b) - budget.overhead_t;
    const long long per_doc =
        static_cast<long long>(budget.avg_passage_len) + budget.per_doc_framing_h;
    const long long g = usable > 0 ? usable / per_doc : 0;
    if (g < 2) {
        throw BudgetTooSmallError("token budget admits " + std::to_string(g) +
                                  " docs per prompt; a listwise prompt needs at least 2");
    }
    return static_cast<int>(g);
}

}  // namespace bracketrank
