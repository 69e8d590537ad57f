#pragma once

#include <utility>
#include <vector>

#include "bracketrank/types.hpp"

namespace bracketrank {

// Partition of N candidates into g_num contiguous groups whose sizes differ by
// at most one and never exceed the per-prompt cap.
struct GroupPlan {
    int g_num = 0;        // ceil(n / g_max)
    int base_size_s = 0;  // floor(n / g_num)
    int remainder_r = 0;  // n mod g_num; the first r groups get s+1 docs
    std::vector<int> sizes;
    std::vector<std::pair<int, int>> ranges;  // 1-based inclusive (a_i, b_i)
};

// Deterministic plan for n candidates with at most g_max docs per group.
// Throws InvalidArgumentError if n < 1 or g_max < 2.
GroupPlan plan_groups(int n, int g_max);

// Slices candidates (sorted by first_stage_rank ascending) into the plan's
// contiguous ranges, preserving retriever order inside every group.
// Throws SizeMismatchError if the candidate count does not match the plan.
std::vector<std::vector<Candidate>> split_into_groups(const std::vector<Candidate>& candidates,
                                                      const GroupPlan& plan);

// Largest group size that fits the token budget: floor((B - T) / (L + H)).
// Throws BudgetTooSmallError if the result is < 2.
int derive_g_max(const TokenBudget& budget);

}  // namespace bracketrank
