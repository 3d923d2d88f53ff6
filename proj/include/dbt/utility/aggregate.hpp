#pragma once

#include <compare>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "dbt/core/state.hpp"
#include "dbt/utility/cost.hpp"

namespace dbt::utility {

/// Child outcome within one execution path; `running` children were not
/// resolved when the parent finished and add no cost to that path.
enum class PathOutcome : std::uint8_t { succeeded, failed, running };

/// One resolved execution path of a parallel node.
struct ParallelPath {
    std::vector<PathOutcome> outcomes;
    NodeState result = NodeState::succeeded; ///< succeeded or failed
    Cost min = Cost::unknown();
    Cost max = Cost::unknown();
};

/// Every resolved execution path of a parallel node with success threshold
/// `k`: at least k children succeeded, or more than n - k failed.
/// Infeasible children never resolve. Exponential in the child count.
std::vector<ParallelPath> parallel_execution_paths(std::span<const UtilityBounds> children, std::size_t k = 1);

/// Bounds over all parallel execution paths, computed by dynamic programming
/// over (successes, failures) counts.
///
/// Infeasible children never resolve: if the feasible children cannot reach
/// k successes the result is all-infeasible; when no failing path exists
/// the failure bounds are unknown.
UtilityBounds aggregate_parallel(std::span<const UtilityBounds> children, std::size_t k = 1);

/// Success: every child succeeds. Failure path i: children before i succeed,
/// child i fails. Any infeasible child makes the whole node infeasible.
UtilityBounds aggregate_sequence(std::span<const UtilityBounds> children);

/// Dual of aggregate_sequence.
UtilityBounds aggregate_fallback(std::span<const UtilityBounds> children);

struct CompareConfig {
    /// Stand-in for unknown fields when scalarizing.
    double unknown_cost = 1e6;
};

/// Score used for ranking: (succ_min + succ_max) / 2, unknown fields replaced.
double scalarize(const UtilityBounds& u, const CompareConfig& cfg = {});

/// Strict weak ordering "a is a better executor than b" lives in `less`.
/// All-infeasible ranks worst; then lower score; then lower succ_max; then
/// the caller's stable key.
std::weak_ordering compare_utility(const UtilityBounds& a, const UtilityBounds& b, std::string_view key_a = {},
                                   std::string_view key_b = {}, const CompareConfig& cfg = {});

} // namespace dbt::utility
