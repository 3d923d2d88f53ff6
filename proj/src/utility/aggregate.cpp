#include "dbt/utility/aggregate.hpp"

#include <optional>
#include <stdexcept>

namespace dbt::utility {
namespace {

void require_children(std::span<const UtilityBounds> children) {
    if (children.empty()) {
        throw std::invalid_argument("aggregation needs at least one child");
    }
}

void require_threshold(std::size_t n, std::size_t k) {
    if (k < 1 || k > n) {
        throw std::invalid_argument("parallel threshold must be in [1, child count]");
    }
}

bool any_infeasible(std::span<const UtilityBounds> children) {
    for (const auto& c : children) {
        if (c.is_infeasible()) {
            return true;
        }
    }
    return false;
}

struct Range {
    Cost min;
    Cost max;
};

void merge(std::optional<Range>& acc, Cost lo, Cost hi) {
    if (!acc) {
        acc = Range{lo, hi};
    } else {
        acc->min = path_min(acc->min, lo);
        acc->max = path_max(acc->max, hi);
    }
}

} // namespace

std::vector<ParallelPath> parallel_execution_paths(std::span<const UtilityBounds> children, std::size_t k) {
    require_children(children);
    const std::size_t n = children.size();
    require_threshold(n, k);

    std::vector<ParallelPath> out;
    std::vector<PathOutcome> outcomes(n, PathOutcome::succeeded);
    auto visit = [&](auto&& self, std::size_t i) -> void {
        if (i == n) {
            std::size_t s = 0;
            std::size_t f = 0;
            Cost lo = Cost::finite(0.0);
            Cost hi = Cost::finite(0.0);
            for (std::size_t c = 0; c < n; ++c) {
                if (outcomes[c] == PathOutcome::succeeded) {
                    ++s;
                    lo = lo + children[c].succ_min;
                    hi = hi + children[c].succ_max;
                } else if (outcomes[c] == PathOutcome::failed) {
                    ++f;
                    lo = lo + children[c].fail_min;
                    hi = hi + children[c].fail_max;
                }
            }
            if (s >= k) {
                out.push_back(ParallelPath{outcomes, NodeState::succeeded, lo, hi});
            } else if (f > n - k) {
                out.push_back(ParallelPath{outcomes, NodeState::failed, lo, hi});
            }
            return;
        }
        const bool feasible = !children[i].is_infeasible();
        for (auto o : {PathOutcome::succeeded, PathOutcome::failed, PathOutcome::running}) {
            if (!feasible && o != PathOutcome::running) {
                continue;
            }
            outcomes[i] = o;
            self(self, i + 1);
        }
    };
    visit(visit, 0);
    return out;
}

UtilityBounds aggregate_parallel(std::span<const UtilityBounds> children, std::size_t k) {
    require_children(children);
    const std::size_t n = children.size();
    require_threshold(n, k);

    // table[s][f]: cost range over partial assignments with s successes and f failures
    using Table = std::vector<std::vector<std::optional<Range>>>;
    Table table(n + 1, std::vector<std::optional<Range>>(n + 1));
    table[0][0] = Range{Cost::finite(0.0), Cost::finite(0.0)};
    for (const auto& child : children) {
        Table next(n + 1, std::vector<std::optional<Range>>(n + 1));
        for (std::size_t s = 0; s <= n; ++s) {
            for (std::size_t f = 0; s + f <= n; ++f) {
                const auto& cell = table[s][f];
                if (!cell) {
                    continue;
                }
                merge(next[s][f], cell->min, cell->max);
                if (child.is_infeasible()) {
                    continue;
                }
                if (s + 1 + f <= n) {
                    merge(next[s + 1][f], cell->min + child.succ_min, cell->max + child.succ_max);
                    merge(next[s][f + 1], cell->min + child.fail_min, cell->max + child.fail_max);
                }
            }
        }
        table = std::move(next);
    }

    std::optional<Range> success;
    std::optional<Range> failure;
    for (std::size_t s = 0; s <= n; ++s) {
        for (std::size_t f = 0; s + f <= n; ++f) {
            const auto& cell = table[s][f];
            if (!cell) {
                continue;
            }
            if (s >= k) {
                merge(success, cell->min, cell->max);
            } else if (f > n - k) {
                merge(failure, cell->min, cell->max);
            }
        }
    }
    if (!success) {
        return UtilityBounds::infeasible();
    }
    UtilityBounds out;
    out.succ_min = success->min;
    out.succ_max = success->max;
    if (failure) {
        out.fail_min = failure->min;
        out.fail_max = failure->max;
    }
    return out;
}

UtilityBounds aggregate_sequence(std::span<const UtilityBounds> children) {
    require_children(children);
    if (any_infeasible(children)) {
        return UtilityBounds::infeasible();
    }
    Cost prefix_min = Cost::finite(0.0);
    Cost prefix_max = Cost::finite(0.0);
    std::optional<Range> failure;
    for (const auto& c : children) {
        merge(failure, prefix_min + c.fail_min, prefix_max + c.fail_max);
        prefix_min = prefix_min + c.succ_min;
        prefix_max = prefix_max + c.succ_max;
    }
    return {prefix_min, prefix_max, failure->min, failure->max};
}

UtilityBounds aggregate_fallback(std::span<const UtilityBounds> children) {
    require_children(children);
    if (any_infeasible(children)) {
        return UtilityBounds::infeasible();
    }
    Cost prefix_min = Cost::finite(0.0);
    Cost prefix_max = Cost::finite(0.0);
    std::optional<Range> success;
    for (const auto& c : children) {
        merge(success, prefix_min + c.succ_min, prefix_max + c.succ_max);
        prefix_min = prefix_min + c.fail_min;
        prefix_max = prefix_max + c.fail_max;
    }
    return {success->min, success->max, prefix_min, prefix_max};
}

double scalarize(const UtilityBounds& u, const CompareConfig& cfg) {
    auto v = [&](Cost c) { return c.is_finite() ? c.value() : cfg.unknown_cost; };
    return (v(u.succ_min) + v(u.succ_max)) / 2.0;
}

std::weak_ordering compare_utility(const UtilityBounds& a, const UtilityBounds& b, std::string_view key_a,
                                   std::string_view key_b, const CompareConfig& cfg) {
    const bool ia = a.is_infeasible();
    const bool ib = b.is_infeasible();
    if (ia != ib) {
        return ia ? std::weak_ordering::greater : std::weak_ordering::less;
    }
    if (!ia) {
        const double sa = scalarize(a, cfg);
        const double sb = scalarize(b, cfg);
        if (sa != sb) {
            return sa < sb ? std::weak_ordering::less : std::weak_ordering::greater;
        }
        auto v = [&](Cost c) { return c.is_finite() ? c.value() : cfg.unknown_cost; };
        const double ma = v(a.succ_max);
        const double mb = v(b.succ_max);
        if (ma != mb) {
            return ma < mb ? std::weak_ordering::less : std::weak_ordering::greater;
        }
    }
    const int c = key_a.compare(key_b);
    if (c != 0) {
        return c < 0 ? std::weak_ordering::less : std::weak_ordering::greater;
    }
    return std::weak_ordering::equivalent;
}

} // namespace dbt::utility
