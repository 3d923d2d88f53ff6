#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace dbt::utility {

/// Element of R u {infeasible, unknown}. Finite costs are finite reals.
class Cost {
public:
    enum class Kind : std::uint8_t { finite, infeasible, unknown };

    /// Throws std::invalid_argument for NaN or infinities.
    static Cost finite(double v);
    static constexpr Cost infeasible() noexcept { return Cost(Kind::infeasible, 0.0); }
    static constexpr Cost unknown() noexcept { return Cost(Kind::unknown, 0.0); }

    constexpr Kind kind() const noexcept { return kind_; }
    constexpr bool is_finite() const noexcept { return kind_ == Kind::finite; }
    constexpr bool is_infeasible() const noexcept { return kind_ == Kind::infeasible; }
    constexpr bool is_unknown() const noexcept { return kind_ == Kind::unknown; }
    /// Only meaningful for finite costs.
    constexpr double value() const noexcept { return value_; }

    /// "3.5", "x" (infeasible) or "?" (unknown).
    std::string to_string() const;
    nlohmann::json to_json() const;
    static Cost from_json(const nlohmann::json& j);

    constexpr bool operator==(const Cost&) const = default;

private:
    constexpr Cost(Kind k, double v) noexcept : kind_(k), value_(v) {}

    Kind kind_ = Kind::unknown;
    double value_ = 0.0;
};

/// finite + finite = sum; infeasible absorbs; otherwise unknown.
Cost operator+(Cost a, Cost b);

/// Minimum / maximum over execution paths. Infeasible dominates, then unknown.
Cost path_min(Cost a, Cost b);
Cost path_max(Cost a, Cost b);

/// Estimated execution cost bounds (lower is better) for success and failure.
struct UtilityBounds {
    Cost succ_min = Cost::unknown();
    Cost succ_max = Cost::unknown();
    Cost fail_min = Cost::unknown();
    Cost fail_max = Cost::unknown();

    static UtilityBounds infeasible() noexcept {
        return {Cost::infeasible(), Cost::infeasible(), Cost::infeasible(), Cost::infeasible()};
    }
    static UtilityBounds unknown() noexcept { return {}; }
    static UtilityBounds constant(double succ_min, double succ_max, double fail_min, double fail_max);

    /// All four infeasible.
    bool is_infeasible() const noexcept;
    /// Either all infeasible or none, and min <= max wherever both are finite.
    bool well_formed() const noexcept;

    std::string to_string() const;
    nlohmann::json to_json() const;
    static UtilityBounds from_json(const nlohmann::json& j);

    bool operator==(const UtilityBounds&) const = default;
};

} // namespace dbt::utility
