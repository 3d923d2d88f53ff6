#include "dbt/utility/cost.hpp"

#include <cmath>
#include <stdexcept>

namespace dbt::utility {

Cost Cost::finite(double v) {
    if (!std::isfinite(v)) {
        throw std::invalid_argument("finite cost must be a finite real");
    }
    return Cost(Kind::finite, v);
}

std::string Cost::to_string() const {
    switch (kind_) {
    case Kind::infeasible: return "x";
    case Kind::unknown: return "?";
    case Kind::finite: break;
    }
    nlohmann::json j = value_;
    return j.dump();
}

nlohmann::json Cost::to_json() const {
    switch (kind_) {
    case Kind::infeasible: return "x";
    case Kind::unknown: return "?";
    case Kind::finite: break;
    }
    return value_;
}

Cost Cost::from_json(const nlohmann::json& j) {
    if (j.is_number()) {
        return finite(j.get<double>());
    }
    if (j.is_string()) {
        const auto& s = j.get_ref<const std::string&>();
        if (s == "x") return infeasible();
        if (s == "?") return unknown();
    }
    throw std::invalid_argument("not a cost: " + j.dump());
}

Cost operator+(Cost a, Cost b) {
    if (a.is_finite() && b.is_finite()) {
        return Cost::finite(a.value() + b.value());
    }
    if (a.is_infeasible() || b.is_infeasible()) {
        return Cost::infeasible();
    }
    return Cost::unknown();
}

Cost path_min(Cost a, Cost b) {
    if (a.is_finite() && b.is_finite()) {
        return a.value() <= b.value() ? a : b;
    }
    return a + b; // same absorption rules as addition
}

Cost path_max(Cost a, Cost b) {
    if (a.is_finite() && b.is_finite()) {
        return a.value() >= b.value() ? a : b;
    }
    return a + b;
}

UtilityBounds UtilityBounds::constant(double succ_min, double succ_max, double fail_min, double fail_max) {
    return {Cost::finite(succ_min), Cost::finite(succ_max), Cost::finite(fail_min), Cost::finite(fail_max)};
}

bool UtilityBounds::is_infeasible() const noexcept {
    return succ_min.is_infeasible() && succ_max.is_infeasible() && fail_min.is_infeasible() &&
           fail_max.is_infeasible();
}

bool UtilityBounds::well_formed() const noexcept {
    const int infeasible = succ_min.is_infeasible() + succ_max.is_infeasible() + fail_min.is_infeasible() +
                           fail_max.is_infeasible();
    if (infeasible != 0 && infeasible != 4) {
        return false;
    }
    auto ordered = [](Cost lo, Cost hi) { return !lo.is_finite() || !hi.is_finite() || lo.value() <= hi.value(); };
    return ordered(succ_min, succ_max) && ordered(fail_min, fail_max);
}

std::string UtilityBounds::to_string() const {
    return "(" + succ_min.to_string() + "," + succ_max.to_string() + "," + fail_min.to_string() + "," +
           fail_max.to_string() + ")";
}

nlohmann::json UtilityBounds::to_json() const {
    return nlohmann::json::array({succ_min.to_json(), succ_max.to_json(), fail_min.to_json(), fail_max.to_json()});
}

UtilityBounds UtilityBounds::from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 4) {
        throw std::invalid_argument("utility bounds must be a 4-element array: " + j.dump());
    }
    return {Cost::from_json(j[0]), Cost::from_json(j[1]), Cost::from_json(j[2]), Cost::from_json(j[3])};
}

} // namespace dbt::utility
