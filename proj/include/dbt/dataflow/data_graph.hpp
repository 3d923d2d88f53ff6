#pragma once

#include <map>
#include <set>
#include <string_view>
#include <vector>

#include "dbt/dataflow/parameter.hpp"

namespace dbt {

struct Wiring {
    ParamId source; ///< always an output
    ParamId target; ///< always an input

    auto operator<=>(const Wiring&) const = default;
    bool operator==(const Wiring&) const = default;
};

/// Parameters of all nodes plus the output -> input wirings between them.
/// Type checks need the world (option values) and live in dataflow/ops.hpp;
/// this class only guards the structural invariants.
class DataGraph {
public:
    /// Throws if a parameter with the same (node, kind, name) exists.
    void add_parameter(Parameter p);
    void remove_node_parameters(std::string_view node);

    bool contains(const ParamId& id) const { return params_.count(id) != 0; }
    const Parameter& parameter(const ParamId& id) const;
    const std::map<ParamId, Parameter>& parameters() const noexcept { return params_; }
    std::vector<ParamId> parameters_of(std::string_view node) const;

    /// Adds a wiring; a duplicate is a no-op. Checks kinds only.
    void add_wiring(const Wiring& w);
    bool remove_wiring(const Wiring& w);
    const std::set<Wiring>& wirings() const noexcept { return wirings_; }
    std::vector<ParamId> targets_of(const ParamId& source) const;

    bool operator==(const DataGraph&) const = default;

private:
    std::map<ParamId, Parameter> params_;
    std::set<Wiring> wirings_;
};

} // namespace dbt
