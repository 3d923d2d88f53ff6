#include "dbt/core/environment.hpp"

#include "dbt/error.hpp"

namespace dbt {

NodeState WorldState::state(std::string_view node) const {
    auto it = node_states.find(node);
    if (it == node_states.end()) {
        throw UnknownNode(std::string(node));
    }
    return it->second;
}

const Value& WorldState::value(const ParamId& p) const {
    auto it = param_values.find(p);
    if (it == param_values.end()) {
        throw UnknownParameter("unknown parameter '" + p.to_string() + "'");
    }
    return it->second;
}

} // namespace dbt
