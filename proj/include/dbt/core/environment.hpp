#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dbt/core/state.hpp"
#include "dbt/core/tree_graph.hpp"
#include "dbt/dataflow/data_graph.hpp"
#include "dbt/dataflow/types.hpp"

namespace dbt {

/// A reachable executor that may host shoved subtrees.
struct ExecutorDescriptor {
    std::string id;
    std::string address;
    bool slot_available = false;

    bool operator==(const ExecutorDescriptor&) const = default;
};

/// Mutable part of an environment: node states, parameter values, external
/// facts and the executors nearby.
struct WorldState {
    std::map<std::string, NodeState, std::less<>> node_states;
    std::map<ParamId, Value> param_values;
    std::map<std::string, Value, std::less<>> externals;
    std::vector<ExecutorDescriptor> neighbors;

    /// Throws UnknownNode for unregistered ids.
    NodeState state(std::string_view node) const;
    /// Throws UnknownParameter for unregistered ids. Unset inputs/outputs are None.
    const Value& value(const ParamId& p) const;

    const std::vector<ExecutorDescriptor>& nearby() const noexcept { return neighbors; }

    bool operator==(const WorldState&) const = default;
};

/// The tree graph, its data graph, the type registry and the world.
struct TreeEnvironment {
    TreeGraph tree;
    DataGraph data;
    TypeRegistry types;
    WorldState world;

    bool operator==(const TreeEnvironment&) const = default;
};

} // namespace dbt
