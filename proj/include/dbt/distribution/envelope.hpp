#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dbt/core/environment.hpp"
#include "dbt/core/node.hpp"
#include "json.hpp"

namespace dbt::distribution {

/// Structure, options and type names of a subtree; no runtime values.
/// This is what a utility query carries.
nlohmann::json subtree_shape(const TreeEnvironment& subtree);

/// Rebuilds a shape against the receiver's own node library and types.
/// Throws DeserializationError naming the first problem (unknown node
/// type, unknown type name, invalid structure).
TreeEnvironment decode_shape(const nlohmann::json& shape, const NodeLibrary& library, const TypeRegistry& types);

/// Everything the winning executor needs to run the subtree rooted at `root`.
struct ShoveEnvelope {
    TreeEnvironment subtree;
    std::vector<std::pair<ParamId, Value>> public_inputs;
    std::vector<ParamId> public_outputs;
    std::string correlation_id;
};

/// Extracts the subtree rooted at `root` from `env` together with its public
/// inputs (current values) and public outputs.
ShoveEnvelope make_envelope(const TreeEnvironment& env, std::string_view root, std::string correlation_id);
nlohmann::json envelope_to_json(const ShoveEnvelope& e);
/// Throws DeserializationError.
ShoveEnvelope envelope_from_json(const nlohmann::json& j, const NodeLibrary& library, const TypeRegistry& types);

struct SubtreeResult {
    std::string correlation_id;
    NodeState final_state = NodeState::failed; ///< succeeded, failed or error
    std::vector<std::pair<ParamId, nlohmann::json>> public_outputs;
    /// Final states of the hosted nodes, under their original ids.
    std::map<std::string, NodeState> node_states;

    nlohmann::json to_json() const;
    static SubtreeResult from_json(const nlohmann::json& j);
};

} // namespace dbt::distribution
