#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace dbt {

enum class NodeState : std::uint8_t {
    uninitialized,
    idle,
    running,
    succeeded,
    failed,
    paused,
    shutdown,
    error,
};

enum class NodeAction : std::uint8_t { setup, tick, untick, reset, shutdown };

inline constexpr std::array<NodeState, 8> all_states{
    NodeState::uninitialized, NodeState::idle,   NodeState::running,  NodeState::succeeded,
    NodeState::failed,        NodeState::paused, NodeState::shutdown, NodeState::error,
};

inline constexpr std::array<NodeAction, 5> all_actions{
    NodeAction::setup, NodeAction::tick, NodeAction::untick, NodeAction::reset, NodeAction::shutdown,
};

std::string_view to_string(NodeState s) noexcept;
std::string_view to_string(NodeAction a) noexcept;
std::optional<NodeState> parse_state(std::string_view text) noexcept;
std::optional<NodeAction> parse_action(std::string_view text) noexcept;

/// States a node may end up in after applying `action` in state `from`.
/// An empty span means the pair is illegal; the engine then moves the node to `error`.
///
/// `error` absorbs everything except reset (back to idle) and shutdown.
std::span<const NodeState> allowed_transitions(NodeState from, NodeAction action) noexcept;

bool is_legal_transition(NodeState from, NodeAction action, NodeState to) noexcept;

/// idle, succeeded, failed and shutdown: a node in one of these holds no background task.
constexpr bool is_rest_state(NodeState s) noexcept {
    return s == NodeState::idle || s == NodeState::succeeded || s == NodeState::failed ||
           s == NodeState::shutdown;
}

/// Flow control treats a child in `error` as a failed child.
constexpr NodeState effective_result(NodeState s) noexcept {
    return s == NodeState::error ? NodeState::failed : s;
}

enum class NodeClass : std::uint8_t { leaf, decorator, flow_control };

inline constexpr std::size_t unbounded_children = static_cast<std::size_t>(-1);

constexpr NodeClass node_class(std::size_t max_children) noexcept {
    if (max_children == 0) {
        return NodeClass::leaf;
    }
    if (max_children == 1) {
        return NodeClass::decorator;
    }
    return NodeClass::flow_control;
}

std::string_view to_string(NodeClass c) noexcept;

} // namespace dbt
