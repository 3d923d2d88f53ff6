#include "dbt/core/state.hpp"

#include <algorithm>

namespace dbt {
namespace {

using S = NodeState;

constexpr std::array<S, 1> to_idle{S::idle};
constexpr std::array<S, 1> to_shutdown{S::shutdown};
constexpr std::array<S, 1> to_paused{S::paused};
constexpr std::array<S, 1> to_error{S::error};
constexpr std::array<S, 3> to_active{S::running, S::succeeded, S::failed};
constexpr std::array<S, 2> to_stopped{S::paused, S::idle};

constexpr std::span<const S> none{};

} // namespace

std::string_view to_string(NodeState s) noexcept {
    switch (s) {
    case S::uninitialized: return "uninitialized";
    case S::idle: return "idle";
    case S::running: return "running";
    case S::succeeded: return "succeeded";
    case S::failed: return "failed";
    case S::paused: return "paused";
    case S::shutdown: return "shutdown";
    case S::error: return "error";
    }
    return "?";
}

std::string_view to_string(NodeAction a) noexcept {
    switch (a) {
    case NodeAction::setup: return "setup";
    case NodeAction::tick: return "tick";
    case NodeAction::untick: return "untick";
    case NodeAction::reset: return "reset";
    case NodeAction::shutdown: return "shutdown";
    }
    return "?";
}

std::string_view to_string(NodeClass c) noexcept {
    switch (c) {
    case NodeClass::leaf: return "leaf";
    case NodeClass::decorator: return "decorator";
    case NodeClass::flow_control: return "flow_control";
    }
    return "?";
}

std::optional<NodeState> parse_state(std::string_view text) noexcept {
    for (auto s : all_states) {
        if (to_string(s) == text) {
            return s;
        }
    }
    return std::nullopt;
}

std::optional<NodeAction> parse_action(std::string_view text) noexcept {
    for (auto a : all_actions) {
        if (to_string(a) == text) {
            return a;
        }
    }
    return std::nullopt;
}

std::span<const NodeState> allowed_transitions(NodeState from, NodeAction action) noexcept {
    switch (from) {
    case S::uninitialized:
        if (action == NodeAction::setup) return to_idle;
        if (action == NodeAction::shutdown) return to_shutdown;
        return none;
    case S::idle:
        switch (action) {
        case NodeAction::tick: return to_active;
        case NodeAction::untick:
        case NodeAction::reset: return to_idle;
        case NodeAction::shutdown: return to_shutdown;
        case NodeAction::setup: return none;
        }
        return none;
    case S::running:
    case S::succeeded:
    case S::failed:
        switch (action) {
        case NodeAction::tick: return to_active;
        case NodeAction::untick:
            // only a node with a live task can be paused
            return from == S::running ? std::span<const S>(to_stopped) : std::span<const S>(to_idle);
        case NodeAction::reset: return to_idle;
        case NodeAction::shutdown: return to_shutdown;
        case NodeAction::setup: return none;
        }
        return none;
    case S::paused:
        switch (action) {
        case NodeAction::tick: return to_active;
        case NodeAction::untick: return to_paused;
        case NodeAction::reset: return to_idle;
        case NodeAction::shutdown: return to_shutdown;
        case NodeAction::setup: return none;
        }
        return none;
    case S::shutdown:
        if (action == NodeAction::setup) return to_idle;
        if (action == NodeAction::shutdown) return to_shutdown;
        return none;
    case S::error:
        if (action == NodeAction::reset) return to_idle;
        if (action == NodeAction::shutdown) return to_shutdown;
        return to_error;
    }
    return none;
}

bool is_legal_transition(NodeState from, NodeAction action, NodeState to) noexcept {
    auto allowed = allowed_transitions(from, action);
    return std::find(allowed.begin(), allowed.end(), to) != allowed.end();
}

} // namespace dbt
