#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <typeindex>
#include <vector>

#include "dbt/core/environment.hpp"
#include "dbt/core/node.hpp"
#include "dbt/utility/cost.hpp"

namespace dbt {

struct EngineConfig {
    /// Self-time a single tick callback may take before the node is put in error.
    std::chrono::microseconds tick_budget{10'000};
    double hz = 10.0;
    /// Logical clock in milliseconds. Defaults to a steady clock since construction.
    std::function<std::int64_t()> clock;
};

struct Diagnostic {
    std::string node;
    std::string message;
};

/// Tick engine over one TreeEnvironment: owns one behaviour per node and is
/// the only thing that changes node states. Single-threaded.
class BehaviorTree {
public:
    using StateListener = std::function<void(const std::string& node, NodeState from, NodeState to)>;
    using EventSink = std::function<void(std::string_view node, std::string_view event, std::string_view detail)>;

    BehaviorTree(TreeEnvironment env, std::shared_ptr<const NodeLibrary> library, EngineConfig config = {});
    BehaviorTree(BehaviorTree&&) noexcept;
    BehaviorTree& operator=(BehaviorTree&&) noexcept;
    ~BehaviorTree();

    /// Applies one action to one node. Illegal (state, action) pairs and
    /// exceptions from callbacks put the node in error; nothing is thrown
    /// except UnknownNode.
    NodeState update(std::string_view node, NodeAction action);

    /// Ticks the root, then unticks every running or paused node the tick did
    /// not reach. Throws RootUninitialized when the root is uninitialized or in error.
    NodeState tick_cycle();

    /// Sets up the whole tree from the root.
    NodeState setup() { return update(root(), NodeAction::setup); }

    const std::string& root() const { return env_.tree.root(); }
    NodeState state(std::string_view node) const { return env_.world.state(node); }
    NodeState root_state() const { return state(root()); }
    const TreeEnvironment& env() const noexcept { return env_; }
    const std::set<std::string>& ticked_this_cycle() const noexcept { return visited_; }
    std::uint64_t cycle() const noexcept { return cycle_; }

    const Value& value(const ParamId& p) const { return env_.world.value(p); }
    /// Writes a parameter value the way a node output would, forwarding along wirings.
    void write(const ParamId& p, Value v);

    void set_external(const std::string& key, Value v);
    void erase_external(std::string_view key);
    const Value* external(std::string_view key) const;
    void set_neighbors(std::vector<ExecutorDescriptor> neighbors);

    /// Structural edits, only between cycles.
    void add_wiring(const Wiring& w);
    void remove_wiring(const Wiring& w);
    /// Copies `sub` below `parent` with every node id prefixed, nodes start
    /// uninitialized. Returns the new id of the grafted root.
    std::string graft(std::string_view parent, const TreeEnvironment& sub, std::string_view prefix);
    /// Removes the subtree rooted at `node`: behaviours, tasks, parameters and world entries.
    void prune(std::string_view node);

    utility::UtilityBounds utility(std::string_view node) const;
    utility::UtilityBounds tree_utility() const { return utility(root()); }

    Node& behavior(std::string_view node) const;
    template <class T>
    T* behavior_as(std::string_view node) const {
        return dynamic_cast<T*>(&behavior(node));
    }
    std::vector<std::string> nodes_of_kind(std::string_view kind) const;

    const TaskHandle* task(std::string_view node) const;
    bool holds_live_task(std::string_view node) const;

    /// Services are non-owning pointers keyed by type, e.g. the robot a node drives.
    template <class T>
    void provide(T* service) {
        services_[std::type_index(typeid(T))] = service;
    }
    template <class T>
    T* service() const {
        auto it = services_.find(std::type_index(typeid(T)));
        return it == services_.end() ? nullptr : static_cast<T*>(it->second);
    }

    void on_state_change(StateListener l) { state_listeners_.push_back(std::move(l)); }
    void on_event(EventSink s) { event_sinks_.push_back(std::move(s)); }
    void emit(std::string_view node, std::string_view event, std::string_view detail) const;

    const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }
    void clear_diagnostics() { diagnostics_.clear(); }

    const NodeLibrary& library() const noexcept { return *library_; }
    std::shared_ptr<const NodeLibrary> library_ptr() const noexcept { return library_; }
    const EngineConfig& config() const noexcept { return config_; }
    std::int64_t now_ms() const;

private:
    friend class NodeContext;

    struct Frame {
        std::chrono::steady_clock::duration children{};
    };

    void instantiate(const std::string& id);
    void set_state(const std::string& id, NodeState to);
    NodeState fail(const std::string& id, std::string message);
    NodeState apply(const std::string& id, NodeAction action, NodeState from, Node& node);
    NodeState do_tick(const std::string& id, NodeState from, Node& node);
    NodeState do_untick(const std::string& id, NodeState from, Node& node);
    void untick_active_children(const std::string& id);
    void stop_task(const std::string& id);
    bool missing_required_input(const std::string& id) const;

    TreeEnvironment env_;
    std::shared_ptr<const NodeLibrary> library_;
    EngineConfig config_;
    std::chrono::steady_clock::time_point epoch_;

    std::map<std::string, std::unique_ptr<Node>, std::less<>> behaviors_;
    std::map<std::string, std::unique_ptr<TaskHandle>, std::less<>> tasks_;
    std::map<std::type_index, void*> services_;
    std::vector<StateListener> state_listeners_;
    std::vector<EventSink> event_sinks_;
    std::vector<Diagnostic> diagnostics_;

    std::set<std::string> visited_;
    std::uint64_t cycle_ = 0;
    std::vector<Frame> frames_;
    std::vector<std::string> tick_stack_; ///< nodes inside on_tick, innermost last
};

template <class T>
T* NodeContext::service() const {
    return tree_.service<T>();
}

template <class T>
T* UtilityContext::service() const {
    return tree_.service<T>();
}

} // namespace dbt
