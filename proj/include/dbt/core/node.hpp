#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dbt/core/background_task.hpp"
#include "dbt/core/environment.hpp"
#include "dbt/core/state.hpp"
#include "dbt/core/tree_graph.hpp"
#include "dbt/dataflow/parameter.hpp"
#include "dbt/utility/cost.hpp"

namespace dbt {

class BehaviorTree;

/// What a node type declares about itself.
struct NodeTypeInfo {
    std::string name;
    std::size_t max_children = 0;
    std::vector<ParamSpec> options;
    std::vector<ParamSpec> inputs;
    std::vector<ParamSpec> outputs;
    std::string doc;
};

/// A node's view of the engine during one update. Only valid for the
/// duration of the callback that received it.
class NodeContext {
public:
    NodeContext(BehaviorTree& tree, std::string id) : tree_(tree), id_(std::move(id)) {}

    const std::string& id() const noexcept { return id_; }
    const NodeRecord& record() const;
    NodeState state() const;
    BehaviorTree& tree() const noexcept { return tree_; }

    const Value& option(const std::string& name) const;
    const Value& input(const std::string& name) const;
    const Value& output(const std::string& name) const;
    /// Writes the output and forwards it along every wiring.
    void set_output(const std::string& name, Value v) const;

    std::vector<std::string> children() const;
    NodeState tick_child(std::string_view child) const;
    NodeState untick_child(std::string_view child) const;
    NodeState reset_child(std::string_view child) const;

    /// Only legal inside on_tick; throws StartOutsideRunning otherwise.
    TaskHandle& start_task(TaskWork work, bool pausable) const;
    TaskHandle* task() const;

    template <class T>
    T* service() const;

    /// Logical milliseconds from the engine clock.
    std::int64_t now_ms() const;
    void emit(std::string_view event, std::string_view detail) const;

private:
    BehaviorTree& tree_;
    std::string id_;
};

/// Read-only view used for utility estimation.
class UtilityContext {
public:
    UtilityContext(const BehaviorTree& tree, std::string id) : tree_(tree), id_(std::move(id)) {}

    const std::string& id() const noexcept { return id_; }
    const NodeRecord& record() const;
    const Value& option(const std::string& name) const;
    std::vector<std::string> children() const;
    utility::UtilityBounds child_utility(std::string_view child) const;
    std::vector<utility::UtilityBounds> children_utility() const;
    const BehaviorTree& tree() const noexcept { return tree_; }

    template <class T>
    T* service() const;

private:
    const BehaviorTree& tree_;
    std::string id_;
};

/// Behaviour of one node instance. State bookkeeping, transition checks,
/// task cleanup and child propagation of untick/reset/shutdown are done by
/// the engine; callbacks only add node-specific work.
class Node {
public:
    virtual ~Node() = default;

    virtual void on_setup(NodeContext&) {}
    /// Must return running, succeeded or failed.
    virtual NodeState on_tick(NodeContext& ctx) = 0;
    /// Called when a running node is unticked; return paused or idle.
    /// The default pauses a pausable task and cancels anything else.
    virtual NodeState on_untick(NodeContext& ctx);
    virtual void on_reset(NodeContext&) {}
    virtual void on_shutdown(NodeContext&) {}
    /// Runs at the start of every update of this node, before the transition.
    virtual void before_update(NodeContext&, NodeAction) {}

    /// Leaves default to unknown, decorators pass their child through.
    virtual utility::UtilityBounds utility(const UtilityContext& ctx) const;
};

using NodeFactory = std::function<std::unique_ptr<Node>(const NodeRecord&)>;

/// Node types known by name. Executors exchanging subtrees must agree on names.
class NodeLibrary {
public:
    void add(NodeTypeInfo info, NodeFactory factory);
    template <class T>
    void add(NodeTypeInfo info) {
        add(std::move(info), [](const NodeRecord&) { return std::make_unique<T>(); });
    }

    bool contains(std::string_view name) const { return entries_.find(name) != entries_.end(); }
    /// Throws UnknownNodeType.
    const NodeTypeInfo& info(std::string_view name) const;
    std::unique_ptr<Node> create(const NodeRecord& record) const;
    std::vector<std::string> names() const;

    /// Library narrowed to the listed names; throws UnknownNodeType for names
    /// that are not compiled in.
    NodeLibrary restricted_to(const std::vector<std::string>& names) const;
    /// One node-type name per line; blank lines and '#' comments ignored.
    static std::vector<std::string> read_manifest(const std::filesystem::path& path);

private:
    struct Entry {
        NodeTypeInfo info;
        NodeFactory factory;
    };
    std::map<std::string, Entry, std::less<>> entries_;
};

/// Adds a node with validated options (defaults filled in), registers its
/// parameters and marks it uninitialized. Edges are left to the caller.
/// Throws UnknownNodeType, MissingOption, TypeMismatch, UnresolvableType.
void add_node(TreeEnvironment& env, const NodeLibrary& library, NodeRecord record);

/// Builds a fresh environment from structure and wirings. Node states start uninitialized.
TreeEnvironment build_environment(const TreeGraph& tree, std::span<const Wiring> wirings,
                                  const NodeLibrary& library, TypeRegistry types = {});

} // namespace dbt
