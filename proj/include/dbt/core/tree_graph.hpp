#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dbt/core/state.hpp"
#include "dbt/dataflow/value.hpp"

namespace dbt {

using OptionValues = std::map<std::string, Value>;

/// A node of the tree graph. Its runtime state lives in WorldState.
struct NodeRecord {
    std::string id;
    std::string kind;
    std::size_t max_children = 0;
    OptionValues options;

    NodeClass node_class() const noexcept { return dbt::node_class(max_children); }

    bool operator==(const NodeRecord&) const = default;
};

struct TreeEdge {
    std::string parent;
    std::string child;
    int order = 0;

    bool operator==(const TreeEdge&) const = default;
};

/// Ordered tree as a graph: nodes, (parent, child) edges and the position
/// of each edge among its parent's children.
///
/// Every edit keeps the graph a forest: no self-edges, at most one parent
/// per node, no cycles, unique order among siblings, child count within
/// max_children. A single root is checked by root() / validate(), since a
/// tree under construction has several.
class TreeGraph {
public:
    void add_node(NodeRecord record);
    /// Removes the node and every edge touching it; children become roots.
    void remove_node(std::string_view id);
    void add_edge(std::string_view parent, std::string_view child, int order);
    void remove_edge(std::string_view parent, std::string_view child);

    bool contains(std::string_view id) const { return nodes_.find(id) != nodes_.end(); }
    const NodeRecord& node(std::string_view id) const;
    NodeRecord& node_mut(std::string_view id);
    const std::map<std::string, NodeRecord, std::less<>>& nodes() const noexcept { return nodes_; }
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Children sorted by their order index.
    std::vector<std::string> children(std::string_view id) const;
    std::optional<std::string> parent(std::string_view id) const;
    std::optional<int> order(std::string_view parent, std::string_view child) const;
    /// All edges, sorted by (parent, order).
    std::vector<TreeEdge> edges() const;

    /// Nodes without a parent.
    std::vector<std::string> roots() const;
    /// The single root; throws TreeStructureError when there is not exactly one.
    const std::string& root() const;
    /// Depth-first, children in order.
    std::vector<std::string> preorder(std::string_view from) const;
    std::vector<std::string> preorder() const { return preorder(root()); }

    /// Human-readable violations of the tree invariants; empty when valid.
    std::vector<std::string> validate() const;

    bool operator==(const TreeGraph&) const = default;

private:
    bool is_ancestor(std::string_view maybe_ancestor, std::string_view node) const;

    std::map<std::string, NodeRecord, std::less<>> nodes_;
    std::map<std::string, std::string, std::less<>> parent_of_;
    // parent -> (order -> child)
    std::map<std::string, std::map<int, std::string>, std::less<>> children_of_;
};

} // namespace dbt
