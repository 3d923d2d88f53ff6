#include "dbt/core/tree_graph.hpp"

#include "dbt/error.hpp"

namespace dbt {

void TreeGraph::add_node(NodeRecord record) {
    if (record.id.empty()) {
        throw TreeStructureError("node id must not be empty");
    }
    auto id = record.id;
    if (!nodes_.emplace(id, std::move(record)).second) {
        throw TreeStructureError("duplicate node id '" + id + "'");
    }
}

void TreeGraph::remove_node(std::string_view id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) {
        throw UnknownNode(std::string(id));
    }
    if (auto p = parent(id)) {
        remove_edge(*p, id);
    }
    if (auto c = children_of_.find(id); c != children_of_.end()) {
        for (const auto& [_, child] : c->second) {
            parent_of_.erase(child);
        }
        children_of_.erase(c);
    }
    nodes_.erase(it);
}

void TreeGraph::add_edge(std::string_view parent, std::string_view child, int order) {
    if (!contains(parent)) {
        throw UnknownNode(std::string(parent));
    }
    if (!contains(child)) {
        throw UnknownNode(std::string(child));
    }
    if (parent == child) {
        throw TreeStructureError("self-edge on '" + std::string(parent) + "'");
    }
    if (auto existing = parent_of_.find(child); existing != parent_of_.end()) {
        throw TreeStructureError("node '" + std::string(child) + "' already has parent '" + existing->second + "'");
    }
    if (is_ancestor(child, parent)) {
        throw TreeStructureError("edge " + std::string(parent) + " -> " + std::string(child) + " would form a cycle");
    }
    auto& siblings = children_of_[std::string(parent)];
    if (siblings.count(order)) {
        throw TreeStructureError("order " + std::to_string(order) + " is already taken under '" + std::string(parent) +
                                 "'");
    }
    const auto& rec = node(parent);
    if (siblings.size() + 1 > rec.max_children) {
        throw TreeStructureError("node '" + std::string(parent) + "' (" + rec.kind + ") accepts at most " +
                                 std::to_string(rec.max_children) + " children");
    }
    siblings.emplace(order, std::string(child));
    parent_of_.emplace(std::string(child), std::string(parent));
}

void TreeGraph::remove_edge(std::string_view parent, std::string_view child) {
    auto p = parent_of_.find(child);
    if (p == parent_of_.end() || p->second != parent) {
        throw TreeStructureError("no edge " + std::string(parent) + " -> " + std::string(child));
    }
    auto& siblings = children_of_.find(parent)->second;
    std::erase_if(siblings, [&](const auto& kv) { return kv.second == child; });
    if (siblings.empty()) {
        children_of_.erase(children_of_.find(parent));
    }
    parent_of_.erase(p);
}

const NodeRecord& TreeGraph::node(std::string_view id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) {
        throw UnknownNode(std::string(id));
    }
    return it->second;
}

NodeRecord& TreeGraph::node_mut(std::string_view id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) {
        throw UnknownNode(std::string(id));
    }
    return it->second;
}

std::vector<std::string> TreeGraph::children(std::string_view id) const {
    std::vector<std::string> out;
    if (auto it = children_of_.find(id); it != children_of_.end()) {
        out.reserve(it->second.size());
        for (const auto& [_, c] : it->second) {
            out.push_back(c);
        }
    }
    return out;
}

std::optional<std::string> TreeGraph::parent(std::string_view id) const {
    if (auto it = parent_of_.find(id); it != parent_of_.end()) {
        return it->second;
    }
    return std::nullopt;
}

std::optional<int> TreeGraph::order(std::string_view parent, std::string_view child) const {
    if (auto it = children_of_.find(parent); it != children_of_.end()) {
        for (const auto& [o, c] : it->second) {
            if (c == child) {
                return o;
            }
        }
    }
    return std::nullopt;
}

std::vector<TreeEdge> TreeGraph::edges() const {
    std::vector<TreeEdge> out;
    for (const auto& [p, kids] : children_of_) {
        for (const auto& [o, c] : kids) {
            out.push_back(TreeEdge{p, c, o});
        }
    }
    return out;
}

std::vector<std::string> TreeGraph::roots() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : nodes_) {
        if (!parent_of_.count(id)) {
            out.push_back(id);
        }
    }
    return out;
}

const std::string& TreeGraph::root() const {
    const std::string* found = nullptr;
    std::size_t count = 0;
    for (const auto& [id, _] : nodes_) {
        if (!parent_of_.count(id)) {
            found = &id;
            ++count;
        }
    }
    if (count != 1) {
        throw TreeStructureError("tree must have exactly one root, found " + std::to_string(count));
    }
    return *found;
}

std::vector<std::string> TreeGraph::preorder(std::string_view from) const {
    std::vector<std::string> out;
    std::vector<std::string> stack{std::string(from)};
    node(from);
    while (!stack.empty()) {
        auto id = std::move(stack.back());
        stack.pop_back();
        auto kids = children(id);
        for (auto it = kids.rbegin(); it != kids.rend(); ++it) {
            stack.push_back(*it);
        }
        out.push_back(std::move(id));
    }
    return out;
}

std::vector<std::string> TreeGraph::validate() const {
    std::vector<std::string> problems;
    auto r = roots();
    if (r.size() != 1) {
        problems.push_back("tree must have exactly one root, found " + std::to_string(r.size()));
    }
    for (const auto& [p, kids] : children_of_) {
        const auto& rec = node(p);
        if (kids.size() > rec.max_children) {
            problems.push_back("node '" + p + "' has " + std::to_string(kids.size()) + " children, max " +
                               std::to_string(rec.max_children));
        }
    }
    return problems;
}

bool TreeGraph::is_ancestor(std::string_view maybe_ancestor, std::string_view node) const {
    std::string cur(node);
    while (true) {
        if (cur == maybe_ancestor) {
            return true;
        }
        auto it = parent_of_.find(cur);
        if (it == parent_of_.end()) {
            return false;
        }
        cur = it->second;
    }
}

} // namespace dbt
