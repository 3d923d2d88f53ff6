#include "dbt/core/node.hpp"

#include <fstream>

#include "dbt/core/behavior_tree.hpp"
#include "dbt/dataflow/ops.hpp"
#include "dbt/error.hpp"

namespace dbt {

NodeState Node::on_untick(NodeContext& ctx) {
    if (TaskHandle* t = ctx.task(); t != nullptr && t->live() && t->pausable()) {
        t->pause();
        return NodeState::paused;
    }
    return NodeState::idle;
}

utility::UtilityBounds Node::utility(const UtilityContext& ctx) const {
    if (ctx.record().node_class() == NodeClass::decorator) {
        const auto children = ctx.children();
        if (children.size() == 1) {
            return ctx.child_utility(children.front());
        }
    }
    return utility::UtilityBounds::unknown();
}

void NodeLibrary::add(NodeTypeInfo info, NodeFactory factory) {
    std::string name = info.name;
    if (!entries_.emplace(name, Entry{std::move(info), std::move(factory)}).second) {
        throw std::invalid_argument("node type '" + name + "' registered twice");
    }
}

const NodeTypeInfo& NodeLibrary::info(std::string_view name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) {
        throw UnknownNodeType("unknown node type '" + std::string(name) + "'");
    }
    return it->second.info;
}

std::unique_ptr<Node> NodeLibrary::create(const NodeRecord& record) const {
    auto it = entries_.find(record.kind);
    if (it == entries_.end()) {
        throw UnknownNodeType("unknown node type '" + record.kind + "' for node '" + record.id + "'");
    }
    return it->second.factory(record);
}

std::vector<std::string> NodeLibrary::names() const {
    std::vector<std::string> out;
    for (const auto& [name, entry] : entries_) {
        out.push_back(name);
    }
    return out;
}

NodeLibrary NodeLibrary::restricted_to(const std::vector<std::string>& names) const {
    NodeLibrary out;
    for (const auto& n : names) {
        auto it = entries_.find(n);
        if (it == entries_.end()) {
            throw UnknownNodeType("manifest lists '" + n + "', which is not a compiled-in node type");
        }
        out.entries_.emplace(n, it->second);
    }
    return out;
}

std::vector<std::string> NodeLibrary::read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot read manifest " + path.string());
    }
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) {
            continue;
        }
        const auto e = line.find_last_not_of(" \t\r");
        out.push_back(line.substr(b, e - b + 1));
    }
    return out;
}

void add_node(TreeEnvironment& env, const NodeLibrary& library, NodeRecord record) {
    const NodeTypeInfo& info = library.info(record.kind);
    record.max_children = info.max_children;
    record.options = dataflow::validate_options(record.id, info.options, record.options, env.types);
    const std::string id = record.id;
    env.tree.add_node(std::move(record));
    env.world.node_states[id] = NodeState::uninitialized;
    dataflow::add_node_parameters(env, id, info.options, info.inputs, info.outputs);
}

TreeEnvironment build_environment(const TreeGraph& tree, std::span<const Wiring> wirings, const NodeLibrary& library,
                                  TypeRegistry types) {
    TreeEnvironment env;
    env.types = std::move(types);
    for (const auto& [id, record] : tree.nodes()) {
        add_node(env, library, record);
    }
    for (const auto& e : tree.edges()) {
        env.tree.add_edge(e.parent, e.child, e.order);
    }
    for (const auto& w : wirings) {
        dataflow::wire(w, env);
    }
    return env;
}

} // namespace dbt
