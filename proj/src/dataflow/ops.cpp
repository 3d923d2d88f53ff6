#include "dbt/dataflow/ops.hpp"

#include <algorithm>

#include "dbt/error.hpp"

namespace dbt::dataflow {

std::optional<std::string> resolve(const TypeRef& t, std::string_view node, const TreeEnvironment& env) {
    if (t.is_concrete()) {
        if (!env.types.contains(t.name())) {
            return std::nullopt;
        }
        return t.name();
    }
    ParamId ref{std::string(node), ParamKind::option, t.name()};
    if (!env.data.contains(ref) || !env.data.parameter(ref).type.is_concrete()) {
        return std::nullopt;
    }
    auto it = env.world.param_values.find(ref);
    if (it == env.world.param_values.end() || !it->second.is<std::string>()) {
        return std::nullopt;
    }
    const auto& named = it->second.as<std::string>();
    if (!env.types.contains(named)) {
        return std::nullopt;
    }
    return named;
}

std::optional<std::string> resolve(const Parameter& p, const TreeEnvironment& env) {
    return resolve(p.type, p.id.node, env);
}

OptionValues validate_options(std::string_view node, std::span<const ParamSpec> schema, const OptionValues& given,
                              const TypeRegistry& types) {
    const std::string where = "node '" + std::string(node) + "'";
    for (const auto& [name, _] : given) {
        bool declared = std::any_of(schema.begin(), schema.end(), [&](const ParamSpec& s) { return s.name == name; });
        if (!declared) {
            throw TypeMismatch(where + ": unknown option '" + name + "'");
        }
    }

    OptionValues out;
    auto take = [&](const ParamSpec& spec, const std::string& type) {
        auto it = given.find(spec.name);
        const Value* v = nullptr;
        if (it != given.end() && !it->second.is_none()) {
            v = &it->second;
        } else if (spec.default_value && !spec.default_value->is_none()) {
            v = &*spec.default_value;
        }
        if (!v) {
            throw MissingOption(where + ": missing option '" + spec.name + "'");
        }
        if (!types.accepts(type, *v)) {
            throw TypeMismatch(where + ": option '" + spec.name + "' = " + v->to_string() + " is not of type '" +
                               type + "'");
        }
        out[spec.name] = *v;
    };

    for (const auto& spec : schema) {
        if (spec.type.is_concrete()) {
            if (!types.contains(spec.type.name())) {
                throw UnresolvableType(where + ": option '" + spec.name + "' has unregistered type '" +
                                       spec.type.name() + "'");
            }
            take(spec, spec.type.name());
        }
    }
    for (const auto& spec : schema) {
        if (!spec.type.is_option_ref()) {
            continue;
        }
        auto target = std::find_if(schema.begin(), schema.end(),
                                   [&](const ParamSpec& s) { return s.name == spec.type.name(); });
        if (target == schema.end() || !target->type.is_concrete()) {
            throw UnresolvableType(where + ": option '" + spec.name + "' references '" + spec.type.name() +
                                   "', which is not a concretely typed option");
        }
        const Value& named = out.at(target->name);
        if (!named.is<std::string>() || !types.contains(named.as<std::string>())) {
            throw UnresolvableType(where + ": option '" + target->name + "' = " + named.to_string() +
                                   " does not name a registered type");
        }
        take(spec, named.as<std::string>());
    }
    return out;
}

void add_node_parameters(TreeEnvironment& env, std::string_view node, std::span<const ParamSpec> options,
                         std::span<const ParamSpec> inputs, std::span<const ParamSpec> outputs) {
    const auto& record = env.tree.node(node);
    auto add = [&](const ParamSpec& spec, ParamKind kind) {
        Parameter p{ParamId{std::string(node), kind, spec.name}, spec.type, kind == ParamKind::input && spec.required};
        env.data.add_parameter(p);
        Value initial;
        if (kind == ParamKind::option) {
            if (auto it = record.options.find(spec.name); it != record.options.end()) {
                initial = it->second;
            }
        }
        env.world.param_values[p.id] = std::move(initial);
    };
    for (const auto& s : options) add(s, ParamKind::option);
    for (const auto& s : inputs) add(s, ParamKind::input);
    for (const auto& s : outputs) add(s, ParamKind::output);
    for (const auto& s : inputs) {
        if (!resolve(s.type, node, env)) {
            throw UnresolvableType("input " + std::string(node) + "." + s.name + " has unresolvable type " +
                                   s.type.to_string());
        }
    }
    for (const auto& s : outputs) {
        if (!resolve(s.type, node, env)) {
            throw UnresolvableType("output " + std::string(node) + "." + s.name + " has unresolvable type " +
                                   s.type.to_string());
        }
    }
}

void remove_node_parameters(TreeEnvironment& env, std::string_view node) {
    env.data.remove_node_parameters(node);
    std::erase_if(env.world.param_values, [&](const auto& kv) { return kv.first.node == node; });
}

void wire(const Wiring& w, TreeEnvironment& env) {
    if (w.source.kind != ParamKind::output || w.target.kind != ParamKind::input) {
        throw KindMismatch("wiring " + w.source.to_string() + " -> " + w.target.to_string() +
                           " must connect an output to an input");
    }
    const auto& src = env.data.parameter(w.source);
    const auto& dst = env.data.parameter(w.target);
    auto ts = resolve(src, env);
    auto tt = resolve(dst, env);
    if (!ts) {
        throw UnresolvableType("wiring source " + w.source.to_string() + " has no resolvable type");
    }
    if (!tt) {
        throw UnresolvableType("wiring target " + w.target.to_string() + " has no resolvable type");
    }
    if (*ts != *tt) {
        throw TypeMismatch("wiring " + w.source.to_string() + " (" + *ts + ") -> " + w.target.to_string() + " (" +
                           *tt + ") connects different types");
    }
    env.data.add_wiring(w);
}

void propagate(const ParamId& source, Value value, TreeEnvironment& env) {
    const auto& p = env.data.parameter(source);
    auto type = resolve(p, env);
    if (!type) {
        throw UnresolvableType(source.to_string() + " has no resolvable type");
    }
    if (!env.types.accepts(*type, value)) {
        throw TypeMismatch(source.to_string() + ": " + value.to_string() + " is not of type '" + *type + "'");
    }
    for (const auto& target : env.data.targets_of(source)) {
        env.world.param_values[target] = value;
    }
    env.world.param_values[source] = std::move(value);
}

std::set<std::string> subtree_nodes(std::string_view root, const TreeGraph& tree) {
    tree.node(root);
    std::set<std::string> kept{std::string(root)};
    while (true) {
        std::set<std::string> grown = kept;
        for (const auto& x : kept) {
            for (auto& c : tree.children(x)) {
                grown.insert(std::move(c));
            }
        }
        if (grown.size() == kept.size()) {
            break;
        }
        kept = std::move(grown);
    }
    return kept;
}

TreeEnvironment extract_subtree(std::string_view root, const TreeEnvironment& env) {
    if (!env.tree.contains(root)) {
        throw UnknownNode(std::string(root));
    }
    const auto kept = subtree_nodes(root, env.tree);
    TreeEnvironment out;
    out.types = env.types;
    for (const auto& id : kept) {
        out.tree.add_node(env.tree.node(id));
    }
    for (const auto& e : env.tree.edges()) {
        if (kept.count(e.parent) && kept.count(e.child)) {
            out.tree.add_edge(e.parent, e.child, e.order);
        }
    }
    for (const auto& [id, p] : env.data.parameters()) {
        if (kept.count(id.node)) {
            out.data.add_parameter(p);
        }
    }
    for (const auto& w : env.data.wirings()) {
        if (kept.count(w.source.node) && kept.count(w.target.node)) {
            out.data.add_wiring(w);
        }
    }
    for (const auto& [id, s] : env.world.node_states) {
        if (kept.count(id)) {
            out.world.node_states.emplace(id, s);
        }
    }
    for (const auto& [id, v] : env.world.param_values) {
        if (kept.count(id.node)) {
            out.world.param_values.emplace(id, v);
        }
    }
    out.world.externals = env.world.externals;
    out.world.neighbors = env.world.neighbors;
    return out;
}

std::set<ParamId> public_io(const TreeEnvironment& subtree, const DataGraph& full) {
    std::set<ParamId> out;
    for (const auto& w : full.wirings()) {
        bool src_in = subtree.tree.contains(w.source.node);
        bool dst_in = subtree.tree.contains(w.target.node);
        if (src_in && !dst_in) {
            out.insert(w.source);
        } else if (dst_in && !src_in) {
            out.insert(w.target);
        }
    }
    return out;
}

} // namespace dbt::dataflow
