#include "dbt/treefile/treefile.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "dbt/dataflow/ops.hpp"
#include "dbt/error.hpp"

namespace dbt::treefile {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Raw {
    json j;
    std::string where;
};

struct Flat {
    std::vector<Raw> nodes;
    std::vector<Raw> edges;
    std::vector<Raw> wirings;
};

json parse_json(std::string_view text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(what + ": " + e.what());
    }
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        throw ParseError("cannot read " + p.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool is_string(const json& j, const char* key) { return j.is_object() && j.contains(key) && j.at(key).is_string(); }

class Loader {
public:
    Loader(const NodeLibrary& lib, TypeRegistry types) : lib_(lib) { env_.types = std::move(types); }

    TreeEnvironment load(const json& doc, const fs::path& base) {
        Flat flat;
        flatten(doc, base, "", "", flat);
        build(flat);
        if (!violations_.empty()) {
            throw ValidationError(std::move(violations_));
        }
        return std::move(env_);
    }

    void push_file(const fs::path& p) { stack_.push_back(fs::weakly_canonical(p)); }

private:
    void violation(std::string where, std::string what) { violations_.push_back({std::move(where), std::move(what)}); }

    static std::string pointer(const std::string& origin, const std::string& p) {
        return origin.empty() ? p : origin + "#" + p;
    }

    void rename(json& j, const char* key, const std::string& prefix) {
        if (is_string(j, key)) {
            j[key] = prefix + j.at(key).get<std::string>();
        }
    }

    void flatten(const json& doc, const fs::path& base, const std::string& origin, const std::string& prefix,
                 Flat& out) {
        auto ptr = [&](const std::string& p) { return pointer(origin, p); };
        if (!doc.is_object()) {
            violation(ptr(""), "document must be a JSON object");
            return;
        }
        if (!doc.contains("schema_version") || doc.at("schema_version") != schema_version) {
            violation(ptr("/schema_version"), "schema_version must be " + std::to_string(schema_version));
        }
        if (!doc.contains("nodes") || !doc.at("nodes").is_array()) {
            violation(ptr("/nodes"), "nodes must be an array");
        } else {
            const auto& nodes = doc.at("nodes");
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                json n = nodes[i];
                rename(n, "id", prefix);
                out.nodes.push_back({std::move(n), ptr("/nodes/" + std::to_string(i))});
            }
        }
        auto array_of = [&](const char* key) -> const json* {
            if (!doc.contains(key)) {
                return nullptr;
            }
            if (!doc.at(key).is_array()) {
                violation(ptr(std::string("/") + key), std::string(key) + " must be an array");
                return nullptr;
            }
            return &doc.at(key);
        };
        if (const json* edges = array_of("edges")) {
            for (std::size_t i = 0; i < edges->size(); ++i) {
                json e = (*edges)[i];
                rename(e, "parent", prefix);
                rename(e, "child", prefix);
                out.edges.push_back({std::move(e), ptr("/edges/" + std::to_string(i))});
            }
        }
        if (const json* wirings = array_of("wirings")) {
            for (std::size_t i = 0; i < wirings->size(); ++i) {
                json w = (*wirings)[i];
                for (const char* end : {"source", "target"}) {
                    if (w.is_object() && w.contains(end) && w.at(end).is_object()) {
                        rename(w[end], "node", prefix);
                    }
                }
                out.wirings.push_back({std::move(w), ptr("/wirings/" + std::to_string(i))});
            }
        }
        if (const json* includes = array_of("includes")) {
            for (std::size_t i = 0; i < includes->size(); ++i) {
                include((*includes)[i], base, ptr("/includes/" + std::to_string(i)), prefix, out);
            }
        }
    }

    void include(const json& inc, const fs::path& base, const std::string& where, const std::string& prefix,
                 Flat& out) {
        if (!is_string(inc, "path") || !is_string(inc, "parent") || !inc.contains("order") ||
            !inc.at("order").is_number_integer()) {
            violation(where, "include needs string path, string parent and integer order");
            return;
        }
        const fs::path path = base / inc.at("path").get<std::string>();
        const fs::path canon = fs::weakly_canonical(path);
        if (std::find(stack_.begin(), stack_.end(), canon) != stack_.end()) {
            std::string chain;
            for (const auto& p : stack_) {
                chain += p.filename().string() + " -> ";
            }
            throw IncludeCycle("include cycle: " + chain + canon.filename().string());
        }
        json sub;
        try {
            sub = parse_json(read_file(path), path.string());
        } catch (const ParseError& e) {
            violation(where + "/path", e.what());
            return;
        }
        std::string inner = prefix;
        if (inc.contains("prefix")) {
            if (!inc.at("prefix").is_string()) {
                violation(where + "/prefix", "prefix must be a string");
                return;
            }
            inner += inc.at("prefix").get<std::string>();
        }
        stack_.push_back(canon);
        Flat part;
        flatten(sub, path.parent_path(), path.filename().string(), inner, part);
        stack_.pop_back();

        std::set<std::string> ids;
        std::set<std::string> children;
        for (const auto& n : part.nodes) {
            if (is_string(n.j, "id")) ids.insert(n.j.at("id").get<std::string>());
        }
        for (const auto& e : part.edges) {
            if (is_string(e.j, "child")) children.insert(e.j.at("child").get<std::string>());
        }
        std::vector<std::string> roots;
        std::set_difference(ids.begin(), ids.end(), children.begin(), children.end(), std::back_inserter(roots));
        if (roots.size() != 1) {
            violation(where, "included tree must have exactly one root, found " + std::to_string(roots.size()));
        } else {
            json edge{{"parent", prefix + inc.at("parent").get<std::string>()},
                      {"child", roots.front()},
                      {"order", inc.at("order")}};
            out.edges.push_back({std::move(edge), where});
        }
        std::move(part.nodes.begin(), part.nodes.end(), std::back_inserter(out.nodes));
        std::move(part.edges.begin(), part.edges.end(), std::back_inserter(out.edges));
        std::move(part.wirings.begin(), part.wirings.end(), std::back_inserter(out.wirings));
    }

    /// Decodes option values with the schema types (references resolved
    /// through the option they name). Returns false after recording violations.
    bool decode_options(const NodeTypeInfo& info, const json& given, const std::string& where, OptionValues& out) {
        bool ok = true;
        if (!given.is_object()) {
            violation(where, "options must be an object");
            return false;
        }
        for (const auto& [name, _] : given.items()) {
            const bool known = std::any_of(info.options.begin(), info.options.end(),
                                           [&](const ParamSpec& s) { return s.name == name; });
            if (!known) {
                violation(where + "/" + name, "unknown option '" + name + "' for node type " + info.name);
                ok = false;
            }
        }
        auto decode = [&](const ParamSpec& spec, const std::string& type) {
            try {
                out[spec.name] = env_.types.decode(type, given.at(spec.name));
            } catch (const Error& e) {
                violation(where + "/" + spec.name, e.what());
                ok = false;
            }
        };
        for (const auto& spec : info.options) {
            if (spec.type.is_concrete() && given.contains(spec.name)) {
                decode(spec, spec.type.name());
            }
        }
        for (const auto& spec : info.options) {
            if (!spec.type.is_option_ref() || !given.contains(spec.name)) {
                continue;
            }
            const Value* named = nullptr;
            if (auto it = out.find(spec.type.name()); it != out.end()) {
                named = &it->second;
            } else {
                for (const auto& s : info.options) {
                    if (s.name == spec.type.name() && s.default_value) named = &*s.default_value;
                }
            }
            if (named == nullptr || !named->is<std::string>() || !env_.types.contains(named->as<std::string>())) {
                violation(where + "/" + spec.name,
                          "type of option '" + spec.name + "' refers to '" + spec.type.name() + "', which names no type");
                ok = false;
                continue;
            }
            decode(spec, named->as<std::string>());
        }
        return ok;
    }

    void build(const Flat& flat) {
        std::set<std::string> bad;
        std::set<std::string> seen;
        for (const auto& raw : flat.nodes) {
            const json& n = raw.j;
            if (!is_string(n, "id") || n.at("id").get<std::string>().empty()) {
                violation(raw.where + "/id", "node id must be a non-empty string");
                continue;
            }
            const std::string id = n.at("id").get<std::string>();
            if (!seen.insert(id).second) {
                violation(raw.where + "/id", "duplicate node id '" + id + "'");
                continue;
            }
            if (!is_string(n, "kind")) {
                violation(raw.where + "/kind", "node kind must be a string");
                bad.insert(id);
                continue;
            }
            const std::string kind = n.at("kind").get<std::string>();
            if (!lib_.contains(kind)) {
                violation(raw.where + "/kind", "unknown node type '" + kind + "'");
                bad.insert(id);
                continue;
            }
            OptionValues options;
            if (n.contains("options") && !decode_options(lib_.info(kind), n.at("options"), raw.where + "/options", options)) {
                bad.insert(id);
                continue;
            }
            try {
                add_node(env_, lib_, NodeRecord{id, kind, 0, std::move(options)});
            } catch (const Error& e) {
                violation(raw.where + "/options", e.what());
                bad.insert(id);
                if (env_.tree.contains(id)) {
                    dataflow::remove_node_parameters(env_, id);
                    env_.tree.remove_node(id);
                    env_.world.node_states.erase(id);
                }
            }
        }

        for (const auto& raw : flat.edges) {
            const json& e = raw.j;
            if (!is_string(e, "parent") || !is_string(e, "child") || !e.contains("order") ||
                !e.at("order").is_number_integer()) {
                violation(raw.where, "edge needs string parent, string child and integer order");
                continue;
            }
            const std::string parent = e.at("parent").get<std::string>();
            const std::string child = e.at("child").get<std::string>();
            if (bad.count(parent) || bad.count(child)) {
                continue;
            }
            try {
                env_.tree.add_edge(parent, child, e.at("order").get<int>());
            } catch (const UnknownNode& ex) {
                violation(raw.where, "edge refers to unknown node '" + ex.id() + "'");
            } catch (const Error& ex) {
                violation(raw.where, ex.what());
            }
        }

        if (flat.nodes.empty()) {
            violation("/nodes", "tree has no root: no nodes");
        } else if (bad.empty()) {
            const auto roots = env_.tree.roots();
            if (roots.size() != 1) {
                std::string list;
                for (const auto& r : roots) {
                    list += (list.empty() ? "" : ", ") + r;
                }
                violation("/edges", "tree must have exactly one root, found " + std::to_string(roots.size()) +
                                        (list.empty() ? "" : ": " + list));
            }
        }

        for (const auto& raw : flat.wirings) {
            auto endpoint = [&](const char* key, ParamKind def) -> std::optional<ParamId> {
                if (!raw.j.is_object() || !raw.j.contains(key) || !is_string(raw.j.at(key), "node") ||
                    !is_string(raw.j.at(key), "name")) {
                    violation(raw.where + "/" + key, std::string(key) + " needs string node and name");
                    return std::nullopt;
                }
                const json& ep = raw.j.at(key);
                ParamKind kind = def;
                if (ep.contains("kind")) {
                    auto k = ep.at("kind").is_string() ? parse_param_kind(ep.at("kind").get<std::string>())
                                                         : std::nullopt;
                    if (!k) {
                        violation(raw.where + "/" + key + "/kind", "kind must be option, input or output");
                        return std::nullopt;
                    }
                    kind = *k;
                }
                return ParamId{ep.at("node").get<std::string>(), kind, ep.at("name").get<std::string>()};
            };
            auto src = endpoint("source", ParamKind::output);
            auto dst = endpoint("target", ParamKind::input);
            if (!src || !dst || bad.count(src->node) || bad.count(dst->node)) {
                continue;
            }
            try {
                dataflow::wire(Wiring{*src, *dst}, env_);
            } catch (const Error& e) {
                violation(raw.where, e.what());
            }
        }
    }

    const NodeLibrary& lib_;
    TreeEnvironment env_;
    std::vector<Violation> violations_;
    std::vector<fs::path> stack_;
};

} // namespace

TreeEnvironment load_tree_json(const nlohmann::json& doc, const NodeLibrary& library,
                               const std::filesystem::path& base_dir, TypeRegistry types) {
    Loader loader(library, std::move(types));
    return loader.load(doc, base_dir);
}

TreeEnvironment load_tree_text(std::string_view text, const NodeLibrary& library,
                               const std::filesystem::path& base_dir, TypeRegistry types) {
    return load_tree_json(parse_json(text, "tree document"), library, base_dir, std::move(types));
}

TreeEnvironment load_tree_file(const std::filesystem::path& path, const NodeLibrary& library, TypeRegistry types) {
    const json doc = parse_json(read_file(path), path.string());
    Loader loader(library, std::move(types));
    loader.push_file(path);
    return loader.load(doc, path.parent_path());
}

nlohmann::json to_document(const TreeEnvironment& env) {
    json nodes = json::array();
    for (const auto& [id, rec] : env.tree.nodes()) {
        json options = json::object();
        for (const auto& [name, v] : rec.options) {
            if (!v.is_none()) {
                options[name] = v.to_json();
            }
        }
        nodes.push_back({{"id", id}, {"kind", rec.kind}, {"options", std::move(options)}});
    }
    json edges = json::array();
    for (const auto& e : env.tree.edges()) {
        edges.push_back({{"parent", e.parent}, {"child", e.child}, {"order", e.order}});
    }
    json wirings = json::array();
    for (const auto& w : env.data.wirings()) {
        wirings.push_back({{"source", {{"node", w.source.node}, {"name", w.source.name}}},
                           {"target", {{"node", w.target.node}, {"name", w.target.name}}}});
    }
    return {{"schema_version", schema_version}, {"nodes", nodes}, {"edges", edges}, {"wirings", wirings}};
}

std::string save_tree(const TreeEnvironment& env) { return to_document(env).dump(2) + "\n"; }

bool structurally_equal(const TreeEnvironment& a, const TreeEnvironment& b) {
    if (!(a.tree == b.tree) || !(a.data == b.data)) {
        return false;
    }
    auto options = [](const TreeEnvironment& e) {
        std::map<ParamId, Value> out;
        for (const auto& [id, v] : e.world.param_values) {
            if (id.kind == ParamKind::option) out.emplace(id, v);
        }
        return out;
    };
    return options(a) == options(b);
}

} // namespace dbt::treefile
