#include "dbt/distribution/envelope.hpp"

#include "dbt/dataflow/ops.hpp"
#include "dbt/error.hpp"
#include "dbt/treefile/treefile.hpp"

namespace dbt::distribution {

using nlohmann::json;

json subtree_shape(const TreeEnvironment& subtree) {
    json doc = treefile::to_document(subtree);
    doc["types"] = subtree.types.names();
    return doc;
}

TreeEnvironment decode_shape(const json& shape, const NodeLibrary& library, const TypeRegistry& types) {
    if (!shape.is_object()) {
        throw DeserializationError("subtree shape is not an object");
    }
    if (auto it = shape.find("types"); it != shape.end() && it->is_array()) {
        for (const auto& t : *it) {
            if (!t.is_string() || !types.contains(t.get<std::string>())) {
                throw DeserializationError("unknown type name " + t.dump());
            }
        }
    }
    json doc = shape;
    doc.erase("types");
    try {
        return treefile::load_tree_json(doc, library, {}, types);
    } catch (const ValidationError& e) {
        const auto& v = e.violations();
        throw DeserializationError(v.empty() ? std::string(e.what()) : v.front().where + ": " + v.front().what);
    } catch (const Error& e) {
        throw DeserializationError(e.what());
    }
}

ShoveEnvelope make_envelope(const TreeEnvironment& env, std::string_view root, std::string correlation_id) {
    ShoveEnvelope e;
    e.subtree = dataflow::extract_subtree(root, env);
    e.correlation_id = std::move(correlation_id);
    for (const auto& p : dataflow::public_io(e.subtree, env.data)) {
        if (p.kind == ParamKind::input) {
            e.public_inputs.emplace_back(p, env.world.value(p));
        } else if (p.kind == ParamKind::output) {
            e.public_outputs.push_back(p);
        }
    }
    return e;
}

json envelope_to_json(const ShoveEnvelope& e) {
    json inputs = json::array();
    for (const auto& [p, v] : e.public_inputs) {
        inputs.push_back({p.to_string(), v.to_json()});
    }
    json outputs = json::array();
    for (const auto& p : e.public_outputs) {
        outputs.push_back(p.to_string());
    }
    return {{"subtree", subtree_shape(e.subtree)},
            {"publicInputs", inputs},
            {"publicOutputs", outputs},
            {"correlationId", e.correlation_id}};
}

namespace {

ParamId param_in(const TreeEnvironment& env, const json& name, ParamKind kind) {
    if (!name.is_string()) {
        throw DeserializationError("parameter name is not a string");
    }
    ParamId p;
    try {
        p = ParamId::parse(name.get<std::string>());
    } catch (const Error& e) {
        throw DeserializationError(e.what());
    }
    if (p.kind != kind || !env.data.contains(p)) {
        throw DeserializationError("'" + name.get<std::string>() + "' is not a " + std::string(to_string(kind)) +
                                   " of the subtree");
    }
    return p;
}

} // namespace

ShoveEnvelope envelope_from_json(const json& j, const NodeLibrary& library, const TypeRegistry& types) {
    if (!j.is_object() || !j.contains("subtree")) {
        throw DeserializationError("envelope has no subtree");
    }
    ShoveEnvelope e;
    e.subtree = decode_shape(j.at("subtree"), library, types);
    e.correlation_id = j.value("correlationId", "");
    for (const auto& item : j.value("publicInputs", json::array())) {
        if (!item.is_array() || item.size() != 2) {
            throw DeserializationError("public input entry is not a [name, value] pair");
        }
        const ParamId p = param_in(e.subtree, item[0], ParamKind::input);
        if (item[1].is_null()) {
            e.public_inputs.emplace_back(p, Value());
            continue;
        }
        const auto type = dataflow::resolve(e.subtree.data.parameter(p), e.subtree);
        if (!type) {
            throw DeserializationError("cannot resolve the type of " + p.to_string());
        }
        try {
            e.public_inputs.emplace_back(p, types.decode(*type, item[1]));
        } catch (const Error& err) {
            throw DeserializationError(p.to_string() + ": " + err.what());
        }
    }
    for (const auto& name : j.value("publicOutputs", json::array())) {
        e.public_outputs.push_back(param_in(e.subtree, name, ParamKind::output));
    }
    return e;
}

json SubtreeResult::to_json() const {
    json outputs = json::array();
    for (const auto& [p, v] : public_outputs) {
        outputs.push_back({p.to_string(), v});
    }
    json states = json::object();
    for (const auto& [id, s] : node_states) {
        states[id] = to_string(s);
    }
    return {{"correlationId", correlation_id},
            {"finalState", to_string(final_state)},
            {"publicOutputValues", outputs},
            {"nodeStates", states}};
}

SubtreeResult SubtreeResult::from_json(const json& j) {
    SubtreeResult r;
    try {
        r.correlation_id = j.at("correlationId").get<std::string>();
        const auto s = parse_state(j.at("finalState").get<std::string>());
        if (!s || (*s != NodeState::succeeded && *s != NodeState::failed && *s != NodeState::error)) {
            throw DeserializationError("bad final state " + j.at("finalState").dump());
        }
        r.final_state = *s;
        for (const auto& item : j.value("publicOutputValues", json::array())) {
            r.public_outputs.emplace_back(ParamId::parse(item.at(0).get<std::string>()), item.at(1));
        }
        const json states = j.value("nodeStates", json::object());
        for (const auto& [id, s] : states.items()) {
            if (auto ns = parse_state(s.get<std::string>())) {
                r.node_states[id] = *ns;
            }
        }
    } catch (const json::exception& e) {
        throw DeserializationError(std::string("malformed result: ") + e.what());
    }
    return r;
}

} // namespace dbt::distribution
