#include "dbt/dataflow/types.hpp"

#include <cmath>

#include "dbt/error.hpp"

namespace dbt {
namespace {

constexpr std::string_view builtin_names[] = {"bool", "int", "float", "string", "pose2d", "record", "type"};

bool is_builtin(std::string_view name) {
    for (auto b : builtin_names) {
        if (b == name) {
            return true;
        }
    }
    return false;
}

Value untyped_from_json(const nlohmann::json& j) {
    if (j.is_null()) {
        return Value();
    }
    if (j.is_boolean()) {
        return Value(j.get<bool>());
    }
    if (j.is_number_integer()) {
        return Value(j.get<std::int64_t>());
    }
    if (j.is_number()) {
        return Value(j.get<double>());
    }
    if (j.is_string()) {
        return Value(j.get<std::string>());
    }
    if (j.is_array()) {
        List items;
        for (const auto& e : j) {
            items.push_back(untyped_from_json(e));
        }
        return Value(std::move(items));
    }
    Record r;
    for (const auto& [k, e] : j.items()) {
        r[k] = untyped_from_json(e);
    }
    return Value(std::move(r));
}

} // namespace

TypeRef TypeRef::parse(std::string_view text) {
    if (!text.empty() && text.front() == '@') {
        return option_ref(std::string(text.substr(1)));
    }
    return concrete(std::string(text));
}

std::optional<std::string> list_element_type(std::string_view name) {
    constexpr std::string_view prefix = "list<";
    if (name.size() > prefix.size() + 1 && name.substr(0, prefix.size()) == prefix && name.back() == '>') {
        return std::string(name.substr(prefix.size(), name.size() - prefix.size() - 1));
    }
    return std::nullopt;
}

TypeRegistry::TypeRegistry() = default;

void TypeRegistry::register_type(std::string name, std::string base, Check check) {
    if (contains(name)) {
        throw Error("type '" + name + "' is already registered");
    }
    if (!is_builtin(base) || base == "type") {
        throw Error("type '" + name + "' must be based on a builtin value type, got '" + base + "'");
    }
    user_.emplace(std::move(name), Entry{std::move(base), std::move(check)});
}

std::optional<std::string> TypeRegistry::base_of(std::string_view name) const {
    if (is_builtin(name)) {
        return std::string(name);
    }
    if (auto it = user_.find(name); it != user_.end()) {
        return it->second.base;
    }
    return std::nullopt;
}

bool TypeRegistry::contains(std::string_view name) const {
    if (auto elem = list_element_type(name)) {
        return contains(*elem);
    }
    return base_of(name).has_value();
}

bool TypeRegistry::accepts(std::string_view type, const Value& v) const {
    if (v.is_none()) {
        return false;
    }
    if (auto elem = list_element_type(type)) {
        if (!v.is<List>()) {
            return false;
        }
        for (const auto& e : v.as<List>()) {
            if (!accepts(*elem, e)) {
                return false;
            }
        }
        return contains(*elem);
    }
    auto base = base_of(type);
    if (!base) {
        return false;
    }
    bool ok = false;
    if (*base == "bool") {
        ok = v.is<bool>();
    } else if (*base == "int") {
        ok = v.is<std::int64_t>();
    } else if (*base == "float") {
        ok = v.is<double>() && std::isfinite(v.as<double>());
    } else if (*base == "string") {
        ok = v.is<std::string>();
    } else if (*base == "pose2d") {
        ok = v.is<Pose2d>();
    } else if (*base == "record") {
        ok = v.is<Record>();
    } else if (*base == "type") {
        ok = v.is<std::string>() && contains(v.as<std::string>());
    }
    if (ok && base != std::string(type)) {
        const auto& entry = user_.find(type)->second;
        if (entry.check) {
            ok = entry.check(v);
        }
    }
    return ok;
}

Value TypeRegistry::decode(std::string_view type, const nlohmann::json& j) const {
    auto mismatch = [&]() {
        return TypeMismatch("JSON " + j.dump() + " is not a value of type '" + std::string(type) + "'");
    };
    Value out;
    if (auto elem = list_element_type(type)) {
        if (!j.is_array()) {
            throw mismatch();
        }
        List items;
        for (const auto& e : j) {
            items.push_back(decode(*elem, e));
        }
        out = Value(std::move(items));
    } else {
        auto base = base_of(type);
        if (!base) {
            throw UnresolvableType("type '" + std::string(type) + "' is not registered");
        }
        if (*base == "bool" && j.is_boolean()) {
            out = Value(j.get<bool>());
        } else if (*base == "int" && j.is_number_integer()) {
            out = Value(j.get<std::int64_t>());
        } else if (*base == "float" && j.is_number()) {
            out = Value(j.get<double>());
        } else if ((*base == "string" || *base == "type") && j.is_string()) {
            out = Value(j.get<std::string>());
        } else if (*base == "pose2d" && j.is_object() && j.contains("x") && j.contains("y") && j.at("x").is_number() &&
                   j.at("y").is_number() && j.size() == 2) {
            out = Value(Pose2d{j.at("x").get<double>(), j.at("y").get<double>()});
        } else if (*base == "record" && j.is_object()) {
            out = untyped_from_json(j);
        } else {
            throw mismatch();
        }
    }
    if (!accepts(type, out)) {
        throw mismatch();
    }
    return out;
}

std::vector<std::string> TypeRegistry::names() const {
    std::vector<std::string> out(std::begin(builtin_names), std::end(builtin_names));
    for (const auto& [name, _] : user_) {
        out.push_back(name);
    }
    return out;
}

} // namespace dbt
