#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dbt/dataflow/value.hpp"
#include "json.hpp"

namespace dbt {

/// Type of a parameter: either a registered type name or a reference to an
/// option of the same node whose value names the type.
class TypeRef {
public:
    enum class Form { concrete, option_ref };

    static TypeRef concrete(std::string type_name) { return TypeRef(Form::concrete, std::move(type_name)); }
    static TypeRef option_ref(std::string option_name) { return TypeRef(Form::option_ref, std::move(option_name)); }

    Form form() const noexcept { return form_; }
    bool is_concrete() const noexcept { return form_ == Form::concrete; }
    bool is_option_ref() const noexcept { return form_ == Form::option_ref; }

    /// Type name for concrete refs, option name for option refs.
    const std::string& name() const noexcept { return name_; }

    /// "int" or "@type" for a reference to option `type`.
    std::string to_string() const { return is_option_ref() ? "@" + name_ : name_; }
    static TypeRef parse(std::string_view text);

    bool operator==(const TypeRef&) const = default;

private:
    TypeRef(Form f, std::string n) : form_(f), name_(std::move(n)) {}

    Form form_ = Form::concrete;
    std::string name_;
};

/// Named value types. Builtins: bool, int, float, string, pose2d, record,
/// type (a string naming a registered type) and list<T> for any registered T.
/// Type equality is name equality.
class TypeRegistry {
public:
    using Check = std::function<bool(const Value&)>;

    TypeRegistry();

    /// Registers a user type stored as `base` (a builtin name), optionally
    /// narrowed by `check`. Throws if the name is taken.
    void register_type(std::string name, std::string base, Check check = {});

    bool contains(std::string_view name) const;

    /// True if `v` is a legal value of `type`. None is never legal here.
    bool accepts(std::string_view type, const Value& v) const;

    /// Throws TypeMismatch when the JSON does not encode a value of `type`.
    Value decode(std::string_view type, const nlohmann::json& j) const;

    std::vector<std::string> names() const;

    friend bool operator==(const TypeRegistry& a, const TypeRegistry& b) { return a.names() == b.names(); }

private:
    struct Entry {
        std::string base;
        Check check;
    };

    std::optional<std::string> base_of(std::string_view name) const;

    std::map<std::string, Entry, std::less<>> user_;
};

/// Extracts T from "list<T>"; empty when `name` is not a list type.
std::optional<std::string> list_element_type(std::string_view name);

} // namespace dbt
