#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "dbt/dataflow/types.hpp"

namespace dbt {

enum class ParamKind : std::uint8_t { option, input, output };

std::string_view to_string(ParamKind k) noexcept;
std::optional<ParamKind> parse_param_kind(std::string_view text) noexcept;

/// Identity of a parameter: (node, kind, name).
struct ParamId {
    std::string node;
    ParamKind kind = ParamKind::input;
    std::string name;

    auto operator<=>(const ParamId&) const = default;
    bool operator==(const ParamId&) const = default;

    /// "node.kind.name"
    std::string to_string() const;
    /// Inverse of to_string; node ids may contain dots, the last two fields may not.
    static ParamId parse(std::string_view text);
};

/// Declared parameter of a node type.
struct ParamSpec {
    std::string name;
    TypeRef type = TypeRef::concrete("string");
    std::optional<Value> default_value; ///< options only
    bool required = true;                ///< inputs only
    std::string doc;
};

struct Parameter {
    ParamId id;
    TypeRef type = TypeRef::concrete("string");
    bool required = true; ///< inputs only: a None required input fails the tick

    bool operator==(const Parameter&) const = default;
};

} // namespace dbt
