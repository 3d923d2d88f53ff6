#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>

#include "dbt/core/environment.hpp"
#include "dbt/dataflow/parameter.hpp"

namespace dbt::dataflow {

/// Concrete type of `t` as seen from `node`. An option reference resolves to
/// the type named by that option's value; empty when the option is None, not
/// an option, itself a reference, or names nothing registered.
std::optional<std::string> resolve(const TypeRef& t, std::string_view node, const TreeEnvironment& env);
std::optional<std::string> resolve(const Parameter& p, const TreeEnvironment& env);

/// Validates a constructor dictionary against the option schema and fills in
/// defaults. Concrete options are checked first so references can see them.
/// Throws MissingOption, TypeMismatch or UnresolvableType.
OptionValues validate_options(std::string_view node, std::span<const ParamSpec> schema, const OptionValues& given,
                              const TypeRegistry& types);

/// Registers the node's parameters and their initial values: options take
/// their (validated) values, inputs and outputs start at None.
void add_node_parameters(TreeEnvironment& env, std::string_view node, std::span<const ParamSpec> options,
                         std::span<const ParamSpec> inputs, std::span<const ParamSpec> outputs);
void remove_node_parameters(TreeEnvironment& env, std::string_view node);

/// Adds a type-checked wiring. Duplicates are a no-op.
/// Throws KindMismatch, UnresolvableType, TypeMismatch, UnknownParameter.
void wire(const Wiring& w, TreeEnvironment& env);

/// Writes `value` to `source` and copies it to every wired target.
/// Throws TypeMismatch when `value` is not of the source's resolved type.
void propagate(const ParamId& source, Value value, TreeEnvironment& env);

/// Node set of the subtree rooted at `root`: the fixed point of adding children.
std::set<std::string> subtree_nodes(std::string_view root, const TreeGraph& tree);

/// Subtree environment rooted at `root`: kept nodes, internal edges with their
/// original order, the parameters of kept nodes and the wirings among them.
/// Types and world carry over (world entries of dropped nodes are left out).
TreeEnvironment extract_subtree(std::string_view root, const TreeEnvironment& env);

/// Parameters of subtree nodes taking part in a wiring whose other end lies outside.
std::set<ParamId> public_io(const TreeEnvironment& subtree, const DataGraph& full);

} // namespace dbt::dataflow
