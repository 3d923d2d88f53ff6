#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "dbt/core/environment.hpp"
#include "dbt/core/node.hpp"
#include "json.hpp"

namespace dbt::treefile {

inline constexpr int schema_version = 1;

/// Parses and validates a tree document. Includes are resolved relative to
/// `base_dir`. Throws ParseError for malformed JSON, ValidationError listing
/// every violation, IncludeCycle.
TreeEnvironment load_tree_text(std::string_view text, const NodeLibrary& library,
                               const std::filesystem::path& base_dir = {}, TypeRegistry types = {});
TreeEnvironment load_tree_file(const std::filesystem::path& path, const NodeLibrary& library,
                               TypeRegistry types = {});
TreeEnvironment load_tree_json(const nlohmann::json& doc, const NodeLibrary& library,
                               const std::filesystem::path& base_dir = {}, TypeRegistry types = {});

/// Flat document (includes already inlined): nodes sorted by id, edges by
/// (parent, order), wirings sorted.
nlohmann::json to_document(const TreeEnvironment& env);
std::string save_tree(const TreeEnvironment& env);

/// Same nodes, kinds, options, edges with order, and wirings.
bool structurally_equal(const TreeEnvironment& a, const TreeEnvironment& b);

} // namespace dbt::treefile
