#pragma once

#include "dbroute/schema.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace dbroute {

// One Spider-style catalog record:
//   db_id, table_names_original, column_names_original ([table_index, name],
//   the "*" pseudo-column has table_index -1), column_types,
//   primary_keys (global column indices), foreign_keys ([global, global]).
// Global indices are converted to (table, column) pairs.
DatabaseSchema load_catalog_record(const nlohmann::json& record);

// A catalog file is a JSON array of records (a single record object is also
// accepted).
std::vector<DatabaseSchema> load_catalog(const nlohmann::json& doc);
std::vector<DatabaseSchema> load_catalog_file(const std::filesystem::path& path);

// Minimal RFC-4180 CSV reader (quoted fields, embedded commas/newlines).
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

// Applies a per-database description CSV with header columns
//   table_name, original_column_name, column_description, data_format,
//   value_description
// onto the schema's column metadata. Unknown tables/columns are skipped with
// a warning. Returns the number of columns updated.
std::size_t apply_metadata_csv(DatabaseSchema& schema, const std::string& csv_text);

// Repository container persisted by `ingest`: schemas with their metadata.
nlohmann::json schema_to_json(const DatabaseSchema& schema);
DatabaseSchema schema_from_json(const nlohmann::json& doc);
void save_repository(const std::vector<DatabaseSchema>& repo, const std::filesystem::path& path);
std::vector<DatabaseSchema> load_repository(const std::filesystem::path& path);

} // namespace dbroute
