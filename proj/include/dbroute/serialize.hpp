#pragma once

#include "dbroute/schema.hpp"

#include <string>

namespace dbroute {

// Renders one table as a single-line CREATE TABLE statement with quoted
// identifiers and table-level key clauses. Parsing the result back yields a
// structurally equal table.
std::string render_create_table(const DatabaseSchema& schema, const TableMeta& table);

// Deterministic text document for embedding and prompting: database header,
// per-table CREATE TABLE rendering, table description line and numbered
// COLUMN blocks. Column descriptions / formats appear only when
// include_metadata is set. Byte-identical across runs for identical input.
std::string serialize_schema_document(const DatabaseSchema& schema, bool include_metadata);

// Condensed one-line-per-table alternative document style.
std::string serialize_schema_compact(const DatabaseSchema& schema);

// Selects a document style by name: "full" | "compact".
std::string serialize_schema(const DatabaseSchema& schema, bool include_metadata,
                             const std::string& style);

// Text representing one column for semantic similarity:
// "table.column — description" (description omitted when absent).
std::string column_document(const DatabaseSchema& schema, const ColumnRef& ref);

// Evidence block appended to documents when metadata is included.
std::string evidence_block(const EvidenceSet& evidence);

} // namespace dbroute
