#pragma once

#include "dbroute/schema.hpp"

#include <string>

namespace dbroute {

// Parses a script of CREATE TABLE statements (SQLite/ANSI subset used by
// Spider and BIRD dumps) into a DatabaseSchema. Tables appear in script
// order. Column type strings are preserved verbatim. Statements other than
// CREATE TABLE are skipped.
//
// Throws ParseError (with line/column) for syntax errors, duplicate table
// names, empty scripts and unresolved REFERENCES targets.
DatabaseSchema parse_ddl(const std::string& script, const std::string& db_id = "");

} // namespace dbroute
