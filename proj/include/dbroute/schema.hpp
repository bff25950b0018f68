#pragma once

#include <compare>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace dbroute {

// Position of one column inside a DatabaseSchema: (table index, column index),
// both 0-based.
struct ColumnRef {
    int table_index = 0;
    int column_index = 0;
    auto operator<=>(const ColumnRef&) const = default;
};

struct ColumnMeta {
    std::string name;
    std::string data_type;
    std::string description;       // empty = absent
    std::string value_description; // empty = absent
    std::string data_format;       // empty = absent
};

// Declared foreign key: this table's column -> some other table's column.
struct ForeignKey {
    int local_column = 0;
    ColumnRef target;
    auto operator<=>(const ForeignKey&) const = default;
};

struct TableMeta {
    std::string name;
    std::string description; // empty = absent
    std::vector<ColumnMeta> columns;
    std::vector<int> primary_key; // column indices
    std::vector<ForeignKey> foreign_keys;

    // Case-insensitive lookup; -1 if absent.
    int find_column(std::string_view column_name) const;
    bool is_primary_key(int column_index) const;
};

// Deduplicated, whitespace-normalized, lexicographically ordered set of
// evidence sentences attached to one database.
struct EvidenceSet {
    std::set<std::string> items;

    void insert(std::string_view raw);
    bool empty() const { return items.empty(); }
    std::size_t size() const { return items.size(); }
    bool operator==(const EvidenceSet&) const = default;
};

struct DatabaseSchema {
    std::string db_id;
    std::vector<TableMeta> tables;
    std::optional<EvidenceSet> metadata;

    // Case-insensitive lookup; -1 if absent.
    int find_table(std::string_view table_name) const;
    std::optional<ColumnRef> find_column(std::string_view table_name,
                                         std::string_view column_name) const;
    const ColumnMeta& column_at(const ColumnRef& ref) const;
    std::size_t total_columns() const;
};

// Throws ValidationError on any violated invariant:
// non-empty db_id, >= 1 table, >= 1 column per table, unique table names
// (case-insensitive), unique column names per table (case-insensitive),
// all key indices in range.
void validate_schema(const DatabaseSchema& schema);

// Structural equality: names (case-sensitive), types, key declarations.
// Ignores descriptions, formats and attached evidence.
bool structurally_equal(const DatabaseSchema& a, const DatabaseSchema& b);

} // namespace dbroute
