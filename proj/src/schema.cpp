#include "dbroute/schema.hpp"

#include "dbroute/errors.hpp"
#include "dbroute/util.hpp"

#include <algorithm>
#include <unordered_set>

namespace dbroute {

int TableMeta::find_column(std::string_view column_name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (iequals(columns[i].name, column_name)) return static_cast<int>(i);
    }
    return -1;
}

bool TableMeta::is_primary_key(int column_index) const {
    return std::find(primary_key.begin(), primary_key.end(), column_index) != primary_key.end();
}

void EvidenceSet::insert(std::string_view raw) {
    std::string norm = normalize_ws(raw);
    if (!norm.empty()) items.insert(std::move(norm));
}

int DatabaseSchema::find_table(std::string_view table_name) const {
    for (std::size_t i = 0; i < tables.size(); ++i) {
        if (iequals(tables[i].name, table_name)) return static_cast<int>(i);
    }
    return -1;
}

std::optional<ColumnRef> DatabaseSchema::find_column(std::string_view table_name,
                                                     std::string_view column_name) const {
    const int t = find_table(table_name);
    if (t < 0) return std::nullopt;
    const int c = tables[static_cast<std::size_t>(t)].find_column(column_name);
    if (c < 0) return std::nullopt;
    return ColumnRef{t, c};
}

const ColumnMeta& DatabaseSchema::column_at(const ColumnRef& ref) const {
    return tables.at(static_cast<std::size_t>(ref.table_index))
        .columns.at(static_cast<std::size_t>(ref.column_index));
}

std::size_t DatabaseSchema::total_columns() const {
    std::size_t n = 0;
    for (const auto& t : tables) n += t.columns.size();
    return n;
}

void validate_schema(const DatabaseSchema& schema) {
    if (schema.db_id.empty()) throw ValidationError("schema has empty db_id");
    if (schema.tables.empty())
        throw ValidationError("schema '" + schema.db_id + "' has no tables");

    std::unordered_set<std::string> table_names;
    for (std::size_t ti = 0; ti < schema.tables.size(); ++ti) {
        const TableMeta& table = schema.tables[ti];
        if (table.name.empty())
            throw ValidationError("schema '" + schema.db_id + "': table " + std::to_string(ti) +
                                  " has empty name");
        if (!table_names.insert(to_lower(table.name)).second)
            throw ValidationError("schema '" + schema.db_id + "': duplicate table name '" +
                                  table.name + "'");
        if (table.columns.empty())
            throw ValidationError("schema '" + schema.db_id + "': table '" + table.name +
                                  "' has no columns");

        std::unordered_set<std::string> column_names;
        for (const ColumnMeta& col : table.columns) {
            if (col.name.empty())
                throw ValidationError("schema '" + schema.db_id + "': table '" + table.name +
                                      "' has a column with empty name");
            if (!column_names.insert(to_lower(col.name)).second)
                throw ValidationError("schema '" + schema.db_id + "': table '" + table.name +
                                      "': duplicate column name '" + col.name + "'");
        }

        const int ncols = static_cast<int>(table.columns.size());
        for (int pk : table.primary_key) {
            if (pk < 0 || pk >= ncols)
                throw ValidationError("schema '" + schema.db_id + "': table '" + table.name +
                                      "': primary key column index " + std::to_string(pk) +
                                      " out of range");
        }
        for (const ForeignKey& fk : table.foreign_keys) {
            if (fk.local_column < 0 || fk.local_column >= ncols)
                throw ValidationError("schema '" + schema.db_id + "': table '" + table.name +
                                      "': foreign key local column index " +
                                      std::to_string(fk.local_column) + " out of range");
            if (fk.target.table_index < 0 ||
                fk.target.table_index >= static_cast<int>(schema.tables.size()))
                throw ValidationError("schema '" + schema.db_id + "': table '" + table.name +
                                      "': foreign key target table index " +
                                      std::to_string(fk.target.table_index) + " out of range");
            const TableMeta& target =
                schema.tables[static_cast<std::size_t>(fk.target.table_index)];
            if (fk.target.column_index < 0 ||
                fk.target.column_index >= static_cast<int>(target.columns.size()))
                throw ValidationError("schema '" + schema.db_id + "': table '" + table.name +
                                      "': foreign key target column index " +
                                      std::to_string(fk.target.column_index) +
                                      " out of range for table '" + target.name + "'");
        }
    }
}

bool structurally_equal(const DatabaseSchema& a, const DatabaseSchema& b) {
    if (a.db_id != b.db_id || a.tables.size() != b.tables.size()) return false;
    for (std::size_t ti = 0; ti < a.tables.size(); ++ti) {
        const TableMeta& ta = a.tables[ti];
        const TableMeta& tb = b.tables[ti];
        if (ta.name != tb.name || ta.columns.size() != tb.columns.size()) return false;
        for (std::size_t ci = 0; ci < ta.columns.size(); ++ci) {
            if (ta.columns[ci].name != tb.columns[ci].name ||
                ta.columns[ci].data_type != tb.columns[ci].data_type)
                return false;
        }
        auto sorted = [](std::vector<int> v) {
            std::sort(v.begin(), v.end());
            return v;
        };
        if (sorted(ta.primary_key) != sorted(tb.primary_key)) return false;
        auto sorted_fks = [](std::vector<ForeignKey> v) {
            std::sort(v.begin(), v.end());
            return v;
        };
        if (sorted_fks(ta.foreign_keys) != sorted_fks(tb.foreign_keys)) return false;
    }
    return true;
}

} // namespace dbroute
