#include "dbroute/catalog.hpp"

#include "dbroute/errors.hpp"
#include "dbroute/util.hpp"

#include <map>
#include <optional>

namespace dbroute {

using nlohmann::json;

namespace {

const json& require_field(const json& record, const char* name) {
    auto it = record.find(name);
    if (it == record.end())
        throw ValidationError(std::string("catalog record missing required field '") + name + "'");
    return *it;
}

const json* find_field(const json& record, std::initializer_list<const char*> names) {
    for (const char* name : names) {
        auto it = record.find(name);
        if (it != record.end()) return &*it;
    }
    return nullptr;
}

} // namespace

DatabaseSchema load_catalog_record(const json& record) {
    if (!record.is_object()) throw ValidationError("catalog record is not a JSON object");

    DatabaseSchema schema;
    schema.db_id = require_field(record, "db_id").get<std::string>();

    const json* table_names = find_field(record, {"table_names_original", "table_names"});
    if (!table_names)
        throw ValidationError("catalog record '" + schema.db_id + "' missing table names");
    for (const auto& name : *table_names) {
        TableMeta table;
        table.name = name.get<std::string>();
        schema.tables.push_back(std::move(table));
    }

    const json* column_names = find_field(record, {"column_names_original", "column_names"});
    if (!column_names)
        throw ValidationError("catalog record '" + schema.db_id + "' missing column names");
    const json* column_types = find_field(record, {"column_types"});

    // Global column index -> (table, column); the "*" entry stays unmapped.
    std::vector<std::optional<ColumnRef>> globals;
    globals.reserve(column_names->size());
    for (std::size_t gi = 0; gi < column_names->size(); ++gi) {
        const json& pair = (*column_names)[gi];
        if (!pair.is_array() || pair.size() != 2)
            throw ValidationError("catalog record '" + schema.db_id + "': column entry " +
                                  std::to_string(gi) + " is not a [table_index, name] pair");
        const int t = pair[0].get<int>();
        if (t < 0) {
            globals.emplace_back(std::nullopt); // the "*" pseudo-column
            continue;
        }
        if (t >= static_cast<int>(schema.tables.size()))
            throw ValidationError("catalog record '" + schema.db_id + "': column entry " +
                                  std::to_string(gi) + " table index out of range");
        ColumnMeta col;
        col.name = pair[1].get<std::string>();
        if (column_types && gi < column_types->size())
            col.data_type = (*column_types)[gi].get<std::string>();
        TableMeta& table = schema.tables[static_cast<std::size_t>(t)];
        globals.emplace_back(
            ColumnRef{t, static_cast<int>(table.columns.size())});
        table.columns.push_back(std::move(col));
    }

    auto resolve_global = [&](int gi, const char* what) -> ColumnRef {
        if (gi < 0 || gi >= static_cast<int>(globals.size()))
            throw ValidationError("catalog record '" + schema.db_id + "': " + what +
                                  " column index " + std::to_string(gi) + " out of range");
        const auto& ref = globals[static_cast<std::size_t>(gi)];
        if (!ref)
            throw ValidationError("catalog record '" + schema.db_id + "': " + what +
                                  " column index " + std::to_string(gi) +
                                  " refers to the '*' pseudo-column");
        return *ref;
    };

    if (const json* pks = find_field(record, {"primary_keys"})) {
        for (const auto& entry : *pks) {
            // Spider uses plain ints; some variants use arrays for composites.
            if (entry.is_array()) {
                for (const auto& sub : entry) {
                    const ColumnRef ref = resolve_global(sub.get<int>(), "primary key");
                    schema.tables[static_cast<std::size_t>(ref.table_index)]
                        .primary_key.push_back(ref.column_index);
                }
            } else {
                const ColumnRef ref = resolve_global(entry.get<int>(), "primary key");
                schema.tables[static_cast<std::size_t>(ref.table_index)].primary_key.push_back(
                    ref.column_index);
            }
        }
    }

    if (const json* fks = find_field(record, {"foreign_keys"})) {
        for (const auto& pair : *fks) {
            if (!pair.is_array() || pair.size() != 2)
                throw ValidationError("catalog record '" + schema.db_id +
                                      "': foreign key entry is not a [from, to] pair");
            const ColumnRef from = resolve_global(pair[0].get<int>(), "foreign key");
            const ColumnRef to = resolve_global(pair[1].get<int>(), "foreign key");
            schema.tables[static_cast<std::size_t>(from.table_index)].foreign_keys.push_back(
                ForeignKey{from.column_index, to});
        }
    }

    validate_schema(schema);
    return schema;
}

std::vector<DatabaseSchema> load_catalog(const json& doc) {
    std::vector<DatabaseSchema> schemas;
    if (doc.is_object()) {
        schemas.push_back(load_catalog_record(doc));
        return schemas;
    }
    if (!doc.is_array()) throw ValidationError("catalog document must be a JSON array");
    for (const auto& record : doc) schemas.push_back(load_catalog_record(record));
    return schemas;
}

std::vector<DatabaseSchema> load_catalog_file(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError("catalog file " + path.string() + ": " + e.what());
    }
    return load_catalog(doc);
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;

    auto end_field = [&]() {
        row.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_row = [&]() {
        end_field();
        if (row.size() > 1 || !row[0].empty()) rows.push_back(row);
        row.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
            continue;
        }
        if (c == ',') {
            end_field();
            continue;
        }
        if (c == '\r') continue;
        if (c == '\n') {
            end_row();
            continue;
        }
        field.push_back(c);
        field_started = true;
    }
    if (in_quotes) throw ParseError("unterminated quoted CSV field");
    if (!field.empty() || !row.empty()) end_row();
    return rows;
}

std::size_t apply_metadata_csv(DatabaseSchema& schema, const std::string& csv_text) {
    const auto rows = parse_csv(csv_text);
    if (rows.empty()) return 0;

    std::map<std::string, int> header;
    for (std::size_t i = 0; i < rows[0].size(); ++i)
        header[to_lower(normalize_ws(rows[0][i]))] = static_cast<int>(i);

    auto col_of = [&](const char* name) -> int {
        auto it = header.find(name);
        return it == header.end() ? -1 : it->second;
    };
    const int c_table = col_of("table_name");
    const int c_name = col_of("original_column_name");
    if (c_table < 0 || c_name < 0)
        throw ParseError("metadata CSV must have table_name and original_column_name columns");
    const int c_desc = col_of("column_description");
    const int c_format = col_of("data_format");
    const int c_value = col_of("value_description");

    auto cell = [&](const std::vector<std::string>& row, int idx) -> std::string {
        if (idx < 0 || idx >= static_cast<int>(row.size())) return "";
        return trim(row[static_cast<std::size_t>(idx)]);
    };

    std::size_t updated = 0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::string table_name = cell(row, c_table);
        const std::string column_name = cell(row, c_name);
        if (table_name.empty() || column_name.empty()) continue;
        const auto ref = schema.find_column(table_name, column_name);
        if (!ref) {
            logging::warn("metadata CSV for '" + schema.db_id + "': unknown column " + table_name +
                          "." + column_name + " (row " + std::to_string(r + 1) + "), skipped");
            continue;
        }
        ColumnMeta& col = schema.tables[static_cast<std::size_t>(ref->table_index)]
                              .columns[static_cast<std::size_t>(ref->column_index)];
        if (const std::string v = cell(row, c_desc); !v.empty()) col.description = v;
        if (const std::string v = cell(row, c_format); !v.empty()) col.data_format = v;
        if (const std::string v = cell(row, c_value); !v.empty()) col.value_description = v;
        ++updated;
    }
    return updated;
}

json schema_to_json(const DatabaseSchema& schema) {
    json tables = json::array();
    for (const TableMeta& t : schema.tables) {
        json cols = json::array();
        for (const ColumnMeta& c : t.columns) {
            json col{{"name", c.name}, {"type", c.data_type}};
            if (!c.description.empty()) col["description"] = c.description;
            if (!c.value_description.empty()) col["value_description"] = c.value_description;
            if (!c.data_format.empty()) col["data_format"] = c.data_format;
            cols.push_back(std::move(col));
        }
        json fks = json::array();
        for (const ForeignKey& fk : t.foreign_keys) {
            fks.push_back(json{{"column", fk.local_column},
                               {"ref_table", fk.target.table_index},
                               {"ref_column", fk.target.column_index}});
        }
        json table{{"name", t.name},
                   {"columns", std::move(cols)},
                   {"primary_key", t.primary_key},
                   {"foreign_keys", std::move(fks)}};
        if (!t.description.empty()) table["description"] = t.description;
        tables.push_back(std::move(table));
    }
    json out{{"db_id", schema.db_id}, {"tables", std::move(tables)}};
    if (schema.metadata && !schema.metadata->empty()) {
        out["evidence"] = json::array();
        for (const std::string& item : schema.metadata->items) out["evidence"].push_back(item);
    }
    return out;
}

DatabaseSchema schema_from_json(const json& doc) {
    DatabaseSchema schema;
    schema.db_id = require_field(doc, "db_id").get<std::string>();
    for (const auto& tj : require_field(doc, "tables")) {
        TableMeta table;
        table.name = require_field(tj, "name").get<std::string>();
        table.description = tj.value("description", "");
        for (const auto& cj : require_field(tj, "columns")) {
            ColumnMeta col;
            col.name = require_field(cj, "name").get<std::string>();
            col.data_type = cj.value("type", "");
            col.description = cj.value("description", "");
            col.value_description = cj.value("value_description", "");
            col.data_format = cj.value("data_format", "");
            table.columns.push_back(std::move(col));
        }
        if (tj.contains("primary_key"))
            table.primary_key = tj["primary_key"].get<std::vector<int>>();
        if (tj.contains("foreign_keys")) {
            for (const auto& fj : tj["foreign_keys"]) {
                table.foreign_keys.push_back(
                    ForeignKey{fj.at("column").get<int>(),
                               ColumnRef{fj.at("ref_table").get<int>(),
                                         fj.at("ref_column").get<int>()}});
            }
        }
        schema.tables.push_back(std::move(table));
    }
    if (doc.contains("evidence")) {
        EvidenceSet ev;
        for (const auto& item : doc["evidence"]) ev.insert(item.get<std::string>());
        schema.metadata = std::move(ev);
    }
    validate_schema(schema);
    return schema;
}

void save_repository(const std::vector<DatabaseSchema>& repo,
                     const std::filesystem::path& path) {
    json dbs = json::array();
    for (const DatabaseSchema& s : repo) dbs.push_back(schema_to_json(s));
    const json doc{{"version", 1}, {"databases", std::move(dbs)}};
    write_text_file_atomic(path, doc.dump(2) + "\n");
}

std::vector<DatabaseSchema> load_repository(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError("repository file " + path.string() + ": " + e.what());
    }
    std::vector<DatabaseSchema> repo;
    for (const auto& dbj : require_field(doc, "databases")) repo.push_back(schema_from_json(dbj));
    return repo;
}

} // namespace dbroute
