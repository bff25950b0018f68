#include "dbroute/serialize.hpp"

#include "dbroute/errors.hpp"

#include <sstream>

namespace dbroute {

namespace {

std::string quote_identifier(const std::string& name) {
    std::string out = "\"";
    for (char c : name) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

} // namespace

std::string render_create_table(const DatabaseSchema& schema, const TableMeta& table) {
    std::ostringstream out;
    out << "CREATE TABLE " << quote_identifier(table.name) << " (";
    for (std::size_t ci = 0; ci < table.columns.size(); ++ci) {
        if (ci) out << ", ";
        out << quote_identifier(table.columns[ci].name);
        if (!table.columns[ci].data_type.empty()) out << ' ' << table.columns[ci].data_type;
    }
    if (!table.primary_key.empty()) {
        out << ", PRIMARY KEY (";
        for (std::size_t i = 0; i < table.primary_key.size(); ++i) {
            if (i) out << ", ";
            out << quote_identifier(
                table.columns[static_cast<std::size_t>(table.primary_key[i])].name);
        }
        out << ")";
    }
    for (const ForeignKey& fk : table.foreign_keys) {
        const TableMeta& target = schema.tables[static_cast<std::size_t>(fk.target.table_index)];
        out << ", FOREIGN KEY ("
            << quote_identifier(table.columns[static_cast<std::size_t>(fk.local_column)].name)
            << ") REFERENCES " << quote_identifier(target.name) << " ("
            << quote_identifier(
                   target.columns[static_cast<std::size_t>(fk.target.column_index)].name)
            << ")";
    }
    out << ")";
    return out.str();
}

std::string serialize_schema_document(const DatabaseSchema& schema, bool include_metadata) {
    std::ostringstream out;
    out << "Database: " << schema.db_id << ":\n";
    for (const TableMeta& table : schema.tables) {
        out << "Table: " << table.name << "\n";
        out << render_create_table(schema, table) << "\n";
        out << "Table Description: " << (table.description.empty() ? table.name : table.description)
            << "\n";
        for (std::size_t ci = 0; ci < table.columns.size(); ++ci) {
            const ColumnMeta& col = table.columns[ci];
            out << "COLUMN " << (ci + 1) << " column_name: " << col.name;
            if (include_metadata) {
                if (!col.description.empty()) out << "; Column description: " << col.description;
                if (!col.data_format.empty()) out << "; Data format: " << col.data_format;
                if (!col.value_description.empty())
                    out << "; Value description: " << col.value_description;
            }
            out << "\n";
        }
    }
    return out.str();
}

std::string serialize_schema_compact(const DatabaseSchema& schema) {
    std::ostringstream out;
    out << "Database: " << schema.db_id << "\n";
    for (const TableMeta& table : schema.tables) {
        out << table.name << "(";
        for (std::size_t ci = 0; ci < table.columns.size(); ++ci) {
            if (ci) out << ", ";
            out << table.columns[ci].name;
        }
        out << ")\n";
    }
    return out.str();
}

std::string serialize_schema(const DatabaseSchema& schema, bool include_metadata,
                             const std::string& style) {
    if (style == "full") return serialize_schema_document(schema, include_metadata);
    if (style == "compact") return serialize_schema_compact(schema);
    throw ValidationError("unknown document style '" + style + "' (expected full|compact)");
}

std::string column_document(const DatabaseSchema& schema, const ColumnRef& ref) {
    const TableMeta& table = schema.tables.at(static_cast<std::size_t>(ref.table_index));
    const ColumnMeta& col = table.columns.at(static_cast<std::size_t>(ref.column_index));
    std::string doc = table.name + "." + col.name;
    if (!col.description.empty()) doc += " — " + col.description;
    return doc;
}

std::string evidence_block(const EvidenceSet& evidence) {
    if (evidence.empty()) return "";
    std::string out = "Metadata:\n";
    for (const std::string& item : evidence.items) out += "- " + item + "\n";
    return out;
}

} // namespace dbroute
