#include "dbroute/ddl.hpp"

#include "dbroute/errors.hpp"
#include "dbroute/util.hpp"

#include <cctype>
#include <optional>
#include <unordered_set>
#include <vector>

namespace dbroute {

namespace {

enum class TokKind { identifier, quoted_identifier, string_literal, number, punct, end };

struct Token {
    TokKind kind = TokKind::end;
    std::string text; // unquoted for identifiers/strings
    std::size_t line = 0;
    std::size_t column = 0;

    bool is_kw(std::string_view kw) const {
        return kind == TokKind::identifier && iequals(text, kw);
    }
    bool is_punct(char c) const { return kind == TokKind::punct && text.size() == 1 && text[0] == c; }
};

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) { tokenize(); }
    const std::vector<Token>& tokens() const { return tokens_; }

private:
    void tokenize() {
        std::size_t i = 0;
        std::size_t line = 1, col = 1;
        auto advance = [&](std::size_t n) {
            for (std::size_t k = 0; k < n; ++k) {
                if (i < src_.size() && src_[i] == '\n') {
                    ++line;
                    col = 1;
                } else {
                    ++col;
                }
                ++i;
            }
        };
        while (i < src_.size()) {
            const char c = src_[i];
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance(1);
                continue;
            }
            // comments
            if (c == '-' && i + 1 < src_.size() && src_[i + 1] == '-') {
                while (i < src_.size() && src_[i] != '\n') advance(1);
                continue;
            }
            if (c == '/' && i + 1 < src_.size() && src_[i + 1] == '*') {
                advance(2);
                while (i + 1 < src_.size() && !(src_[i] == '*' && src_[i + 1] == '/')) advance(1);
                if (i + 1 >= src_.size()) throw ParseError("unterminated block comment", line, col);
                advance(2);
                continue;
            }
            const std::size_t tline = line, tcol = col;
            if (c == '"' || c == '`' || c == '[') {
                const char close = (c == '[') ? ']' : c;
                advance(1);
                std::string text;
                bool closed = false;
                while (i < src_.size()) {
                    if (src_[i] == close) {
                        // doubled quote escapes itself ("" inside "...")
                        if (close != ']' && i + 1 < src_.size() && src_[i + 1] == close) {
                            text.push_back(close);
                            advance(2);
                            continue;
                        }
                        advance(1);
                        closed = true;
                        break;
                    }
                    text.push_back(src_[i]);
                    advance(1);
                }
                if (!closed) throw ParseError("unterminated quoted identifier", tline, tcol);
                push(TokKind::quoted_identifier, text, tline, tcol);
                continue;
            }
            if (c == '\'') {
                advance(1);
                std::string text;
                bool closed = false;
                while (i < src_.size()) {
                    if (src_[i] == '\'') {
                        if (i + 1 < src_.size() && src_[i + 1] == '\'') {
                            text.push_back('\'');
                            advance(2);
                            continue;
                        }
                        advance(1);
                        closed = true;
                        break;
                    }
                    text.push_back(src_[i]);
                    advance(1);
                }
                if (!closed) throw ParseError("unterminated string literal", tline, tcol);
                push(TokKind::string_literal, text, tline, tcol);
                continue;
            }
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::string text;
                while (i < src_.size() &&
                       (std::isalnum(static_cast<unsigned char>(src_[i])) || src_[i] == '_' ||
                        src_[i] == '$')) {
                    text.push_back(src_[i]);
                    advance(1);
                }
                push(TokKind::identifier, text, tline, tcol);
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) ||
                (c == '.' && i + 1 < src_.size() &&
                 std::isdigit(static_cast<unsigned char>(src_[i + 1])))) {
                std::string text;
                while (i < src_.size() &&
                       (std::isalnum(static_cast<unsigned char>(src_[i])) || src_[i] == '.' ||
                        src_[i] == '+' || src_[i] == '-')) {
                    // stop +/- unless directly after exponent marker
                    if ((src_[i] == '+' || src_[i] == '-') &&
                        !(i > 0 && (src_[i - 1] == 'e' || src_[i - 1] == 'E')))
                        break;
                    text.push_back(src_[i]);
                    advance(1);
                }
                push(TokKind::number, text, tline, tcol);
                continue;
            }
            push(TokKind::punct, std::string(1, c), tline, tcol);
            advance(1);
        }
        push(TokKind::end, "", line, col);
    }

    void push(TokKind kind, std::string text, std::size_t line, std::size_t col) {
        tokens_.push_back(Token{kind, std::move(text), line, col});
    }

    const std::string& src_;
    std::vector<Token> tokens_;
};

// Column constraint / table constraint starter keywords. Anything after the
// type tokens that matches one of these ends the type string.
bool is_constraint_start(const Token& t) {
    static const char* kws[] = {"primary", "references", "not",     "null",   "unique",
                                "default", "check",      "collate", "foreign", "constraint",
                                "autoincrement", "generated", "on", "deferrable"};
    if (t.kind != TokKind::identifier) return false;
    for (const char* kw : kws) {
        if (iequals(t.text, kw)) return true;
    }
    return false;
}

struct PendingFk {
    int table_index;
    std::vector<int> local_columns;
    std::string target_table;
    std::vector<std::string> target_columns; // may be empty: references target PK
    std::size_t line, column;
};

class Parser {
public:
    explicit Parser(const std::string& src) : lexer_(src), toks_(lexer_.tokens()) {}

    DatabaseSchema parse(const std::string& db_id) {
        DatabaseSchema schema;
        schema.db_id = db_id;
        while (!at_end()) {
            if (peek().is_kw("create") && peek(1).is_kw("table")) {
                parse_create_table(schema);
            } else {
                ++pos_; // skip anything outside CREATE TABLE statements
            }
        }
        if (schema.tables.empty()) throw ParseError("no tables found in DDL script");
        resolve_foreign_keys(schema);
        return schema;
    }

private:
    const Token& peek(std::size_t ahead = 0) const {
        const std::size_t idx = pos_ + ahead;
        return idx < toks_.size() ? toks_[idx] : toks_.back();
    }
    const Token& take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
    bool at_end() const { return peek().kind == TokKind::end; }

    [[noreturn]] void fail(const std::string& msg, const Token& at) const {
        throw ParseError(msg, at.line, at.column);
    }

    std::string expect_identifier(const char* what) {
        const Token& t = peek();
        if (t.kind != TokKind::identifier && t.kind != TokKind::quoted_identifier &&
            t.kind != TokKind::string_literal)
            fail(std::string("expected ") + what, t);
        ++pos_;
        return t.text;
    }

    void expect_punct(char c) {
        const Token& t = peek();
        if (!t.is_punct(c)) fail(std::string("expected '") + c + "'", t);
        ++pos_;
    }

    void skip_parenthesized() {
        expect_punct('(');
        int depth = 1;
        while (depth > 0) {
            const Token& t = take();
            if (t.kind == TokKind::end) fail("unbalanced parentheses", t);
            if (t.is_punct('(')) ++depth;
            if (t.is_punct(')')) --depth;
        }
    }

    void parse_create_table(DatabaseSchema& schema) {
        take(); // CREATE
        take(); // TABLE
        if (peek().is_kw("if") && peek(1).is_kw("not") && peek(2).is_kw("exists")) {
            pos_ += 3;
        }
        const Token name_tok = peek();
        std::string table_name = expect_identifier("table name");
        if (peek().is_punct('.')) { // schema-qualified name: keep last component
            take();
            table_name = expect_identifier("table name");
        }
        for (const TableMeta& t : schema.tables) {
            if (iequals(t.name, table_name))
                fail("duplicate table name '" + table_name + "'", name_tok);
        }

        TableMeta table;
        table.name = table_name;
        const int table_index = static_cast<int>(schema.tables.size());
        expect_punct('(');

        bool first = true;
        while (true) {
            if (peek().is_punct(')')) {
                take();
                break;
            }
            if (!first) expect_punct(',');
            first = false;
            if (peek().is_punct(')')) { // tolerate trailing comma
                take();
                break;
            }
            parse_table_item(schema, table, table_index);
        }
        // optional statement tail (WITHOUT ROWID etc.) up to ';' or next CREATE
        while (!at_end() && !peek().is_punct(';') &&
               !(peek().is_kw("create") && peek(1).is_kw("table"))) {
            ++pos_;
        }
        if (peek().is_punct(';')) take();

        if (table.columns.empty())
            fail("table '" + table.name + "' has no columns", name_tok);
        schema.tables.push_back(std::move(table));
    }

    void parse_table_item(DatabaseSchema& schema, TableMeta& table, int table_index) {
        (void)schema;
        const Token& t = peek();
        if (t.is_kw("primary") && peek(1).is_kw("key")) {
            pos_ += 2;
            table.primary_key = parse_column_index_list(table);
            return;
        }
        if (t.is_kw("foreign") && peek(1).is_kw("key")) {
            const Token fk_tok = t;
            pos_ += 2;
            PendingFk fk;
            fk.table_index = table_index;
            fk.line = fk_tok.line;
            fk.column = fk_tok.column;
            fk.local_columns = parse_column_index_list(table);
            if (!peek().is_kw("references")) fail("expected REFERENCES", peek());
            take();
            fk.target_table = expect_identifier("referenced table name");
            if (peek().is_punct('(')) {
                take();
                while (true) {
                    fk.target_columns.push_back(expect_identifier("referenced column name"));
                    if (peek().is_punct(',')) {
                        take();
                        continue;
                    }
                    expect_punct(')');
                    break;
                }
            }
            skip_fk_actions();
            pending_fks_.push_back(std::move(fk));
            return;
        }
        if (t.is_kw("unique")) {
            take();
            if (peek().is_punct('(')) skip_parenthesized();
            return;
        }
        if (t.is_kw("check")) {
            take();
            skip_parenthesized();
            return;
        }
        if (t.is_kw("constraint")) {
            take();
            expect_identifier("constraint name");
            parse_table_item(schema, table, table_index);
            return;
        }
        parse_column_def(table, table_index);
    }

    std::vector<int> parse_column_index_list(TableMeta& table) {
        std::vector<int> indices;
        expect_punct('(');
        while (true) {
            const Token col_tok = peek();
            const std::string col = expect_identifier("column name");
            if (peek().is_kw("asc") || peek().is_kw("desc")) take();
            const int idx = table.find_column(col);
            if (idx < 0)
                fail("key references unknown column '" + col + "' in table '" + table.name + "'",
                     col_tok);
            indices.push_back(idx);
            if (peek().is_punct(',')) {
                take();
                continue;
            }
            expect_punct(')');
            break;
        }
        return indices;
    }

    void skip_fk_actions() {
        // ON DELETE/UPDATE <action>, MATCH <x>, DEFERRABLE ...
        while (peek().is_kw("on") || peek().is_kw("match") || peek().is_kw("deferrable") ||
               peek().is_kw("not")) {
            if (peek().is_kw("on")) {
                take();
                take(); // DELETE | UPDATE
                if (peek().is_kw("set") || peek().is_kw("no")) take();
                take(); // NULL / DEFAULT / CASCADE / RESTRICT / ACTION
            } else if (peek().is_kw("match")) {
                take();
                take();
            } else { // [NOT] DEFERRABLE [INITIALLY ...]
                if (peek().is_kw("not")) take();
                if (!peek().is_kw("deferrable")) break;
                take();
                if (peek().is_kw("initially")) {
                    take();
                    take();
                }
            }
        }
    }

    void parse_column_def(TableMeta& table, int table_index) {
        const Token name_tok = peek();
        const std::string col_name = expect_identifier("column name");
        if (table.find_column(col_name) >= 0)
            fail("duplicate column name '" + col_name + "' in table '" + table.name + "'",
                 name_tok);

        // Type: identifier tokens plus optional parenthesized args, verbatim.
        std::string type;
        while (peek().kind == TokKind::identifier && !is_constraint_start(peek())) {
            if (!type.empty()) type += ' ';
            type += take().text;
        }
        if (peek().is_punct('(') && !type.empty()) {
            type += '(';
            take();
            int depth = 1;
            while (depth > 0) {
                const Token& t = take();
                if (t.kind == TokKind::end) fail("unbalanced parentheses in type", t);
                if (t.is_punct('(')) ++depth;
                if (t.is_punct(')')) {
                    --depth;
                    if (depth == 0) break;
                }
                if (!type.empty() && type.back() != '(' && !t.is_punct(',')) type += ' ';
                type += t.text;
            }
            type += ')';
        }

        ColumnMeta col;
        col.name = col_name;
        col.data_type = type;
        const int col_index = static_cast<int>(table.columns.size());
        table.columns.push_back(col);

        // inline constraints
        while (true) {
            if (peek().is_punct(',') || peek().is_punct(')')) break;
            if (peek().is_kw("primary") && peek(1).is_kw("key")) {
                pos_ += 2;
                if (peek().is_kw("asc") || peek().is_kw("desc")) take();
                if (peek().is_kw("autoincrement")) take();
                table.primary_key.push_back(col_index);
                continue;
            }
            if (peek().is_kw("references")) {
                const Token ref_tok = take();
                PendingFk fk;
                fk.table_index = table_index;
                fk.line = ref_tok.line;
                fk.column = ref_tok.column;
                fk.local_columns.push_back(col_index);
                fk.target_table = expect_identifier("referenced table name");
                if (peek().is_punct('(')) {
                    take();
                    fk.target_columns.push_back(expect_identifier("referenced column name"));
                    expect_punct(')');
                }
                skip_fk_actions();
                pending_fks_.push_back(std::move(fk));
                continue;
            }
            if (peek().is_kw("not") && peek(1).is_kw("null")) {
                pos_ += 2;
                continue;
            }
            if (peek().is_kw("default")) {
                take();
                if (peek().is_punct('(')) {
                    skip_parenthesized();
                } else {
                    if (peek().is_punct('-') || peek().is_punct('+')) take();
                    take(); // literal / identifier
                }
                continue;
            }
            if (peek().is_kw("check")) {
                take();
                skip_parenthesized();
                continue;
            }
            if (peek().is_kw("collate")) {
                take();
                take();
                continue;
            }
            if (peek().is_kw("unique") || peek().is_kw("null") || peek().is_kw("autoincrement")) {
                take();
                continue;
            }
            if (peek().is_kw("constraint")) {
                take();
                expect_identifier("constraint name");
                continue;
            }
            if (peek().is_kw("generated")) { // GENERATED ALWAYS AS (...) [STORED|VIRTUAL]
                take();
                if (peek().is_kw("always")) take();
                if (peek().is_kw("as")) take();
                if (peek().is_punct('(')) skip_parenthesized();
                if (peek().is_kw("stored") || peek().is_kw("virtual")) take();
                continue;
            }
            fail("unexpected token '" + peek().text + "' in column definition", peek());
        }
    }

    void resolve_foreign_keys(DatabaseSchema& schema) {
        std::vector<std::string> unresolved;
        for (const PendingFk& fk : pending_fks_) {
            TableMeta& owner = schema.tables[static_cast<std::size_t>(fk.table_index)];
            const int target_t = schema.find_table(fk.target_table);
            if (target_t < 0) {
                unresolved.push_back("table '" + owner.name + "' references unknown table '" +
                                     fk.target_table + "' (line " + std::to_string(fk.line) + ")");
                continue;
            }
            const TableMeta& target = schema.tables[static_cast<std::size_t>(target_t)];
            std::vector<std::string> target_cols = fk.target_columns;
            if (target_cols.empty()) {
                // REFERENCES t  with no column list: resolve to t's primary key
                if (target.primary_key.size() != fk.local_columns.size()) {
                    unresolved.push_back("table '" + owner.name + "' references '" + target.name +
                                         "' without columns but its primary key does not match " +
                                         "(line " + std::to_string(fk.line) + ")");
                    continue;
                }
                for (int pk : target.primary_key)
                    target_cols.push_back(target.columns[static_cast<std::size_t>(pk)].name);
            }
            if (target_cols.size() != fk.local_columns.size()) {
                unresolved.push_back("table '" + owner.name +
                                     "': foreign key column count mismatch (line " +
                                     std::to_string(fk.line) + ")");
                continue;
            }
            bool ok = true;
            for (std::size_t i = 0; i < target_cols.size(); ++i) {
                const int target_c = target.find_column(target_cols[i]);
                if (target_c < 0) {
                    unresolved.push_back("table '" + owner.name + "' references unknown column '" +
                                         target.name + "." + target_cols[i] + "' (line " +
                                         std::to_string(fk.line) + ")");
                    ok = false;
                    break;
                }
                owner.foreign_keys.push_back(
                    ForeignKey{fk.local_columns[i], ColumnRef{target_t, target_c}});
            }
            (void)ok;
        }
        if (!unresolved.empty())
            throw ParseError("unresolved foreign key references: " + join(unresolved, "; "));
    }

    Lexer lexer_;
    const std::vector<Token>& toks_;
    std::size_t pos_ = 0;
    std::vector<PendingFk> pending_fks_;
};

} // namespace

DatabaseSchema parse_ddl(const std::string& script, const std::string& db_id) {
    Parser parser(script);
    return parser.parse(db_id);
}

} // namespace dbroute
