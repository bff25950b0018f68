#include "dbroute/corpus.hpp"
#include "dbroute/errors.hpp"
#include "dbroute/reasoner.hpp"
#include "dbroute/serialize.hpp"
#include "dbroute/util.hpp"

#include <algorithm>
#include <regex>
#include <sstream>

namespace dbroute {

std::vector<PhraseCandidate> PhraseMapping::resolved_candidates() const {
    std::vector<PhraseCandidate> out;
    for (const PhraseCandidate& c : candidates) {
        if (!c.not_mapped) out.push_back(c);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Parsers
// ---------------------------------------------------------------------------

std::map<int, std::set<int>> parse_adjacency_response(const std::string& response) {
    // Accepts "{0: {1, 2}; 1: {0}}", JSON-ish "{"0": [1, 2]}", newline
    // separated entries, and empty sets "{}" / "[]".
    static const std::regex entry_re(
        R"TOK("?(\d+)"?\s*:\s*(?:\{([^}{]*)\}|\[([^\][]*)\]))TOK");
    std::map<int, std::set<int>> adjacency;
    auto begin = std::sregex_iterator(response.begin(), response.end(), entry_re);
    auto end = std::sregex_iterator();
    if (begin == end)
        throw ParseError("adjacency response contains no 'index: {neighbors}' entries");
    for (auto it = begin; it != end; ++it) {
        const std::smatch& m = *it;
        const int key = std::stoi(m[1].str());
        const std::string inner = m[2].matched ? m[2].str() : m[3].str();
        std::set<int>& nbrs = adjacency[key]; // creates entry even when empty
        static const std::regex int_re(R"(\d+)");
        for (auto ni = std::sregex_iterator(inner.begin(), inner.end(), int_re);
             ni != std::sregex_iterator(); ++ni) {
            nbrs.insert(std::stoi(ni->str()));
        }
    }
    return adjacency;
}

std::vector<RawMappingLine> parse_mapping_response(const std::string& response) {
    std::vector<RawMappingLine> out;
    std::size_t non_empty = 0;
    std::size_t unparsed = 0;

    auto strip_decor = [](std::string s) {
        s = trim(s);
        while (!s.empty() && (s.front() == '`' || s.front() == '"' || s.front() == '\''))
            s.erase(s.begin());
        while (!s.empty() && (s.back() == '`' || s.back() == '"' || s.back() == '\''))
            s.pop_back();
        return trim(s);
    };

    for (std::string line : split_lines(response)) {
        line = trim(line);
        if (line.empty()) continue;
        if (!line.empty() && (line.rfind("- ", 0) == 0 || line.rfind("* ", 0) == 0))
            line = trim(line.substr(2));
        if (line.empty()) continue;
        ++non_empty;
        if (iequals(line, "NONE")) continue;

        std::size_t arrow = line.find("->");
        std::size_t arrow_len = 2;
        if (arrow == std::string::npos) {
            arrow = line.find("→"); // →
            arrow_len = 3;
        }
        if (arrow == std::string::npos) {
            ++unparsed;
            logging::warn("mapping line without arrow skipped: " + line);
            continue;
        }
        RawMappingLine entry;
        entry.phrase = strip_decor(line.substr(0, arrow));
        std::string target = strip_decor(line.substr(arrow + arrow_len));

        // optional kind suffix
        for (const char* suffix : {"(value)", "[value]"}) {
            if (target.size() > std::string(suffix).size() &&
                iequals(target.substr(target.size() - std::string(suffix).size()), suffix)) {
                entry.kind = PhraseCandidate::Kind::value;
                target = trim(target.substr(0, target.size() - std::string(suffix).size()));
            }
        }
        for (const char* suffix : {"(column)", "[column]"}) {
            if (target.size() > std::string(suffix).size() &&
                iequals(target.substr(target.size() - std::string(suffix).size()), suffix)) {
                target = trim(target.substr(0, target.size() - std::string(suffix).size()));
            }
        }
        target = strip_decor(target);

        if (entry.phrase.empty()) {
            ++unparsed;
            logging::warn("mapping line with empty phrase skipped: " + line);
            continue;
        }
        if (iequals(target, "N/A") || iequals(target, "NA") || iequals(target, "NONE")) {
            entry.na = true;
            out.push_back(std::move(entry));
            continue;
        }
        const std::size_t dot = target.rfind('.');
        if (dot == std::string::npos || dot == 0 || dot + 1 >= target.size()) {
            ++unparsed;
            logging::warn("mapping target is not Table.Column or N/A, skipped: " + line);
            continue;
        }
        entry.table = trim(target.substr(0, dot));
        entry.column = trim(target.substr(dot + 1));
        out.push_back(std::move(entry));
    }

    if (non_empty == 0) throw ParseError("empty phrase-mapping response");
    if (out.empty() && unparsed > 0)
        throw ParseError("no line of the phrase-mapping response could be parsed");
    return out;
}

std::vector<std::string> parse_rerank_response(const std::string& response,
                                               const std::string& expected_id) {
    static const std::regex line_re(R"(Q\s*([^\s:]+)\s*:\s*(.+))");
    for (const std::string& raw : split_lines(response)) {
        const std::string line = trim(raw);
        std::smatch m;
        if (!std::regex_match(line, m, line_re)) continue;
        const std::string id = m[1].str();
        if (!expected_id.empty() && id != expected_id)
            throw ParseError("rerank response answers question '" + id + "', expected '" +
                             expected_id + "'");
        std::vector<std::string> dbs;
        std::stringstream ss(m[2].str());
        std::string part;
        while (std::getline(ss, part, ',')) {
            std::string db = trim(part);
            while (!db.empty() && (db.front() == '[' || db.front() == '"' || db.front() == '`'))
                db.erase(db.begin());
            while (!db.empty() && (db.back() == ']' || db.back() == '"' || db.back() == '`' ||
                                   db.back() == '.'))
                db.pop_back();
            db = trim(db);
            if (!db.empty()) dbs.push_back(db);
        }
        if (dbs.empty()) throw ParseError("rerank response line has no database ids");
        return dbs;
    }
    throw ParseError("rerank response has no 'Q <id>: a, b, c' line");
}

// ---------------------------------------------------------------------------
// Tasks
// ---------------------------------------------------------------------------

namespace {

// Runs fn over up to `retries` attempts. Attempt 1 uses the base prompt;
// later attempts append a numbered one-line format reminder so each retry is
// a distinct prompt (and a distinct transcript entry).
template <typename Fn>
auto with_format_retries(ReasonerProvider& provider, const std::string& base_prompt,
                         const std::string& reminder, const DecodingParams& params, int retries,
                         Fn&& fn) {
    if (retries < 1) retries = 1;
    for (int attempt = 1;; ++attempt) {
        std::string prompt = base_prompt;
        if (attempt > 1)
            prompt += "\nReminder (attempt " + std::to_string(attempt) + "): " + reminder;
        const std::string response = provider.complete(prompt, params);
        try {
            return fn(response);
        } catch (const ParseError& e) {
            if (attempt >= retries) throw;
            logging::warn("format violation (attempt " + std::to_string(attempt) +
                          "), retrying: " + e.what());
        }
    }
}

} // namespace

SchemaGraph infer_join_adjacency(const DatabaseSchema& schema, ReasonerProvider& provider,
                                 const PromptSet& prompts, const DecodingParams& params,
                                 int retries) {
    validate_schema(schema);
    const std::string prompt = render_template(
        prompts.join_graph, {{"SCHEMA", serialize_schema_document(schema, true)}});
    const std::string reminder =
        "output only an adjacency list like {0: {1}; 1: {0}} over 0-based table indices";

    return with_format_retries(
        provider, prompt, reminder, params, retries, [&](const std::string& response) {
            const auto parsed = parse_adjacency_response(response);
            const int n = static_cast<int>(schema.tables.size());
            SchemaGraph graph;
            graph.db_id = schema.db_id;
            graph.adjacency.resize(schema.tables.size());
            for (const auto& [idx, nbrs] : parsed) {
                if (idx < 0 || idx >= n)
                    throw ParseError("adjacency index " + std::to_string(idx) +
                                     " out of range for " + std::to_string(n) + " tables");
                for (int nbr : nbrs) {
                    if (nbr < 0 || nbr >= n)
                        throw ParseError("adjacency neighbor " + std::to_string(nbr) +
                                         " out of range for " + std::to_string(n) + " tables");
                    if (nbr == idx) {
                        logging::warn("adjacency self-loop at table " + std::to_string(idx) +
                                      " dropped (db '" + schema.db_id + "')");
                        continue;
                    }
                    graph.add_edge(idx, nbr); // symmetrizes
                }
            }
            validate_graph(graph);
            return graph;
        });
}

std::vector<PhraseMapping> map_query_phrases(const std::string& query,
                                             const DatabaseSchema& schema,
                                             ReasonerProvider& provider, const PromptSet& prompts,
                                             const DecodingParams& params, int retries) {
    validate_schema(schema);
    std::string metadata_block;
    if (schema.metadata && !schema.metadata->empty())
        metadata_block = evidence_block(*schema.metadata);
    const std::string prompt =
        render_template(prompts.phrase_map, {{"QUERY", query},
                                             {"SCHEMA", serialize_schema_document(schema, true)},
                                             {"METADATA", metadata_block}});
    const std::string reminder =
        "output one 'phrase -> Table.Column' or 'phrase -> N/A' mapping per line, or NONE";

    const auto lines =
        with_format_retries(provider, prompt, reminder, params, retries,
                            [&](const std::string& response) {
                                return parse_mapping_response(response);
                            });

    const std::string query_norm = to_lower(normalize_ws(query));

    std::vector<PhraseMapping> mappings;
    std::map<std::string, std::size_t> by_phrase; // normalized phrase -> index

    for (const RawMappingLine& line : lines) {
        const std::string key = to_lower(normalize_ws(line.phrase));
        if (key.empty()) continue;
        if (query_norm.find(key) == std::string::npos) {
            logging::warn("mapped span '" + line.phrase + "' does not occur in the query, rejected");
            continue;
        }
        std::size_t idx;
        auto it = by_phrase.find(key);
        if (it == by_phrase.end()) {
            idx = mappings.size();
            by_phrase[key] = idx;
            mappings.push_back(PhraseMapping{line.phrase, {}});
        } else {
            idx = it->second;
        }
        if (line.na) continue; // NA only counts when nothing else resolves

        const auto ref = schema.find_column(line.table, line.column);
        if (!ref) {
            logging::warn("candidate " + line.table + "." + line.column +
                          " not found in schema '" + schema.db_id + "', dropped");
            continue;
        }
        const TableMeta& table = schema.tables[static_cast<std::size_t>(ref->table_index)];
        PhraseCandidate cand;
        cand.not_mapped = false;
        cand.table = table.name;
        cand.column = table.columns[static_cast<std::size_t>(ref->column_index)].name;
        cand.kind = line.kind;
        auto& cands = mappings[idx].candidates;
        const bool dup = std::any_of(cands.begin(), cands.end(), [&](const PhraseCandidate& c) {
            return !c.not_mapped && iequals(c.table, cand.table) && iequals(c.column, cand.column);
        });
        if (!dup) cands.push_back(std::move(cand));
    }

    for (PhraseMapping& m : mappings) {
        if (m.candidates.empty()) m.candidates.push_back(PhraseCandidate::na());
    }
    return mappings;
}

DirectRerankResult direct_rerank(const QuerySample& query, const RankedList& candidates,
                                 const std::vector<const DatabaseSchema*>& schemas,
                                 ReasonerProvider& provider, const PromptSet& prompts,
                                 const DecodingParams& params, int retries) {
    if (candidates.items.empty()) throw ValidationError("direct_rerank: empty candidate list");
    if (schemas.size() != candidates.items.size())
        throw ValidationError("direct_rerank: schemas and candidates must align");

    const std::size_t top_n = std::min<std::size_t>(3, candidates.items.size());

    std::vector<std::string> ranking_parts, schema_parts;
    for (std::size_t i = 0; i < candidates.items.size(); ++i) {
        ranking_parts.push_back("Rank " + std::to_string(i + 1) + ": " +
                                candidates.items[i].db_id);
        schema_parts.push_back("[Schema " + std::to_string(i + 1) + " (" +
                               candidates.items[i].db_id + "):\n" +
                               serialize_schema_document(*schemas[i], true) + "]");
    }
    const std::string prompt = render_template(
        prompts.direct_rerank,
        {{"ID", query.query_id},
         {"QUESTION", query.text},
         {"RANKING", join(ranking_parts, "; ")},
         {"SCHEMAS", join(schema_parts, " ")},
         {"TOP_K", std::to_string(candidates.items.size())},
         {"TOP_N", std::to_string(top_n)}});
    const std::string reminder = "answer exactly 'Q " + query.query_id + ": db_1, db_2, db_3' with " +
                                 std::to_string(top_n) + " distinct DBs from the initial ranking";

    return with_format_retries(
        provider, prompt, reminder, params, retries, [&](const std::string& response) {
            const auto dbs = parse_rerank_response(response, query.query_id);
            if (dbs.size() != top_n)
                throw ParseError("rerank response names " + std::to_string(dbs.size()) +
                                 " DBs, expected " + std::to_string(top_n));
            std::set<std::string> seen;
            for (const std::string& db : dbs) {
                if (!seen.insert(db).second)
                    throw ParseError("rerank response repeats DB '" + db + "'");
                if (!candidates.contains(db))
                    throw ParseError("rerank response names DB '" + db +
                                     "' outside the candidate set");
            }
            DirectRerankResult result;
            result.query_id = query.query_id;
            result.top3 = dbs;
            return result;
        });
}

} // namespace dbroute
