#include "dbroute/prompts.hpp"

#include "dbroute/util.hpp"

#include <filesystem>

namespace dbroute {

namespace {

const char* kJoinGraphTemplate =
    R"TPL(You are a database administrator analysing a relational schema.
List every pair of tables in the schema below that can be joined, either on a
declared key relationship or on a shared column holding the same values.
Output ONLY an adjacency list mapping each 0-based table index (in schema
order) to the set of table indices it can join with, using exactly this
format and no extra text:
{0: {1, 2}; 1: {0}; 2: {0}; 3: {}}
A table with no join partners maps to the empty set {}.

Schema:
{SCHEMA}

Adjacency list:
)TPL";

const char* kPhraseMapTemplate =
    R"TPL(You are linking a natural-language question to a database schema.
Extract every span of the question that refers to a table, a column, or a
stored value of the database below. Consider not only noun phrases but also
verbs, adjectives and aggregate expressions that implicitly refer to schema
entities. Output one mapping per line, exactly in the form:
phrase -> Table.Column
Append " (value)" when the phrase denotes a stored cell value rather than
the column itself. A phrase may repeat on several lines when multiple
mappings are plausible. If a phrase cannot be matched to any entity of this
schema, map it to N/A. If nothing in the question refers to this schema,
output the single word NONE. Do not add any other text.

Question: {QUERY}

Schema:
{SCHEMA}
{METADATA}
Mappings:
)TPL";

const char* kDirectRerankTemplate =
    R"TPL(You are an expert DB Administrator tasked with evaluating and refining the relevance ranking of DBs for specific questions. You will be provided with a question and an initial ranking of the top {TOP_K} DBs deemed most relevant. Along with this you will be provided the schemas of these DBs. Your task is to analyze the question, critically assess the initial ranking, and provide a revised ranking of the top {TOP_N} DBs, where the DB at Rank 1 is *absolutely the most relevant* to answering the given question.
Input: Question {ID}: Text: {QUESTION}; Ranking (Top {TOP_K}): {RANKING}; Schemas: {SCHEMAS}
Output: Q {ID}: [DB_1], [DB_2], [DB_3]
Rules: Rank 1 must be the *undisputed* best match. All {TOP_N} DBs must be distinct and from the initial ranking. Do not violate the output format or add extra text.
)TPL";

std::string load_or(const std::filesystem::path& file, const char* fallback) {
    if (std::filesystem::exists(file)) return read_text_file(file);
    return fallback;
}

} // namespace

PromptSet PromptSet::builtin() {
    PromptSet set;
    set.join_graph = kJoinGraphTemplate;
    set.phrase_map = kPhraseMapTemplate;
    set.direct_rerank = kDirectRerankTemplate;
    return set;
}

PromptSet PromptSet::load_dir(const std::filesystem::path& dir) {
    PromptSet set;
    set.join_graph = load_or(dir / "join_graph.txt", kJoinGraphTemplate);
    set.phrase_map = load_or(dir / "phrase_map.txt", kPhraseMapTemplate);
    set.direct_rerank = load_or(dir / "direct_rerank.txt", kDirectRerankTemplate);
    return set;
}

std::string render_template(const std::string& tpl,
                            const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(tpl.size());
    std::size_t i = 0;
    while (i < tpl.size()) {
        if (tpl[i] == '{') {
            const std::size_t close = tpl.find('}', i + 1);
            if (close != std::string::npos) {
                const std::string key = tpl.substr(i + 1, close - i - 1);
                auto it = vars.find(key);
                if (it != vars.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(tpl[i]);
        ++i;
    }
    return out;
}

} // namespace dbroute
