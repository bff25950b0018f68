#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace dbroute {

// Prompt templates are data: plain-text files with {NAME} placeholders.
//   join_graph    uses {SCHEMA}
//   phrase_map    uses {QUERY}, {SCHEMA}, {METADATA}
//   direct_rerank uses {ID}, {QUESTION}, {RANKING}, {SCHEMAS}, {TOP_K}, {TOP_N}
struct PromptSet {
    std::string join_graph;
    std::string phrase_map;
    std::string direct_rerank;

    // Compiled-in defaults, identical to the files shipped under prompts/.
    static PromptSet builtin();
    // Loads join_graph.txt, phrase_map.txt, direct_rerank.txt from a
    // directory; missing files fall back to the builtin text.
    static PromptSet load_dir(const std::filesystem::path& dir);
};

// Literal {KEY} substitution for the provided keys; unmatched braces in the
// template are left untouched (templates legitimately contain braces).
std::string render_template(const std::string& tpl,
                            const std::map<std::string, std::string>& vars);

} // namespace dbroute
