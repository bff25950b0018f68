#include "dbroute/scoring.hpp"

#include "dbroute/corpus.hpp"
#include "dbroute/errors.hpp"
#include "dbroute/serialize.hpp"
#include "dbroute/util.hpp"

#include <algorithm>
#include <cmath>

namespace dbroute {

using nlohmann::json;

double coverage_score(const CoverageInput& input) {
    if (input.total_mappings <= 0)
        throw ValidationError("coverage_score: total_mappings must be >= 1");
    if (input.na_mappings < 0 || input.na_mappings > input.total_mappings)
        throw ValidationError("coverage_score: na_mappings out of range");
    if (input.n < 1.0) throw ValidationError("coverage_score: n must be >= 1");
    const double x = static_cast<double>(input.na_mappings) /
                     static_cast<double>(input.total_mappings);
    return std::exp(-input.n * x);
}

ZeroPhrasePolicy zero_phrase_policy_from_name(const std::string& name) {
    if (name == "invalid") return ZeroPhrasePolicy::invalid;
    if (name == "neutral") return ZeroPhrasePolicy::neutral;
    throw ValidationError("unknown zero_phrase_policy '" + name + "' (expected invalid|neutral)");
}

std::string zero_phrase_policy_name(ZeroPhrasePolicy policy) {
    return policy == ZeroPhrasePolicy::invalid ? "invalid" : "neutral";
}

void RerankConfig::validate() const {
    if (k < 1) throw ValidationError("rerank config: k must be >= 1");
    if (n < 1.0) throw ValidationError("rerank config: n must be >= 1");
    if (max_assignments < 1) throw ValidationError("rerank config: max_assignments must be >= 1");
}

namespace {

int table_index_of(const PhraseCandidate& cand, const DatabaseSchema& schema,
                   const SchemaGraph& graph) {
    const int idx = schema.find_table(cand.table);
    if (idx < 0 || idx >= graph.table_count())
        throw ValidationError("candidate table '" + cand.table + "' absent from graph of '" +
                              graph.db_id + "'");
    return idx;
}

bool set_connected(const SchemaGraph& graph, const std::set<int>& tables, bool steiner) {
    return steiner ? is_connected_allowing_intermediates(graph, tables)
                   : is_connected_subset(graph, tables);
}

std::set<int> witness_connected_tables(const SchemaGraph& graph, const std::set<int>& tables,
                                       bool steiner) {
    if (!steiner) return tables;
    return connecting_tables(graph, tables);
}

} // namespace

ConnectivityResult connectivity_score(const std::vector<PhraseMapping>& mappings,
                                      const SchemaGraph& graph, const DatabaseSchema& schema,
                                      const RerankConfig& config) {
    config.validate();

    // Phrases with at least one resolved candidate participate; NA-only
    // phrases affect coverage, not connectivity.
    std::vector<const PhraseMapping*> mapped;
    for (const PhraseMapping& m : mappings) {
        if (!m.resolved_candidates().empty()) mapped.push_back(&m);
    }
    if (mapped.empty()) return ConnectivityResult{1, std::nullopt, false};

    std::vector<std::vector<PhraseCandidate>> options;
    std::vector<std::vector<int>> option_tables;
    options.reserve(mapped.size());
    for (const PhraseMapping* m : mapped) {
        options.push_back(m->resolved_candidates());
        std::vector<int> tables;
        for (const PhraseCandidate& c : options.back())
            tables.push_back(table_index_of(c, schema, graph));
        option_tables.push_back(std::move(tables));
    }

    // Odometer enumeration, early exit on first connected assignment.
    std::vector<std::size_t> choice(options.size(), 0);
    long enumerated = 0;
    bool exhausted = false;
    while (!exhausted) {
        if (enumerated >= config.max_assignments) {
            // Relaxed fallback: union of every candidate table, reachability
            // through intermediates allowed.
            logging::warn("connectivity enumeration cap hit for '" + graph.db_id +
                          "', downgrading to relaxed union check");
            std::set<int> all_tables;
            for (const auto& tables : option_tables) all_tables.insert(tables.begin(), tables.end());
            if (is_connected_allowing_intermediates(graph, all_tables)) {
                ConnectivityWitness witness;
                for (std::size_t p = 0; p < options.size(); ++p) {
                    witness.assignment.emplace_back(mapped[p]->phrase, options[p][0]);
                    witness.tables.insert(option_tables[p][0]);
                }
                witness.connected_tables = connecting_tables(graph, all_tables);
                return ConnectivityResult{1, std::move(witness), true};
            }
            return ConnectivityResult{0, std::nullopt, true};
        }
        ++enumerated;

        std::set<int> tables;
        for (std::size_t p = 0; p < choice.size(); ++p)
            tables.insert(option_tables[p][choice[p]]);
        if (set_connected(graph, tables, config.allow_steiner_tables)) {
            ConnectivityWitness witness;
            for (std::size_t p = 0; p < choice.size(); ++p)
                witness.assignment.emplace_back(mapped[p]->phrase, options[p][choice[p]]);
            witness.tables = tables;
            witness.connected_tables =
                witness_connected_tables(graph, tables, config.allow_steiner_tables);
            return ConnectivityResult{1, std::move(witness), false};
        }

        // advance odometer
        std::size_t pos = 0;
        for (;;) {
            if (pos == choice.size()) {
                exhausted = true;
                break;
            }
            if (++choice[pos] < options[pos].size()) break;
            choice[pos] = 0;
            ++pos;
        }
    }
    return ConnectivityResult{0, std::nullopt, false};
}

double total_score(double coverage, int connectivity) {
    return coverage * static_cast<double>(connectivity);
}

double semantic_score(const std::vector<PhraseMapping>& mappings, const DatabaseSchema& schema,
                      EmbeddingProvider& embedder, bool per_phrase_max) {
    struct Pair {
        std::size_t phrase_idx;
        std::string doc;
    };
    std::vector<std::string> phrases;
    std::vector<Pair> pairs;
    for (const PhraseMapping& m : mappings) {
        const auto resolved = m.resolved_candidates();
        if (resolved.empty()) continue;
        const std::size_t phrase_idx = phrases.size();
        phrases.push_back(m.phrase);
        for (const PhraseCandidate& cand : resolved) {
            const auto ref = schema.find_column(cand.table, cand.column);
            if (!ref)
                throw ValidationError("semantic_score: candidate " + cand.table + "." +
                                      cand.column + " not in schema '" + schema.db_id + "'");
            pairs.push_back(Pair{phrase_idx, column_document(schema, *ref)});
        }
    }
    if (pairs.empty()) return 0.0;

    // one batched call for all texts: phrases first, then column documents
    std::vector<std::string> texts = phrases;
    for (const Pair& p : pairs) texts.push_back(p.doc);
    const auto vectors = embedder.embed_batch(texts);
    if (vectors.size() != texts.size())
        throw ProviderError("embedding batch size mismatch in semantic_score", false);

    if (per_phrase_max) {
        std::vector<double> best(phrases.size(), -2.0);
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const double sim =
                cosine_similarity(vectors[pairs[i].phrase_idx], vectors[phrases.size() + i]);
            best[pairs[i].phrase_idx] = std::max(best[pairs[i].phrase_idx], sim);
        }
        double sum = 0.0;
        for (double b : best) sum += b;
        return sum / static_cast<double>(best.size());
    }

    double sum = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i)
        sum += cosine_similarity(vectors[pairs[i].phrase_idx], vectors[phrases.size() + i]);
    return sum / static_cast<double>(pairs.size());
}

json routing_score_to_json(const RoutingScore& score) {
    json phrases = json::array();
    for (const PhraseMapping& m : score.mappings) {
        json cands = json::array();
        for (const PhraseCandidate& c : m.candidates) {
            if (c.not_mapped) {
                cands.push_back("N/A");
            } else {
                std::string s = c.table + "." + c.column;
                if (c.kind == PhraseCandidate::Kind::value) s += " (value)";
                cands.push_back(std::move(s));
            }
        }
        phrases.push_back(json{{"phrase", m.phrase}, {"candidates", std::move(cands)}});
    }
    json out{{"db_id", score.db_id},
             {"coverage", score.coverage},
             {"connectivity", score.connectivity},
             {"total", score.total},
             {"semantic", score.semantic},
             {"phrases", std::move(phrases)}};
    if (score.witness) {
        json assignment = json::object();
        for (const auto& [phrase, cand] : score.witness->assignment)
            assignment[phrase] = cand.table + "." + cand.column;
        out["witness"] = json{{"assignment", std::move(assignment)},
                              {"tables", score.witness->tables},
                              {"connected_tables", score.witness->connected_tables}};
    }
    if (!score.error.empty()) out["error"] = score.error;
    return out;
}

RerankOutput modular_rerank(const QuerySample& query, const RankedList& candidates,
                            const std::map<std::string, const DatabaseSchema*>& schemas,
                            JoinGraphCache& graphs, ReasonerProvider& reasoner,
                            const PromptSet& prompts, EmbeddingProvider& embedder,
                            const RerankConfig& config, const DecodingParams& params, int retries,
                            int parallelism) {
    config.validate();
    if (candidates.items.empty()) throw ValidationError("modular_rerank: empty candidate list");

    auto score_db = [&](std::size_t i) {
        const std::string& db_id = candidates.items[i].db_id;
        RoutingScore score;
        score.db_id = db_id;
        auto it = schemas.find(db_id);
        if (it == schemas.end() || !it->second) {
            score.error = "schema for candidate '" + db_id + "' unavailable";
            return score;
        }
        const DatabaseSchema& schema = *it->second;
        try {
            score.mappings = map_query_phrases(query.text, schema, reasoner, prompts, params,
                                               retries);
            const int total_mappings = static_cast<int>(score.mappings.size());
            if (total_mappings == 0) {
                if (config.zero_phrase_policy == ZeroPhrasePolicy::neutral) {
                    score.coverage = 1.0;
                    score.connectivity = 1;
                } else {
                    score.coverage = 0.0;
                    score.connectivity = 0;
                }
                score.total = total_score(score.coverage, score.connectivity);
                score.semantic = 0.0;
                return score;
            }
            int na = 0;
            for (const PhraseMapping& m : score.mappings)
                if (m.is_unmapped()) ++na;
            score.coverage = coverage_score(CoverageInput{total_mappings, na, config.n});
            const SchemaGraph& graph = graphs.get(schema);
            auto conn = connectivity_score(score.mappings, graph, schema, config);
            score.connectivity = conn.score;
            score.witness = std::move(conn.witness);
            score.total = total_score(score.coverage, score.connectivity);
            score.semantic =
                semantic_score(score.mappings, schema, embedder, config.semantic_per_phrase_max);
        } catch (const Error& e) {
            logging::warn("scoring failed for db '" + db_id + "': " + e.what());
            score = RoutingScore{};
            score.db_id = db_id;
            score.error = e.what();
        }
        return score;
    };

    auto scores =
        parallel_map<RoutingScore>(candidates.items.size(), parallelism, score_db);

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a].total != scores[b].total) return scores[a].total > scores[b].total;
        if (scores[a].semantic != scores[b].semantic) return scores[a].semantic > scores[b].semantic;
        return scores[a].db_id < scores[b].db_id;
    });

    RerankOutput out;
    out.ranking.query_id = query.query_id;
    out.ranking.stage = Stage::modular_rerank;
    for (std::size_t idx : order) {
        out.ranking.items.push_back(RankedItem{scores[idx].db_id, scores[idx].total});
        out.scores.push_back(std::move(scores[idx]));
    }
    return out;
}

} // namespace dbroute
