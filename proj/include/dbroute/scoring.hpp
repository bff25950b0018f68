#pragma once

#include "dbroute/embedding.hpp"
#include "dbroute/index.hpp"
#include "dbroute/join_graph.hpp"
#include "dbroute/reasoner.hpp"
#include "dbroute/schema.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace dbroute {

struct CoverageInput {
    int total_mappings = 0; // distinct extracted phrases
    int na_mappings = 0;    // phrases whose only candidate is NA
    double n = 1.0;         // penalty hyperparameter, >= 1
};

// e^(-n * x) with x = na / total. Strictly decreasing in na; 1.0 iff na == 0.
// Throws ValidationError when total_mappings == 0 or ranges are violated.
double coverage_score(const CoverageInput& input);

enum class ZeroPhrasePolicy { invalid, neutral };

ZeroPhrasePolicy zero_phrase_policy_from_name(const std::string& name);
std::string zero_phrase_policy_name(ZeroPhrasePolicy policy);

struct RerankConfig {
    double n = 1.0;                 // coverage penalty, >= 1
    int k = 5;                      // candidate count fed to re-ranking
    bool allow_steiner_tables = false;
    ZeroPhrasePolicy zero_phrase_policy = ZeroPhrasePolicy::invalid;
    long max_assignments = 10000;   // enumeration cap before relaxed fallback
    bool semantic_per_phrase_max = false;

    void validate() const; // throws ValidationError on k < 1 or n < 1
};

// Proof that one choice of schema target per mapped phrase is connected.
struct ConnectivityWitness {
    std::vector<std::pair<std::string, PhraseCandidate>> assignment;
    std::set<int> tables;           // tables named by the assignment
    std::set<int> connected_tables; // plus any intermediates; induced-connected
};

struct ConnectivityResult {
    int score = 0; // 0 or 1
    std::optional<ConnectivityWitness> witness;
    bool capped = false; // enumeration hit max_assignments; relaxed check used
};

// 1 iff some one-candidate-per-phrase assignment over phrases with resolved
// candidates places all its tables in a connected subgraph (strict induced
// mode, or reachability through unmapped tables when allow_steiner_tables).
// No resolved phrases: vacuously 1, no witness.
ConnectivityResult connectivity_score(const std::vector<PhraseMapping>& mappings,
                                      const SchemaGraph& graph, const DatabaseSchema& schema,
                                      const RerankConfig& config);

// coverage * connectivity; 0 invalidates the database outright.
double total_score(double coverage, int connectivity);

// Mean cosine similarity between each resolved (phrase, candidate) pair's
// phrase embedding and the candidate's column document. per_phrase_max
// averages each phrase's best candidate instead of all pairs. No resolved
// pairs: 0.
double semantic_score(const std::vector<PhraseMapping>& mappings, const DatabaseSchema& schema,
                      EmbeddingProvider& embedder, bool per_phrase_max = false);

// Full per-database scoring record kept for explainability.
struct RoutingScore {
    std::string db_id;
    double coverage = 0.0;
    int connectivity = 0;
    double total = 0.0;
    double semantic = 0.0;
    std::optional<ConnectivityWitness> witness;
    std::vector<PhraseMapping> mappings;
    std::string error; // non-empty when the mapping step hard-failed
};

nlohmann::json routing_score_to_json(const RoutingScore& score);

struct RerankOutput {
    RankedList ranking;               // stage = modular_rerank, score = total
    std::vector<RoutingScore> scores; // aligned with ranking.items
};

// Scores every candidate database (phrase mapping, coverage, connectivity,
// total, semantic) and orders by total desc, semantic desc, db_id asc.
// A candidate whose mapping step fails scores 0 with an error annotation
// instead of aborting the query.
RerankOutput modular_rerank(const QuerySample& query, const RankedList& candidates,
                            const std::map<std::string, const DatabaseSchema*>& schemas,
                            JoinGraphCache& graphs, ReasonerProvider& reasoner,
                            const PromptSet& prompts, EmbeddingProvider& embedder,
                            const RerankConfig& config, const DecodingParams& params = {},
                            int retries = 3, int parallelism = 1);

} // namespace dbroute
