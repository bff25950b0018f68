#pragma once

#include "dbroute/corpus.hpp"
#include "dbroute/embedding.hpp"
#include "dbroute/eval.hpp"
#include "dbroute/index.hpp"
#include "dbroute/prompts.hpp"
#include "dbroute/reasoner.hpp"
#include "dbroute/scoring.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dbroute {

struct EmbedderConfig {
    std::string kind = "mock"; // mock | http
    std::size_t dimension = 256;
    std::string endpoint;
    std::string model;
    std::string auth_env = "DBROUTE_EMBED_TOKEN";
    int batch_size = 16;
    int timeout_s = 30;
    int retries = 2;
    std::size_t max_chars = 0; // document truncation limit; 0 = none
};

struct ReasonerSetup {
    std::string kind = "http"; // http | none
    std::string endpoint;
    std::string model;
    std::string auth_env = "DBROUTE_LLM_TOKEN";
    double temperature = 0.0;
    int max_tokens = 2048;
    int timeout_s = 60;
    int retries = 3; // format-violation retries
};

struct PipelineConfig {
    // paths
    std::string repository_path;
    std::string questions_path;
    std::string metadata_dir;
    std::string index_path;
    std::string cache_dir;
    std::string prompts_dir;
    std::string transcript_path;
    std::string transcript_mode = "record"; // record | replay

    EmbedderConfig embedder;
    ReasonerSetup reasoner;
    RerankConfig rerank;
    std::string graph_source = "keys"; // keys | llm | llm-with-key-fallback
    bool name_heuristic = true;
    std::string mode = "retrieval"; // retrieval | direct-rerank | modular-rerank
    std::uint64_t seed = 0;
    int parallelism = 1;
    bool include_metadata = true;
    std::string document_style = "full";
    bool oracle_injection = false;

    static PipelineConfig defaults();
    // Environment overrides (between defaults and config file):
    // DBROUTE_EMBED_ENDPOINT/MODEL, DBROUTE_LLM_ENDPOINT/MODEL,
    // DBROUTE_CACHE_DIR, DBROUTE_SEED, DBROUTE_PARALLELISM.
    void apply_env();
    void merge_json(const nlohmann::json& doc);
    // Provenance echo for reports. Never contains secrets (auth token env
    // variable *names* only).
    nlohmann::json to_json() const;
    void validate() const;
};

std::shared_ptr<EmbeddingProvider> make_embedder(const PipelineConfig& config);
// Returns null when kind == "none" and no transcript replay is configured.
std::shared_ptr<ReasonerProvider> make_reasoner(const PipelineConfig& config);

// Everything a routing run needs, wired once from the config.
struct PipelineContext {
    PipelineConfig config;
    std::vector<DatabaseSchema> repository;
    std::map<std::string, const DatabaseSchema*> schema_by_id;
    RepositoryIndex index;
    std::shared_ptr<EmbeddingProvider> embedder;
    std::shared_ptr<ReasonerProvider> reasoner;
    PromptSet prompts;
    std::unique_ptr<JoinGraphCache> graphs;

    DecodingParams decoding() const {
        return DecodingParams{config.reasoner.temperature, config.reasoner.max_tokens};
    }
};

// Loads repository + index from the config paths and constructs providers.
PipelineContext make_context(PipelineConfig config);
// As above but with repository and index supplied in memory.
PipelineContext make_context(PipelineConfig config, std::vector<DatabaseSchema> repository,
                             RepositoryIndex index);

struct RouteResult {
    RankedList retrieval;           // full-repository similarity ranking
    RankedList final_ranking;       // per configured mode
    std::optional<RerankOutput> modular; // present in modular-rerank mode
    std::optional<DirectRerankResult> direct;
    bool candidate_miss = false;    // gold absent from the re-rank candidates
    bool oracle_injected = false;
};

// Routes one query through the configured mode. `sample.gold_db_id` may be
// empty (ad-hoc questions); candidate_miss is then always false.
RouteResult route_query(PipelineContext& ctx, const QuerySample& sample);

nlohmann::json route_result_to_json(const RouteResult& result);

// Evaluates a query set; per-query work fans out under config.parallelism.
EvalReport evaluate_queries(PipelineContext& ctx, const std::vector<QuerySample>& samples);

struct AblationResult {
    EvalReport with_metadata;
    EvalReport without_metadata;
    nlohmann::json deltas;
};

// Runs the identical pipeline twice, toggling include_metadata for the
// repository index, and reports both plus aggregate deltas.
AblationResult ablate_metadata(const PipelineConfig& config,
                               const std::vector<DatabaseSchema>& repository,
                               const std::vector<QuerySample>& samples);

} // namespace dbroute
