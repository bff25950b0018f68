#pragma once

#include "dbroute/index.hpp"
#include "dbroute/join_graph.hpp"
#include "dbroute/prompts.hpp"
#include "dbroute/schema.hpp"

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace dbroute {

struct QuerySample;

struct DecodingParams {
    double temperature = 0.0;
    int max_tokens = 2048;
};

// Behavioral contract for text-completion back-ends.
class ReasonerProvider {
public:
    virtual ~ReasonerProvider() = default;
    virtual std::string complete(const std::string& prompt, const DecodingParams& params) = 0;
    virtual std::string model_id() const = 0;
};

// Deterministic scriptable mock. A rule fires when all of its needles occur
// in the prompt; its responses are served in order, the last one repeating.
// Rules are checked in registration order. With no matching rule the default
// response is served; without one, complete() throws ProviderError.
class ScriptedReasoner : public ReasonerProvider {
public:
    explicit ScriptedReasoner(std::string model_id = "scripted-reasoner");

    void add_rule(std::vector<std::string> needles, std::string response);
    void add_rule(std::vector<std::string> needles, std::vector<std::string> responses);
    void set_default_response(std::string response);

    std::string complete(const std::string& prompt, const DecodingParams& params) override;
    std::string model_id() const override { return model_id_; }
    std::size_t call_count() const { return calls_.load(); }

private:
    struct Rule {
        std::vector<std::string> needles;
        std::vector<std::string> responses;
        std::size_t served = 0;
    };
    std::string model_id_;
    std::vector<Rule> rules_;
    std::optional<std::string> default_response_;
    std::atomic<std::size_t> calls_{0};
    std::mutex mutex_;
};

// Append-only JSON-lines store of {prompt_sha256, model_id, response}.
class TranscriptStore {
public:
    // In-memory store (no backing file).
    TranscriptStore() = default;
    // Opens or creates `path`; existing lines are loaded for lookup.
    explicit TranscriptStore(std::filesystem::path path);

    std::optional<std::string> lookup(const std::string& prompt_sha256) const;
    void append(const std::string& prompt_sha256, const std::string& model_id,
                const std::string& response);
    std::size_t size() const;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    mutable std::mutex mutex_;
    std::map<std::string, std::string> entries_;
};

enum class TranscriptMode { record, replay };

// Wraps a provider with a transcript. In record mode, unseen prompts go to
// the inner provider and the pair is persisted; repeated prompts replay. In
// replay mode a missing recording is a hard error and no live call is made.
class RecordReplayReasoner : public ReasonerProvider {
public:
    RecordReplayReasoner(std::shared_ptr<ReasonerProvider> inner,
                         std::shared_ptr<TranscriptStore> store, TranscriptMode mode);

    std::string complete(const std::string& prompt, const DecodingParams& params) override;
    std::string model_id() const override;
    std::size_t live_calls() const { return live_calls_.load(); }

private:
    std::shared_ptr<ReasonerProvider> inner_; // may be null in replay mode
    std::shared_ptr<TranscriptStore> store_;
    TranscriptMode mode_;
    std::atomic<std::size_t> live_calls_{0};
};

// HTTP client for a text-completion endpoint.
// Request:  POST endpoint {"model", "prompt", "temperature", "max_tokens"}
// Response: {"text": ...} | {"choices":[{"text": ...}]} |
//           {"choices":[{"message":{"content": ...}}]}
struct HttpReasonerConfig {
    std::string endpoint;
    std::string model;
    std::string auth_env;
    int timeout_s = 60;
    int retries = 2;
};

class HttpReasoner : public ReasonerProvider {
public:
    explicit HttpReasoner(HttpReasonerConfig config);
    std::string complete(const std::string& prompt, const DecodingParams& params) override;
    std::string model_id() const override { return config_.model; }

private:
    HttpReasonerConfig config_;
    std::string base_url_;
    std::string path_;
};

// ---------------------------------------------------------------------------
// Prompted tasks
// ---------------------------------------------------------------------------

struct PhraseCandidate {
    enum class Kind { column, value };

    bool not_mapped = false; // sentinel: phrase matched nothing
    std::string table;       // resolved original table name
    std::string column;      // resolved original column name
    Kind kind = Kind::column;

    static PhraseCandidate na() { return PhraseCandidate{true, "", "", Kind::column}; }
    bool operator==(const PhraseCandidate&) const = default;
};

// One extracted query span with its candidate schema targets. An unmapped
// phrase carries the single NA sentinel candidate.
struct PhraseMapping {
    std::string phrase;
    std::vector<PhraseCandidate> candidates;

    bool is_unmapped() const {
        return candidates.size() == 1 && candidates.front().not_mapped;
    }
    std::vector<PhraseCandidate> resolved_candidates() const;
};

struct DirectRerankResult {
    std::string query_id;
    std::vector<std::string> top3; // exactly min(3, |candidates|) distinct ids
};

// Response parsers; total over arbitrary text (validated result or typed
// error, never a crash). Exposed for tests.
std::map<int, std::set<int>> parse_adjacency_response(const std::string& response);
struct RawMappingLine {
    std::string phrase;
    std::string table;
    std::string column;
    PhraseCandidate::Kind kind = PhraseCandidate::Kind::column;
    bool na = false;
};
std::vector<RawMappingLine> parse_mapping_response(const std::string& response);
std::vector<std::string> parse_rerank_response(const std::string& response,
                                               const std::string& expected_id);

// Prompts the provider for the joinability adjacency of `schema`, parses and
// symmetrizes the response, and validates it against the table count.
// Format violations are retried up to `retries` attempts with a one-line
// reminder appended.
SchemaGraph infer_join_adjacency(const DatabaseSchema& schema, ReasonerProvider& provider,
                                 const PromptSet& prompts, const DecodingParams& params = {},
                                 int retries = 3);

// Prompts for query span -> schema entity mappings against one database.
// Spans absent from the query and candidates naming unknown columns are
// dropped with a warning; a phrase left with no candidates becomes NA.
std::vector<PhraseMapping> map_query_phrases(const std::string& query,
                                             const DatabaseSchema& schema,
                                             ReasonerProvider& provider, const PromptSet& prompts,
                                             const DecodingParams& params = {}, int retries = 3);

// Single-prompt re-ranking of the top-k candidates down to 3 (fewer when the
// candidate list is smaller). Validates distinctness and membership.
DirectRerankResult direct_rerank(const QuerySample& query, const RankedList& candidates,
                                 const std::vector<const DatabaseSchema*>& schemas,
                                 ReasonerProvider& provider, const PromptSet& prompts,
                                 const DecodingParams& params = {}, int retries = 3);

// Join-graph construction strategy for the scoring pipeline.
enum class GraphSource { keys, llm, llm_with_key_fallback };

GraphSource graph_source_from_name(const std::string& name);
std::string graph_source_name(GraphSource source);

// Memoizes one SchemaGraph per db ("executed just once for each DB").
class JoinGraphCache {
public:
    JoinGraphCache(GraphSource source, bool name_heuristic,
                   std::shared_ptr<ReasonerProvider> provider, PromptSet prompts,
                   DecodingParams params = {}, int retries = 3);

    const SchemaGraph& get(const DatabaseSchema& schema);
    std::size_t build_count() const { return builds_.load(); }

private:
    GraphSource source_;
    bool name_heuristic_;
    std::shared_ptr<ReasonerProvider> provider_;
    PromptSet prompts_;
    DecodingParams params_;
    int retries_;
    std::mutex mutex_;
    std::map<std::string, SchemaGraph> cache_;
    std::atomic<std::size_t> builds_{0};
};

} // namespace dbroute
