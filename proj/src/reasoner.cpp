#include "dbroute/reasoner.hpp"

#include "dbroute/errors.hpp"
#include "dbroute/util.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <thread>

namespace dbroute {

using nlohmann::json;

// ---------------------------------------------------------------------------
// ScriptedReasoner
// ---------------------------------------------------------------------------

ScriptedReasoner::ScriptedReasoner(std::string model_id) : model_id_(std::move(model_id)) {}

void ScriptedReasoner::add_rule(std::vector<std::string> needles, std::string response) {
    add_rule(std::move(needles), std::vector<std::string>{std::move(response)});
}

void ScriptedReasoner::add_rule(std::vector<std::string> needles,
                                std::vector<std::string> responses) {
    if (responses.empty()) throw ValidationError("ScriptedReasoner rule needs >= 1 response");
    std::lock_guard<std::mutex> lock(mutex_);
    rules_.push_back(Rule{std::move(needles), std::move(responses), 0});
}

void ScriptedReasoner::set_default_response(std::string response) {
    std::lock_guard<std::mutex> lock(mutex_);
    default_response_ = std::move(response);
}

std::string ScriptedReasoner::complete(const std::string& prompt, const DecodingParams&) {
    calls_.fetch_add(1);
    std::lock_guard<std::mutex> lock(mutex_);
    for (Rule& rule : rules_) {
        bool all = true;
        for (const std::string& needle : rule.needles) {
            if (prompt.find(needle) == std::string::npos) {
                all = false;
                break;
            }
        }
        if (!all) continue;
        const std::size_t idx = std::min(rule.served, rule.responses.size() - 1);
        ++rule.served;
        return rule.responses[idx];
    }
    if (default_response_) return *default_response_;
    throw ProviderError("scripted reasoner has no rule matching prompt: " +
                            prompt.substr(0, 120) + "...",
                        false);
}

// ---------------------------------------------------------------------------
// TranscriptStore
// ---------------------------------------------------------------------------

TranscriptStore::TranscriptStore(std::filesystem::path path) : path_(std::move(path)) {
    if (std::filesystem::exists(path_)) {
        const std::string text = read_text_file(path_);
        std::size_t lineno = 0;
        for (const std::string& line : split_lines(text)) {
            ++lineno;
            if (trim(line).empty()) continue;
            try {
                const json doc = json::parse(line);
                entries_[doc.at("prompt_sha256").get<std::string>()] =
                    doc.at("response").get<std::string>();
            } catch (const std::exception& e) {
                throw ParseError("transcript " + path_.string() + ": bad line " +
                                 std::to_string(lineno) + ": " + e.what());
            }
        }
    } else {
        if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    }
}

std::optional<std::string> TranscriptStore::lookup(const std::string& prompt_sha256) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = entries_.find(prompt_sha256);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void TranscriptStore::append(const std::string& prompt_sha256, const std::string& model_id,
                             const std::string& response) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = entries_.emplace(prompt_sha256, response);
    if (!inserted) return; // already recorded
    if (path_.empty()) return;
    const json doc{
        {"prompt_sha256", prompt_sha256}, {"model_id", model_id}, {"response", response}};
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw IoError("cannot append to transcript: " + path_.string());
    out << doc.dump() << "\n";
    out.flush();
    if (!out) throw IoError("transcript write failed: " + path_.string());
}

std::size_t TranscriptStore::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.size();
}

// ---------------------------------------------------------------------------
// RecordReplayReasoner
// ---------------------------------------------------------------------------

RecordReplayReasoner::RecordReplayReasoner(std::shared_ptr<ReasonerProvider> inner,
                                           std::shared_ptr<TranscriptStore> store,
                                           TranscriptMode mode)
    : inner_(std::move(inner)), store_(std::move(store)), mode_(mode) {
    if (!store_) throw ValidationError("RecordReplayReasoner: null transcript store");
    if (mode_ == TranscriptMode::record && !inner_)
        throw ValidationError("RecordReplayReasoner: record mode needs an inner provider");
}

std::string RecordReplayReasoner::model_id() const {
    return inner_ ? inner_->model_id() : "replay";
}

std::string RecordReplayReasoner::complete(const std::string& prompt,
                                           const DecodingParams& params) {
    const std::string key = sha256_hex(prompt);
    if (auto hit = store_->lookup(key)) return *hit;
    if (mode_ == TranscriptMode::replay)
        throw ProviderError("replay transcript has no recording for prompt sha256 " + key, false);
    const std::string response = inner_->complete(prompt, params);
    live_calls_.fetch_add(1);
    store_->append(key, inner_->model_id(), response);
    return response;
}

// ---------------------------------------------------------------------------
// HttpReasoner
// ---------------------------------------------------------------------------

namespace {

std::pair<std::string, std::string> split_endpoint_url(const std::string& endpoint) {
    const auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos)
        throw ValidationError("endpoint must start with http:// or https://: " + endpoint);
    const auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

} // namespace

HttpReasoner::HttpReasoner(HttpReasonerConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw ValidationError("HttpReasoner: endpoint not configured");
    if (config_.model.empty()) throw ValidationError("HttpReasoner: model not configured");
    std::tie(base_url_, path_) = split_endpoint_url(config_.endpoint);
}

std::string HttpReasoner::complete(const std::string& prompt, const DecodingParams& params) {
    int attempt = 0;
    for (;;) {
        try {
            httplib::Client client(base_url_);
            client.set_connection_timeout(config_.timeout_s, 0);
            client.set_read_timeout(config_.timeout_s, 0);
            httplib::Headers headers;
            if (!config_.auth_env.empty()) {
                if (const char* token = std::getenv(config_.auth_env.c_str()); token && *token)
                    headers.emplace("Authorization", std::string("Bearer ") + token);
            }
            const json body{{"model", config_.model},
                            {"prompt", prompt},
                            {"temperature", params.temperature},
                            {"max_tokens", params.max_tokens}};
            auto res = client.Post(path_, headers, body.dump(), "application/json");
            if (!res)
                throw ProviderError("completion endpoint unreachable: " + base_url_, true);
            if (res->status != 200)
                throw ProviderError("completion endpoint returned HTTP " +
                                        std::to_string(res->status) + ": " +
                                        res->body.substr(0, 200),
                                    res->status == 429 || res->status >= 500);
            json doc;
            try {
                doc = json::parse(res->body);
            } catch (const json::parse_error& e) {
                throw ProviderError(std::string("completion response is not JSON: ") + e.what(),
                                    false);
            }
            if (doc.contains("text")) return doc["text"].get<std::string>();
            if (doc.contains("choices") && doc["choices"].is_array() && !doc["choices"].empty()) {
                const json& choice = doc["choices"][0];
                if (choice.contains("text")) return choice["text"].get<std::string>();
                if (choice.contains("message") && choice["message"].contains("content"))
                    return choice["message"]["content"].get<std::string>();
            }
            throw ProviderError("completion response has no text field", false);
        } catch (const ProviderError& e) {
            if (!e.retryable() || attempt >= config_.retries) throw;
            ++attempt;
            logging::warn(std::string("completion request failed, retrying: ") + e.what());
            std::this_thread::sleep_for(std::chrono::milliseconds(100 * attempt));
        }
    }
}

// ---------------------------------------------------------------------------
// JoinGraphCache
// ---------------------------------------------------------------------------

GraphSource graph_source_from_name(const std::string& name) {
    if (name == "keys") return GraphSource::keys;
    if (name == "llm") return GraphSource::llm;
    if (name == "llm-with-key-fallback" || name == "llm_with_key_fallback")
        return GraphSource::llm_with_key_fallback;
    throw ValidationError("unknown graph source '" + name +
                          "' (expected keys|llm|llm-with-key-fallback)");
}

std::string graph_source_name(GraphSource source) {
    switch (source) {
        case GraphSource::keys: return "keys";
        case GraphSource::llm: return "llm";
        case GraphSource::llm_with_key_fallback: return "llm-with-key-fallback";
    }
    return "keys";
}

JoinGraphCache::JoinGraphCache(GraphSource source, bool name_heuristic,
                               std::shared_ptr<ReasonerProvider> provider, PromptSet prompts,
                               DecodingParams params, int retries)
    : source_(source),
      name_heuristic_(name_heuristic),
      provider_(std::move(provider)),
      prompts_(std::move(prompts)),
      params_(params),
      retries_(retries) {
    if (source_ != GraphSource::keys && !provider_)
        throw ValidationError("JoinGraphCache: LLM graph source needs a reasoner provider");
}

const SchemaGraph& JoinGraphCache::get(const DatabaseSchema& schema) {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(schema.db_id);
        if (it != cache_.end()) return it->second;
    }
    SchemaGraph graph;
    switch (source_) {
        case GraphSource::keys:
            graph = build_join_graph_from_keys(schema, name_heuristic_);
            break;
        case GraphSource::llm:
            graph = infer_join_adjacency(schema, *provider_, prompts_, params_, retries_);
            break;
        case GraphSource::llm_with_key_fallback:
            try {
                graph = infer_join_adjacency(schema, *provider_, prompts_, params_, retries_);
            } catch (const Error& e) {
                logging::warn("LLM join graph failed for '" + schema.db_id +
                              "', falling back to declared keys: " + e.what());
                graph = build_join_graph_from_keys(schema, name_heuristic_);
            }
            break;
    }
    builds_.fetch_add(1);
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = cache_.emplace(schema.db_id, std::move(graph));
    return it->second;
}

} // namespace dbroute
