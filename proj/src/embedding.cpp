#include "dbroute/embedding.hpp"

#include "dbroute/errors.hpp"
#include "dbroute/util.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cctype>
#include <chrono>
#include <cmath>
#include <thread>

namespace dbroute {

using nlohmann::json;

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dimension() != b.dimension())
        throw ValidationError("cosine_similarity: dimension mismatch (" +
                              std::to_string(a.dimension()) + " vs " +
                              std::to_string(b.dimension()) + ")");
    if (a.dimension() == 0) throw ValidationError("cosine_similarity: empty vectors");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double x = a.values[i];
        const double y = b.values[i];
        if (!std::isfinite(x) || !std::isfinite(y))
            throw ValidationError("cosine_similarity: non-finite component");
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (na == 0.0 || nb == 0.0) throw ValidationError("cosine_similarity: zero-norm vector");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

EmbeddingVector EmbeddingProvider::embed(const std::string& text) {
    auto vecs = embed_batch({text});
    if (vecs.size() != 1) throw ProviderError("provider returned wrong batch size", false);
    return std::move(vecs[0]);
}

// ---------------------------------------------------------------------------
// HashedBagEmbedder
// ---------------------------------------------------------------------------

HashedBagEmbedder::HashedBagEmbedder(std::size_t dim) : dim_(dim) {
    if (dim_ == 0) throw ValidationError("HashedBagEmbedder: dimension must be positive");
    model_id_ = "hashed-bag-v1-d" + std::to_string(dim_);
}

EmbeddingVector HashedBagEmbedder::embed_one(const std::string& text) const {
    EmbeddingVector vec;
    vec.values.assign(dim_, 0.0);
    std::string token;
    bool any = false;
    auto flush = [&]() {
        if (token.empty()) return;
        const std::uint64_t h = fnv1a64(token);
        const std::size_t idx = static_cast<std::size_t>(h % dim_);
        const double sign = ((h >> 32) & 1ULL) ? 1.0 : -1.0;
        vec.values[idx] += sign;
        any = true;
        token.clear();
    };
    for (unsigned char c : text) {
        if (std::isalnum(c)) token.push_back(static_cast<char>(std::tolower(c)));
        else flush();
    }
    flush();
    double norm = 0.0;
    for (double v : vec.values) norm += v * v;
    if (!any || norm == 0.0) {
        // tokenless text (or full sign cancellation): fixed fallback direction
        vec.values.assign(dim_, 0.0);
        vec.values[0] = 1.0;
        return vec;
    }
    norm = std::sqrt(norm);
    for (double& v : vec.values) v /= norm;
    return vec;
}

std::vector<EmbeddingVector> HashedBagEmbedder::embed_batch(
    const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const std::string& t : texts) out.push_back(embed_one(t));
    return out;
}

// ---------------------------------------------------------------------------
// DiskCachedEmbedder
// ---------------------------------------------------------------------------

namespace {

std::string sanitize_for_path(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')
            out.push_back(c);
        else
            out.push_back('_');
    }
    return out.empty() ? "model" : out;
}

} // namespace

DiskCachedEmbedder::DiskCachedEmbedder(std::shared_ptr<EmbeddingProvider> inner,
                                       std::filesystem::path cache_dir)
    : inner_(std::move(inner)), dir_(std::move(cache_dir)) {
    if (!inner_) throw ValidationError("DiskCachedEmbedder: null inner provider");
    std::filesystem::create_directories(dir_ / sanitize_for_path(inner_->model_id()));
}

std::filesystem::path DiskCachedEmbedder::entry_path(const std::string& key) const {
    return dir_ / sanitize_for_path(inner_->model_id()) / (key + ".json");
}

std::vector<EmbeddingVector> DiskCachedEmbedder::embed_batch(
    const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out(texts.size());
    std::vector<std::size_t> missing;
    std::vector<std::string> missing_texts;

    {
        std::lock_guard<std::mutex> lock(mutex_);
        for (std::size_t i = 0; i < texts.size(); ++i) {
            const std::string key = sha256_hex(texts[i]);
            auto mem = memory_.find(key);
            if (mem != memory_.end()) {
                out[i] = mem->second;
                continue;
            }
            const auto path = entry_path(key);
            if (std::filesystem::exists(path)) {
                try {
                    const json doc = json::parse(read_text_file(path));
                    EmbeddingVector vec;
                    vec.values = doc.at("v").get<std::vector<double>>();
                    memory_[key] = vec;
                    out[i] = std::move(vec);
                    continue;
                } catch (const std::exception& e) {
                    logging::warn("embedding cache entry unreadable, re-embedding: " +
                                  path.string() + " (" + e.what() + ")");
                }
            }
            missing.push_back(i);
            missing_texts.push_back(texts[i]);
        }
    }

    if (!missing.empty()) {
        auto fresh = inner_->embed_batch(missing_texts);
        if (fresh.size() != missing_texts.size())
            throw ProviderError("inner provider returned wrong batch size", false);
        std::lock_guard<std::mutex> lock(mutex_);
        misses_ += missing.size();
        for (std::size_t k = 0; k < missing.size(); ++k) {
            const std::string key = sha256_hex(missing_texts[k]);
            memory_[key] = fresh[k];
            const json doc{{"model_id", inner_->model_id()}, {"v", fresh[k].values}};
            write_text_file_atomic(entry_path(key), doc.dump());
            out[missing[k]] = std::move(fresh[k]);
        }
    }
    return out;
}

std::size_t DiskCachedEmbedder::miss_count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return misses_;
}

// ---------------------------------------------------------------------------
// HttpEmbedder
// ---------------------------------------------------------------------------

namespace {

// Splits "http://host:port/some/path" into base URL and path.
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    const auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos)
        throw ValidationError("endpoint must start with http:// or https://: " + endpoint);
    const auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

bool status_retryable(int status) { return status == 429 || (status >= 500 && status < 600); }

} // namespace

HttpEmbedder::HttpEmbedder(HttpEmbedderConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw ValidationError("HttpEmbedder: endpoint not configured");
    if (config_.model.empty()) throw ValidationError("HttpEmbedder: model not configured");
    std::tie(base_url_, path_) = split_endpoint(config_.endpoint);
    dimension_ = config_.dimension_hint;
}

std::size_t HttpEmbedder::dimension() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return dimension_;
}

std::vector<EmbeddingVector> HttpEmbedder::post_batch(const std::vector<std::string>& texts) {
    httplib::Client client(base_url_);
    client.set_connection_timeout(config_.timeout_s, 0);
    client.set_read_timeout(config_.timeout_s, 0);

    httplib::Headers headers;
    if (!config_.auth_env.empty()) {
        if (const char* token = std::getenv(config_.auth_env.c_str()); token && *token)
            headers.emplace("Authorization", std::string("Bearer ") + token);
    }

    const json body{{"model", config_.model}, {"input", texts}};
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res)
        throw ProviderError("embedding endpoint unreachable: " + base_url_, /*retryable=*/true);
    if (res->status != 200)
        throw ProviderError("embedding endpoint returned HTTP " + std::to_string(res->status) +
                                ": " + res->body.substr(0, 200),
                            status_retryable(res->status));

    json doc;
    try {
        doc = json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw ProviderError(std::string("embedding response is not JSON: ") + e.what(), false);
    }

    std::vector<EmbeddingVector> out;
    if (doc.contains("data") && doc["data"].is_array()) {
        for (const auto& item : doc["data"]) {
            EmbeddingVector vec;
            vec.values = item.at("embedding").get<std::vector<double>>();
            out.push_back(std::move(vec));
        }
    } else if (doc.contains("embeddings") && doc["embeddings"].is_array()) {
        for (const auto& item : doc["embeddings"]) {
            EmbeddingVector vec;
            vec.values = item.get<std::vector<double>>();
            out.push_back(std::move(vec));
        }
    } else {
        throw ProviderError("embedding response missing 'data' or 'embeddings'", false);
    }
    if (out.size() != texts.size())
        throw ProviderError("embedding response count mismatch: sent " +
                                std::to_string(texts.size()) + ", got " +
                                std::to_string(out.size()),
                            false);
    return out;
}

std::vector<EmbeddingVector> HttpEmbedder::embed_batch(const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    const std::size_t batch =
        config_.batch_size > 0 ? static_cast<std::size_t>(config_.batch_size) : texts.size();

    for (std::size_t start = 0; start < texts.size(); start += batch) {
        const std::size_t end = std::min(texts.size(), start + batch);
        std::vector<std::string> chunk(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                       texts.begin() + static_cast<std::ptrdiff_t>(end));
        int attempt = 0;
        for (;;) {
            try {
                auto vecs = post_batch(chunk);
                for (auto& v : vecs) {
                    {
                        std::lock_guard<std::mutex> lock(mutex_);
                        if (dimension_ == 0) dimension_ = v.dimension();
                        if (v.dimension() != dimension_)
                            throw ProviderError(
                                "embedding dimension inconsistency: expected " +
                                    std::to_string(dimension_) + ", got " +
                                    std::to_string(v.dimension()),
                                false);
                    }
                    out.push_back(std::move(v));
                }
                break;
            } catch (const ProviderError& e) {
                if (!e.retryable() || attempt >= config_.retries) throw;
                ++attempt;
                logging::warn(std::string("embedding request failed, retrying: ") + e.what());
                std::this_thread::sleep_for(std::chrono::milliseconds(100 * attempt));
            }
        }
    }
    return out;
}

std::string truncate_for_embedding(const std::string& text, std::size_t max_chars) {
    if (max_chars == 0 || text.size() <= max_chars) return text;
    logging::warn("document truncated from " + std::to_string(text.size()) + " to " +
                  std::to_string(max_chars) + " chars before embedding");
    return text.substr(0, max_chars);
}

} // namespace dbroute
