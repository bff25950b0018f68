#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace dbroute {

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dimension() const { return values.size(); }
    bool operator==(const EmbeddingVector&) const = default;
};

// dot(a,b) / (|a| * |b|). Throws ValidationError on dimension mismatch or a
// zero-norm / non-finite vector.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

// Behavioral contract for embedding back-ends. Implementations must be
// deterministic within one session: the same text maps to the same vector.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) = 0;
    virtual std::string model_id() const = 0;
    virtual std::size_t dimension() const = 0;

    EmbeddingVector embed(const std::string& text);
};

// Deterministic local test double: hashed bag of lowercase alphanumeric
// tokens, signed by a hash bit, projected to a fixed dimension and
// L2-normalized. Texts with no tokens map to the first basis vector.
class HashedBagEmbedder : public EmbeddingProvider {
public:
    explicit HashedBagEmbedder(std::size_t dim = 256);
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override;
    std::string model_id() const override { return model_id_; }
    std::size_t dimension() const override { return dim_; }

    EmbeddingVector embed_one(const std::string& text) const;

private:
    std::size_t dim_;
    std::string model_id_;
};

// Content-addressed on-disk cache keyed by (model_id, sha256(text)).
// Safe under concurrent read/write; repeated runs reuse persisted vectors.
class DiskCachedEmbedder : public EmbeddingProvider {
public:
    DiskCachedEmbedder(std::shared_ptr<EmbeddingProvider> inner, std::filesystem::path cache_dir);
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override;
    std::string model_id() const override { return inner_->model_id(); }
    std::size_t dimension() const override { return inner_->dimension(); }

    std::size_t miss_count() const; // texts that reached the inner provider

private:
    std::filesystem::path entry_path(const std::string& key) const;

    std::shared_ptr<EmbeddingProvider> inner_;
    std::filesystem::path dir_;
    mutable std::mutex mutex_;
    std::map<std::string, EmbeddingVector> memory_;
    std::size_t misses_ = 0;
};

// HTTP client for a batch embedding endpoint.
// Request:  POST endpoint  {"model": ..., "input": [texts...]}
// Response: {"data": [{"embedding": [...]}, ...]} or {"embeddings": [[...]]}.
// Transport failures, 429 and 5xx are retryable; other 4xx are fatal.
struct HttpEmbedderConfig {
    std::string endpoint;             // e.g. http://localhost:8080/v1/embeddings
    std::string model;
    std::string auth_env;             // env var holding the bearer token
    int batch_size = 16;
    int timeout_s = 30;
    int retries = 2;                  // extra attempts on retryable failures
    std::size_t dimension_hint = 0;   // 0 = learn from the first response
};

class HttpEmbedder : public EmbeddingProvider {
public:
    explicit HttpEmbedder(HttpEmbedderConfig config);
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override;
    std::string model_id() const override { return config_.model; }
    std::size_t dimension() const override;

private:
    std::vector<EmbeddingVector> post_batch(const std::vector<std::string>& texts);

    HttpEmbedderConfig config_;
    std::string base_url_;
    std::string path_;
    mutable std::mutex mutex_;
    std::size_t dimension_ = 0;
};

// Keeps the head of an over-long document, logging a warning. max_chars == 0
// disables truncation.
std::string truncate_for_embedding(const std::string& text, std::size_t max_chars);

} // namespace dbroute
