#pragma once

#include "dbroute/embedding.hpp"
#include "dbroute/schema.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dbroute {

enum class Stage { retrieval, direct_rerank, modular_rerank };

std::string stage_name(Stage stage);
Stage stage_from_name(const std::string& name);

struct RankedItem {
    std::string db_id;
    double score = 0.0;
};

// Ordered ranking of databases for one query. Scores are non-increasing and
// db_ids distinct.
struct RankedList {
    std::string query_id;
    Stage stage = Stage::retrieval;
    std::vector<RankedItem> items;

    // 1-based rank of db_id; nullopt when absent.
    std::optional<std::size_t> rank_of(const std::string& db_id) const;
    bool contains(const std::string& db_id) const { return rank_of(db_id).has_value(); }
};

// Throws ValidationError if scores increase or db_ids repeat.
void validate_ranked_list(const RankedList& list);

struct IndexEntry {
    std::string document;
    EmbeddingVector vector;
};

struct RepositoryIndex {
    std::string model_id;
    std::size_t dimension = 0;
    bool include_metadata = false;
    std::string document_style = "full";
    std::map<std::string, IndexEntry> entries; // db_id -> entry, sorted

    bool operator==(const RepositoryIndex&) const = default;
};

// The document fed to the embedder for one database: the selected schema
// serialization plus the evidence block when include_metadata is set.
std::string document_for_db(const DatabaseSchema& schema, bool include_metadata,
                            const std::string& style);

// Serializes and embeds every repository database. max_chars tail-truncates
// over-long documents (0 = no limit); parallelism bounds concurrent batches.
RepositoryIndex build_index(const std::vector<DatabaseSchema>& repo, EmbeddingProvider& provider,
                            bool include_metadata, const std::string& style = "full",
                            std::size_t max_chars = 0, int parallelism = 1, int batch_size = 16);

void save_index(const RepositoryIndex& index, const std::filesystem::path& path);
RepositoryIndex load_index(const std::filesystem::path& path);

// All repository databases ordered by cosine similarity to the query
// embedding, descending; equal scores break by ascending db_id. Throws
// ProviderError when the provider's model does not match the index.
RankedList rank_by_similarity(const std::string& query_text, const RepositoryIndex& index,
                              EmbeddingProvider& provider);

// First min(k, size) items, order preserved. k >= 1.
RankedList top_k(const RankedList& list, std::size_t k);

} // namespace dbroute
