#include "dbroute/index.hpp"

#include "dbroute/errors.hpp"
#include "dbroute/serialize.hpp"
#include "dbroute/util.hpp"

#include <json.hpp>

#include <algorithm>

namespace dbroute {

using nlohmann::json;

std::string stage_name(Stage stage) {
    switch (stage) {
        case Stage::retrieval: return "retrieval";
        case Stage::direct_rerank: return "direct-rerank";
        case Stage::modular_rerank: return "modular-rerank";
    }
    return "retrieval";
}

Stage stage_from_name(const std::string& name) {
    if (name == "retrieval") return Stage::retrieval;
    if (name == "direct-rerank" || name == "direct_rerank") return Stage::direct_rerank;
    if (name == "modular-rerank" || name == "modular_rerank") return Stage::modular_rerank;
    throw ValidationError("unknown stage '" + name +
                          "' (expected retrieval|direct-rerank|modular-rerank)");
}

std::optional<std::size_t> RankedList::rank_of(const std::string& db_id) const {
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].db_id == db_id) return i + 1;
    }
    return std::nullopt;
}

void validate_ranked_list(const RankedList& list) {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < list.items.size(); ++i) {
        if (!seen.insert(list.items[i].db_id).second)
            throw ValidationError("ranked list for query '" + list.query_id +
                                  "' repeats db '" + list.items[i].db_id + "'");
        if (i > 0 && list.items[i].score > list.items[i - 1].score + 1e-12)
            throw ValidationError("ranked list for query '" + list.query_id +
                                  "' has increasing scores at position " + std::to_string(i));
    }
}

std::string document_for_db(const DatabaseSchema& schema, bool include_metadata,
                            const std::string& style) {
    std::string doc = serialize_schema(schema, include_metadata, style);
    if (include_metadata && schema.metadata && !schema.metadata->empty()) {
        doc += evidence_block(*schema.metadata);
    }
    return doc;
}

RepositoryIndex build_index(const std::vector<DatabaseSchema>& repo, EmbeddingProvider& provider,
                            bool include_metadata, const std::string& style,
                            std::size_t max_chars, int parallelism, int batch_size) {
    if (repo.empty()) throw ValidationError("build_index: empty repository");

    RepositoryIndex index;
    index.model_id = provider.model_id();
    index.include_metadata = include_metadata;
    index.document_style = style;

    std::vector<std::string> ids;
    std::vector<std::string> documents;
    for (const DatabaseSchema& schema : repo) {
        if (index.entries.count(schema.db_id))
            throw ValidationError("build_index: duplicate db_id '" + schema.db_id + "'");
        index.entries[schema.db_id] = IndexEntry{}; // placeholder, keeps ids sorted
        ids.push_back(schema.db_id);
        documents.push_back(
            truncate_for_embedding(document_for_db(schema, include_metadata, style), max_chars));
    }

    const std::size_t batch =
        batch_size > 0 ? static_cast<std::size_t>(batch_size) : documents.size();
    const std::size_t n_batches = (documents.size() + batch - 1) / batch;

    auto embed_chunk = [&](std::size_t bi) {
        const std::size_t start = bi * batch;
        const std::size_t end = std::min(documents.size(), start + batch);
        std::vector<std::string> chunk(documents.begin() + static_cast<std::ptrdiff_t>(start),
                                       documents.begin() + static_cast<std::ptrdiff_t>(end));
        return provider.embed_batch(chunk);
    };
    const auto batches =
        parallel_map<std::vector<EmbeddingVector>>(n_batches, parallelism, embed_chunk);

    std::vector<EmbeddingVector> vectors;
    vectors.reserve(documents.size());
    for (const auto& b : batches)
        for (const auto& v : b) vectors.push_back(v);
    if (vectors.size() != documents.size())
        throw ProviderError("provider returned " + std::to_string(vectors.size()) +
                                " vectors for " + std::to_string(documents.size()) + " documents",
                            false);

    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (index.dimension == 0) index.dimension = vectors[i].dimension();
        if (vectors[i].dimension() != index.dimension)
            throw ProviderError("dimension inconsistency across repository embeddings", false);
        index.entries[ids[i]] = IndexEntry{documents[i], std::move(vectors[i])};
    }
    return index;
}

void save_index(const RepositoryIndex& index, const std::filesystem::path& path) {
    json entries = json::object();
    for (const auto& [db_id, entry] : index.entries) {
        entries[db_id] = json{{"document", entry.document}, {"vector", entry.vector.values}};
    }
    const json doc{{"version", 1},
                   {"model_id", index.model_id},
                   {"dimension", index.dimension},
                   {"include_metadata", index.include_metadata},
                   {"document_style", index.document_style},
                   {"entries", std::move(entries)}};
    write_text_file_atomic(path, doc.dump(2) + "\n");
}

RepositoryIndex load_index(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError("index file " + path.string() + ": " + e.what());
    }
    if (doc.value("version", 0) != 1)
        throw ValidationError("index file " + path.string() + ": unsupported version");
    RepositoryIndex index;
    index.model_id = doc.at("model_id").get<std::string>();
    index.dimension = doc.at("dimension").get<std::size_t>();
    index.include_metadata = doc.value("include_metadata", false);
    index.document_style = doc.value("document_style", "full");
    for (const auto& [db_id, ej] : doc.at("entries").items()) {
        IndexEntry entry;
        entry.document = ej.at("document").get<std::string>();
        entry.vector.values = ej.at("vector").get<std::vector<double>>();
        if (entry.vector.dimension() != index.dimension)
            throw ValidationError("index file " + path.string() + ": entry '" + db_id +
                                  "' dimension mismatch");
        index.entries[db_id] = std::move(entry);
    }
    return index;
}

RankedList rank_by_similarity(const std::string& query_text, const RepositoryIndex& index,
                              EmbeddingProvider& provider) {
    if (provider.model_id() != index.model_id)
        throw ProviderError("model mismatch: index built with '" + index.model_id +
                                "', provider is '" + provider.model_id() + "'",
                            false);
    if (index.entries.empty()) throw ValidationError("rank_by_similarity: empty index");

    const EmbeddingVector query_vec = provider.embed(query_text);
    RankedList list;
    list.stage = Stage::retrieval;
    list.items.reserve(index.entries.size());
    for (const auto& [db_id, entry] : index.entries) {
        list.items.push_back(RankedItem{db_id, cosine_similarity(query_vec, entry.vector)});
    }
    std::sort(list.items.begin(), list.items.end(), [](const RankedItem& a, const RankedItem& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.db_id < b.db_id;
    });
    return list;
}

RankedList top_k(const RankedList& list, std::size_t k) {
    if (k < 1) throw ValidationError("top_k: k must be >= 1");
    RankedList out;
    out.query_id = list.query_id;
    out.stage = list.stage;
    const std::size_t n = std::min(k, list.items.size());
    out.items.assign(list.items.begin(), list.items.begin() + static_cast<std::ptrdiff_t>(n));
    return out;
}

} // namespace dbroute
