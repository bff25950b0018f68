#pragma once

#include "dbroute/schema.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace dbroute {

enum class Split { unassigned, train, test };

struct QuerySample {
    std::string query_id;
    std::string text;
    std::string gold_db_id;
    std::string evidence; // empty = absent
    std::string sql;      // opaque provenance from the source dataset
    Split split = Split::unassigned;
};

struct RoutingDataset {
    std::vector<DatabaseSchema> repository;
    std::vector<QuerySample> train;
    std::vector<QuerySample> test;
    std::set<std::string> cross_domain_db_ids; // train queries withheld for these

    bool has_db(const std::string& db_id) const;
};

// Throws ValidationError on: duplicate query ids, gold db missing from the
// repository, train/test id overlap, cross-domain violation.
void validate_dataset(const RoutingDataset& dataset);

// Per-database deterministic shuffle (mt19937_64 seeded with
// seed XOR fnv1a64(db_id), Fisher-Yates) and a ceil(n/2)-train split.
// Same (samples, seed) always yields the same partition.
std::pair<std::vector<QuerySample>, std::vector<QuerySample>>
build_route_split(const std::vector<QuerySample>& samples, std::uint64_t seed);

// Per-database union of the non-empty evidence strings of its samples.
std::map<std::string, EvidenceSet> merge_evidence(const std::vector<QuerySample>& samples);

// Attaches merged evidence onto matching repository schemas.
void attach_evidence(std::vector<DatabaseSchema>& repository,
                     const std::map<std::string, EvidenceSet>& evidence);

// Removes train samples whose gold db is held out; repository and test are
// copied unchanged. Throws ValidationError for unknown db ids.
RoutingDataset make_cross_domain(const RoutingDataset& dataset,
                                 const std::set<std::string>& held_out_db_ids);

// Counts of DBs and questions plus a per-DB question histogram.
nlohmann::json dataset_stats(const RoutingDataset& dataset);

// Questions file: JSON array of {question, db_id, evidence?, query_id?, SQL?/query?}.
// Samples without an explicit id get "q" + zero-padded position.
std::vector<QuerySample> load_questions_file(const std::filesystem::path& path);
std::vector<QuerySample> load_questions(const nlohmann::json& doc);

// Split manifest: {seed, rounding: "train_ceil", train: [...], test: [...]}.
nlohmann::json split_manifest(std::uint64_t seed, const std::vector<QuerySample>& train,
                              const std::vector<QuerySample>& test);

// Applies a manifest onto samples: returns (train, test) in manifest order.
// Throws ValidationError if the manifest mentions unknown query ids.
std::pair<std::vector<QuerySample>, std::vector<QuerySample>>
apply_split_manifest(const std::vector<QuerySample>& samples, const nlohmann::json& manifest);

} // namespace dbroute
