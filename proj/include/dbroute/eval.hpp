#pragma once

#include "dbroute/embedding.hpp"
#include "dbroute/index.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace dbroute {

// 1 iff gold appears within the first k items. k >= 1.
int recall_at_k(const RankedList& ranked, const std::string& gold, std::size_t k);

// Single relevant item: AP = 1 / rank(gold); gold absent from the ranking
// contributes 0.
double average_precision(const RankedList& ranked, const std::string& gold);

// Mean AP over queries. Throws ValidationError on an empty list.
double mean_average_precision(const std::vector<std::pair<RankedList, std::string>>& reports);

struct QueryRecord {
    std::string query_id;
    std::string gold_db_id;
    std::vector<std::string> ranking; // ordered db ids
    std::size_t gold_rank = 0;        // 1-based; 0 = absent from ranking
    bool candidate_miss = false;      // gold missing from the re-rank candidates
};

struct EvalAggregates {
    double recall1 = 0, recall2 = 0, recall3 = 0, recall5 = 0;
    double map = 0;
};

struct EvalReport {
    Stage stage = Stage::retrieval;
    nlohmann::json config_echo;
    std::vector<QueryRecord> queries;
    int candidate_miss = 0;
    EvalAggregates aggregates;

    void recompute_aggregates(); // from `queries`
};

QueryRecord make_query_record(const RankedList& ranking, const std::string& query_id,
                              const std::string& gold_db_id);

nlohmann::json report_to_json(const EvalReport& report);
std::string report_to_csv(const EvalReport& report);

// ---------------------------------------------------------------------------
// Domain-cluster analysis
// ---------------------------------------------------------------------------

struct ClusterAssignment {
    std::map<std::string, int> assignment; // db_id -> cluster index
    std::vector<int> sizes;
    int min_size = 0;
    int max_size = 0;
};

using KMeansIterationObserver = std::function<void(int iteration, const std::vector<int>& sizes)>;

// Size-bounded k-means: greedy capacity-limited assignment, minimum-size
// repair, then local move/swap refinement each iteration; centroid update;
// stops when assignments stabilize or after max_iters. Size bounds hold on
// every iteration (the observer sees each one). Deterministic under a fixed
// seed. Throws ValidationError on infeasible bounds.
ClusterAssignment constrained_kmeans(const std::map<std::string, EmbeddingVector>& vectors,
                                     int k, int min_size, int max_size, std::uint64_t seed,
                                     int max_iters = 50,
                                     const KMeansIterationObserver& observer = {});

struct ConfusionStats {
    int error_count = 0;                  // queries with gold not at rank 1
    double rank1_same_cluster = 0.0;      // of errors: rank-1 shares gold's cluster
    double top5_multi_same_cluster = 0.0; // of errors: >= 2 same-cluster dbs in top-5
};

// Among queries whose gold is not ranked first, how often the confusion stays
// inside the gold's domain cluster.
ConfusionStats intra_cluster_confusion(const std::vector<QueryRecord>& records,
                                       const ClusterAssignment& clusters);

nlohmann::json cluster_report_to_json(const ClusterAssignment& clusters);

} // namespace dbroute
