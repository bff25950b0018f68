#include "dbroute/eval.hpp"

#include "dbroute/errors.hpp"
#include "dbroute/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

namespace dbroute {

using nlohmann::json;

int recall_at_k(const RankedList& ranked, const std::string& gold, std::size_t k) {
    if (k < 1) throw ValidationError("recall_at_k: k must be >= 1");
    const auto rank = ranked.rank_of(gold);
    return (rank && *rank <= k) ? 1 : 0;
}

double average_precision(const RankedList& ranked, const std::string& gold) {
    const auto rank = ranked.rank_of(gold);
    if (!rank) return 0.0;
    return 1.0 / static_cast<double>(*rank);
}

double mean_average_precision(const std::vector<std::pair<RankedList, std::string>>& reports) {
    if (reports.empty()) throw ValidationError("mean_average_precision: empty report list");
    double sum = 0.0;
    for (const auto& [ranked, gold] : reports) sum += average_precision(ranked, gold);
    return sum / static_cast<double>(reports.size());
}

QueryRecord make_query_record(const RankedList& ranking, const std::string& query_id,
                              const std::string& gold_db_id) {
    QueryRecord rec;
    rec.query_id = query_id;
    rec.gold_db_id = gold_db_id;
    for (const RankedItem& item : ranking.items) rec.ranking.push_back(item.db_id);
    const auto rank = ranking.rank_of(gold_db_id);
    rec.gold_rank = rank ? *rank : 0;
    return rec;
}

void EvalReport::recompute_aggregates() {
    aggregates = EvalAggregates{};
    candidate_miss = 0;
    if (queries.empty()) return;
    double r1 = 0, r2 = 0, r3 = 0, r5 = 0, ap = 0;
    for (const QueryRecord& q : queries) {
        if (q.gold_rank >= 1) {
            if (q.gold_rank <= 1) r1 += 1;
            if (q.gold_rank <= 2) r2 += 1;
            if (q.gold_rank <= 3) r3 += 1;
            if (q.gold_rank <= 5) r5 += 1;
            ap += 1.0 / static_cast<double>(q.gold_rank);
        }
        if (q.candidate_miss) ++candidate_miss;
    }
    const double n = static_cast<double>(queries.size());
    aggregates.recall1 = r1 / n;
    aggregates.recall2 = r2 / n;
    aggregates.recall3 = r3 / n;
    aggregates.recall5 = r5 / n;
    aggregates.map = ap / n;
}

json report_to_json(const EvalReport& report) {
    json queries = json::array();
    for (const QueryRecord& q : report.queries) {
        json rec{{"query_id", q.query_id},
                 {"gold_db_id", q.gold_db_id},
                 {"ranking", q.ranking},
                 {"candidate_miss", q.candidate_miss}};
        if (q.gold_rank >= 1) rec["gold_rank"] = q.gold_rank;
        else rec["gold_rank"] = nullptr;
        queries.push_back(std::move(rec));
    }
    return json{{"stage", stage_name(report.stage)},
                {"config", report.config_echo},
                {"query_count", report.queries.size()},
                {"candidate_miss", report.candidate_miss},
                {"aggregates",
                 json{{"recall@1", report.aggregates.recall1},
                      {"recall@2", report.aggregates.recall2},
                      {"recall@3", report.aggregates.recall3},
                      {"recall@5", report.aggregates.recall5},
                      {"map", report.aggregates.map}}},
                {"queries", std::move(queries)}};
}

std::string report_to_csv(const EvalReport& report) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%d\n",
                  stage_name(report.stage).c_str(), report.queries.size(),
                  report.aggregates.recall1, report.aggregates.recall2, report.aggregates.recall3,
                  report.aggregates.recall5, report.aggregates.map, report.candidate_miss);
    return std::string("stage,queries,recall@1,recall@2,recall@3,recall@5,map,candidate_miss\n") +
           buf;
}

// ---------------------------------------------------------------------------
// Constrained k-means
// ---------------------------------------------------------------------------

namespace {

double sq_dist(const EmbeddingVector& a, const EmbeddingVector& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double diff = a.values[i] - b.values[i];
        d += diff * diff;
    }
    return d;
}

struct Candidate {
    double dist;
    std::size_t point;
    int cluster;
    bool operator<(const Candidate& o) const {
        if (dist != o.dist) return dist < o.dist;
        if (point != o.point) return point < o.point;
        return cluster < o.cluster;
    }
};

} // namespace

ClusterAssignment constrained_kmeans(const std::map<std::string, EmbeddingVector>& vectors,
                                     int k, int min_size, int max_size, std::uint64_t seed,
                                     int max_iters, const KMeansIterationObserver& observer) {
    const std::size_t n = vectors.size();
    if (k < 1) throw ValidationError("constrained_kmeans: k must be >= 1");
    if (min_size < 0 || max_size < min_size)
        throw ValidationError("constrained_kmeans: need 0 <= min_size <= max_size");
    if (static_cast<std::size_t>(k) * static_cast<std::size_t>(min_size) > n ||
        n > static_cast<std::size_t>(k) * static_cast<std::size_t>(max_size))
        throw ValidationError("constrained_kmeans: infeasible size bounds for " +
                              std::to_string(n) + " points");
    if (n == 0) throw ValidationError("constrained_kmeans: no vectors");

    std::vector<std::string> ids;
    std::vector<EmbeddingVector> points;
    ids.reserve(n);
    points.reserve(n);
    const std::size_t dim = vectors.begin()->second.dimension();
    for (const auto& [id, vec] : vectors) {
        if (vec.dimension() != dim)
            throw ValidationError("constrained_kmeans: inconsistent vector dimensions");
        ids.push_back(id);
        points.push_back(vec);
    }

    // initial centers: k distinct points chosen by a seeded shuffle
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    deterministic_shuffle(order, rng);
    std::vector<EmbeddingVector> centers;
    for (int j = 0; j < k; ++j) centers.push_back(points[order[static_cast<std::size_t>(j) % n]]);

    std::vector<int> assignment(n, -1), previous;

    auto assign_step = [&]() {
        std::vector<int> sizes(static_cast<std::size_t>(k), 0);
        std::fill(assignment.begin(), assignment.end(), -1);

        // greedy by distance with max-capacity limits
        std::vector<Candidate> cands;
        cands.reserve(n * static_cast<std::size_t>(k));
        for (std::size_t i = 0; i < n; ++i)
            for (int j = 0; j < k; ++j)
                cands.push_back(Candidate{sq_dist(points[i], centers[static_cast<std::size_t>(j)]),
                                          i, j});
        std::sort(cands.begin(), cands.end());
        for (const Candidate& c : cands) {
            if (assignment[c.point] != -1) continue;
            if (sizes[static_cast<std::size_t>(c.cluster)] >= max_size) continue;
            assignment[c.point] = c.cluster;
            ++sizes[static_cast<std::size_t>(c.cluster)];
        }

        // repair clusters below the minimum: cheapest moves from donors
        for (;;) {
            int deficient = -1;
            for (int j = 0; j < k; ++j) {
                if (sizes[static_cast<std::size_t>(j)] < min_size) {
                    deficient = j;
                    break;
                }
            }
            if (deficient < 0) break;
            double best_delta = std::numeric_limits<double>::infinity();
            std::size_t best_point = n;
            for (std::size_t i = 0; i < n; ++i) {
                const int from = assignment[i];
                if (from == deficient) continue;
                if (sizes[static_cast<std::size_t>(from)] <= min_size) continue;
                const double delta =
                    sq_dist(points[i], centers[static_cast<std::size_t>(deficient)]) -
                    sq_dist(points[i], centers[static_cast<std::size_t>(from)]);
                if (delta < best_delta || (delta == best_delta && i < best_point)) {
                    best_delta = delta;
                    best_point = i;
                }
            }
            if (best_point == n)
                throw ValidationError("constrained_kmeans: repair failed (internal)");
            --sizes[static_cast<std::size_t>(assignment[best_point])];
            assignment[best_point] = deficient;
            ++sizes[static_cast<std::size_t>(deficient)];
        }

        // local refinement: single moves within bounds and pairwise swaps
        for (int pass = 0; pass < 200; ++pass) {
            double best_delta = -1e-12;
            int best_kind = 0; // 1 = move, 2 = swap
            std::size_t best_i = 0, best_j = 0;
            int best_target = -1;

            for (std::size_t i = 0; i < n; ++i) {
                const int a = assignment[i];
                if (sizes[static_cast<std::size_t>(a)] > min_size) {
                    for (int b = 0; b < k; ++b) {
                        if (b == a || sizes[static_cast<std::size_t>(b)] >= max_size) continue;
                        const double delta =
                            sq_dist(points[i], centers[static_cast<std::size_t>(b)]) -
                            sq_dist(points[i], centers[static_cast<std::size_t>(a)]);
                        if (delta < best_delta) {
                            best_delta = delta;
                            best_kind = 1;
                            best_i = i;
                            best_target = b;
                        }
                    }
                }
                for (std::size_t j = i + 1; j < n; ++j) {
                    const int b = assignment[j];
                    if (b == a) continue;
                    const double delta =
                        sq_dist(points[i], centers[static_cast<std::size_t>(b)]) +
                        sq_dist(points[j], centers[static_cast<std::size_t>(a)]) -
                        sq_dist(points[i], centers[static_cast<std::size_t>(a)]) -
                        sq_dist(points[j], centers[static_cast<std::size_t>(b)]);
                    if (delta < best_delta) {
                        best_delta = delta;
                        best_kind = 2;
                        best_i = i;
                        best_j = j;
                    }
                }
            }
            if (best_kind == 0) break;
            if (best_kind == 1) {
                --sizes[static_cast<std::size_t>(assignment[best_i])];
                assignment[best_i] = best_target;
                ++sizes[static_cast<std::size_t>(best_target)];
            } else {
                std::swap(assignment[best_i], assignment[best_j]);
            }
        }
        return sizes;
    };

    std::vector<int> sizes;
    for (int iter = 0; iter < max_iters; ++iter) {
        sizes = assign_step();
        if (observer) observer(iter, sizes);
        if (assignment == previous) break;
        previous = assignment;

        // centroid update; empty clusters (min_size == 0) keep their center
        std::vector<EmbeddingVector> sums(static_cast<std::size_t>(k));
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (auto& s : sums) s.values.assign(dim, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(assignment[i]);
            for (std::size_t d = 0; d < dim; ++d) sums[c].values[d] += points[i].values[d];
            ++counts[c];
        }
        for (int j = 0; j < k; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            if (counts[ju] == 0) continue;
            for (std::size_t d = 0; d < dim; ++d)
                centers[ju].values[d] = sums[ju].values[d] / counts[ju];
        }
    }

    ClusterAssignment result;
    result.sizes = sizes;
    result.min_size = min_size;
    result.max_size = max_size;
    for (std::size_t i = 0; i < n; ++i) result.assignment[ids[i]] = assignment[i];
    return result;
}

ConfusionStats intra_cluster_confusion(const std::vector<QueryRecord>& records,
                                       const ClusterAssignment& clusters) {
    ConfusionStats stats;
    int rank1_same = 0;
    int top5_multi = 0;
    for (const QueryRecord& rec : records) {
        if (rec.gold_rank == 1) continue; // not an error
        ++stats.error_count;
        auto gold_it = clusters.assignment.find(rec.gold_db_id);
        if (gold_it == clusters.assignment.end())
            throw ValidationError("intra_cluster_confusion: gold db '" + rec.gold_db_id +
                                  "' not clustered");
        const int gold_cluster = gold_it->second;

        if (!rec.ranking.empty()) {
            auto top_it = clusters.assignment.find(rec.ranking.front());
            if (top_it == clusters.assignment.end())
                throw ValidationError("intra_cluster_confusion: db '" + rec.ranking.front() +
                                      "' not clustered");
            if (top_it->second == gold_cluster) ++rank1_same;
        }

        int same_in_top5 = 0;
        for (std::size_t i = 0; i < rec.ranking.size() && i < 5; ++i) {
            auto it = clusters.assignment.find(rec.ranking[i]);
            if (it == clusters.assignment.end())
                throw ValidationError("intra_cluster_confusion: db '" + rec.ranking[i] +
                                      "' not clustered");
            if (it->second == gold_cluster) ++same_in_top5;
        }
        if (same_in_top5 >= 2) ++top5_multi;
    }
    if (stats.error_count > 0) {
        stats.rank1_same_cluster = static_cast<double>(rank1_same) / stats.error_count;
        stats.top5_multi_same_cluster = static_cast<double>(top5_multi) / stats.error_count;
    }
    return stats;
}

json cluster_report_to_json(const ClusterAssignment& clusters) {
    json assignment = json::object();
    for (const auto& [db_id, cluster] : clusters.assignment) assignment[db_id] = cluster;
    return json{{"k", clusters.sizes.size()},
                {"min_size", clusters.min_size},
                {"max_size", clusters.max_size},
                {"sizes", clusters.sizes},
                {"assignment", std::move(assignment)}};
}

} // namespace dbroute
