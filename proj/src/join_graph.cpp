#include "dbroute/join_graph.hpp"

#include "dbroute/errors.hpp"
#include "dbroute/util.hpp"

#include <algorithm>
#include <deque>
#include <map>

namespace dbroute {

bool SchemaGraph::has_edge(int i, int j) const {
    if (i < 0 || i >= table_count()) return false;
    return adjacency[static_cast<std::size_t>(i)].count(j) > 0;
}

void SchemaGraph::add_edge(int i, int j) {
    if (i < 0 || j < 0 || i >= table_count() || j >= table_count())
        throw ValidationError("graph '" + db_id + "': edge (" + std::to_string(i) + ", " +
                              std::to_string(j) + ") out of range");
    if (i == j) return;
    adjacency[static_cast<std::size_t>(i)].insert(j);
    adjacency[static_cast<std::size_t>(j)].insert(i);
}

std::size_t SchemaGraph::edge_count() const {
    std::size_t degree_sum = 0;
    for (const auto& nbrs : adjacency) degree_sum += nbrs.size();
    return degree_sum / 2;
}

void validate_graph(const SchemaGraph& graph) {
    const int n = graph.table_count();
    for (int i = 0; i < n; ++i) {
        for (int j : graph.adjacency[static_cast<std::size_t>(i)]) {
            if (j < 0 || j >= n)
                throw ValidationError("graph '" + graph.db_id + "': neighbor " +
                                      std::to_string(j) + " of " + std::to_string(i) +
                                      " out of range");
            if (j == i)
                throw ValidationError("graph '" + graph.db_id + "': self-loop at " +
                                      std::to_string(i));
            if (graph.adjacency[static_cast<std::size_t>(j)].count(i) == 0)
                throw ValidationError("graph '" + graph.db_id + "': edge " + std::to_string(i) +
                                      "->" + std::to_string(j) + " not symmetric");
        }
    }
}

SchemaGraph build_join_graph_from_keys(const DatabaseSchema& schema, bool name_heuristic) {
    SchemaGraph graph;
    graph.db_id = schema.db_id;
    graph.adjacency.resize(schema.tables.size());

    for (std::size_t ti = 0; ti < schema.tables.size(); ++ti) {
        const TableMeta& table = schema.tables[ti];
        for (const ForeignKey& fk : table.foreign_keys) {
            const int i = static_cast<int>(ti);
            const int j = fk.target.table_index;
            if (i == j) continue; // self-referencing FK: no self-loop edge
            graph.add_edge(i, j);
            const auto key = std::minmax(i, j);
            graph.edge_columns[{key.first, key.second}].push_back(
                {ColumnRef{i, fk.local_column}, fk.target});
        }
    }

    if (name_heuristic) {
        const int n = static_cast<int>(schema.tables.size());
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const TableMeta& a = schema.tables[static_cast<std::size_t>(i)];
                const TableMeta& b = schema.tables[static_cast<std::size_t>(j)];
                for (std::size_t ca = 0; ca < a.columns.size(); ++ca) {
                    const int cb = b.find_column(a.columns[ca].name);
                    if (cb < 0) continue;
                    const bool pk_somewhere =
                        a.is_primary_key(static_cast<int>(ca)) || b.is_primary_key(cb);
                    if (!pk_somewhere) continue;
                    if (!graph.has_edge(i, j)) {
                        graph.add_edge(i, j);
                    }
                    graph.edge_columns[{i, j}].push_back(
                        {ColumnRef{i, static_cast<int>(ca)}, ColumnRef{j, cb}});
                }
            }
        }
    }
    return graph;
}

namespace {

void check_indices(const SchemaGraph& graph, const std::set<int>& tables) {
    for (int t : tables) {
        if (t < 0 || t >= graph.table_count())
            throw ValidationError("graph '" + graph.db_id + "': table index " + std::to_string(t) +
                                  " out of range");
    }
}

} // namespace

bool is_connected_subset(const SchemaGraph& graph, const std::set<int>& tables) {
    check_indices(graph, tables);
    if (tables.size() <= 1) return true;

    std::set<int> visited;
    std::deque<int> frontier{*tables.begin()};
    visited.insert(*tables.begin());
    while (!frontier.empty()) {
        const int cur = frontier.front();
        frontier.pop_front();
        for (int nbr : graph.adjacency[static_cast<std::size_t>(cur)]) {
            if (tables.count(nbr) && !visited.count(nbr)) {
                visited.insert(nbr);
                frontier.push_back(nbr);
            }
        }
    }
    return visited.size() == tables.size();
}

bool is_connected_allowing_intermediates(const SchemaGraph& graph, const std::set<int>& tables) {
    check_indices(graph, tables);
    if (tables.size() <= 1) return true;

    std::set<int> visited;
    std::deque<int> frontier{*tables.begin()};
    visited.insert(*tables.begin());
    while (!frontier.empty()) {
        const int cur = frontier.front();
        frontier.pop_front();
        for (int nbr : graph.adjacency[static_cast<std::size_t>(cur)]) {
            if (!visited.count(nbr)) {
                visited.insert(nbr);
                frontier.push_back(nbr);
            }
        }
    }
    return std::all_of(tables.begin(), tables.end(),
                       [&](int t) { return visited.count(t) > 0; });
}

std::set<int> connecting_tables(const SchemaGraph& graph, const std::set<int>& tables) {
    check_indices(graph, tables);
    if (tables.size() <= 1) return tables;
    if (!is_connected_allowing_intermediates(graph, tables)) return {};

    // BFS tree from the smallest member; union of root->member paths.
    const int root = *tables.begin();
    std::map<int, int> parent;
    parent[root] = root;
    std::deque<int> frontier{root};
    while (!frontier.empty()) {
        const int cur = frontier.front();
        frontier.pop_front();
        for (int nbr : graph.adjacency[static_cast<std::size_t>(cur)]) {
            if (!parent.count(nbr)) {
                parent[nbr] = cur;
                frontier.push_back(nbr);
            }
        }
    }
    std::set<int> result;
    for (int t : tables) {
        int cur = t;
        while (cur != root) {
            result.insert(cur);
            cur = parent.at(cur);
        }
    }
    result.insert(root);
    return result;
}

} // namespace dbroute
