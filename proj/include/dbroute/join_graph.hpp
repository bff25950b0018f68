#pragma once

#include "dbroute/schema.hpp"

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace dbroute {

// Undirected joinability graph over a database's tables. Adjacency is kept
// symmetric and self-loop free; `adjacency[i]` is the neighbor set of table i.
struct SchemaGraph {
    std::string db_id;
    std::vector<std::set<int>> adjacency;
    // (i, j) with i < j -> column pairs supporting the join. Optional.
    std::map<std::pair<int, int>, std::vector<std::pair<ColumnRef, ColumnRef>>> edge_columns;

    int table_count() const { return static_cast<int>(adjacency.size()); }
    bool has_edge(int i, int j) const;
    // Adds the symmetric edge i-j; self-loops are ignored. Indices must be in
    // range (throws ValidationError otherwise).
    void add_edge(int i, int j);
    std::size_t edge_count() const;
};

// Throws ValidationError unless adjacency is symmetric, self-loop free and
// within bounds.
void validate_graph(const SchemaGraph& graph);

// One undirected edge per declared foreign key. With name_heuristic set, an
// extra edge joins tables sharing an identically named column (case-
// insensitive) when that column is a primary key in at least one of the two.
SchemaGraph build_join_graph_from_keys(const DatabaseSchema& schema, bool name_heuristic);

// True iff the subgraph induced by `tables` (edges only between members) is
// connected. Empty and singleton sets are connected. Throws ValidationError
// for out-of-range indices.
bool is_connected_subset(const SchemaGraph& graph, const std::set<int>& tables);

// True iff all of `tables` lie in one connected component of the full graph
// (paths may pass through tables outside the set).
bool is_connected_allowing_intermediates(const SchemaGraph& graph, const std::set<int>& tables);

// For a set connected in the full graph, returns `tables` plus the
// intermediate tables on BFS shortest paths linking them (a deterministic
// connecting superset; its induced subgraph is connected). Returns an empty
// set when `tables` is not connected in the full graph.
std::set<int> connecting_tables(const SchemaGraph& graph, const std::set<int>& tables);

} // namespace dbroute
