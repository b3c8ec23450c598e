#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ranksens/dataset.hpp"

namespace ranksens {

/// Interaction-to-interaction dependency DAG over a training set. Node k is
/// the k-th participating interaction in global (timestamp, seq_index) order;
/// each node has at most two outgoing edges: to the next strictly-later
/// interaction of the same user and of the same item. No edge ever connects
/// two interactions with equal timestamps, so edges strictly increase in time
/// and the graph is acyclic by construction.
struct Idag {
  std::vector<std::int32_t> node_interaction;  // node -> index into train.interactions
  std::vector<std::int32_t> out_user;          // node -> node, or -1
  std::vector<std::int32_t> out_item;          // node -> node, or -1
  std::vector<std::int32_t> in_degree;
  std::optional<std::int32_t> max_seq_len;

  std::int32_t size() const { return static_cast<std::int32_t>(node_interaction.size()); }
  std::int64_t edge_count() const;
};

/// Cascading scores of the zero in-degree nodes: the number of nodes
/// reachable from each (counting the node itself). Every other node has a
/// parent with a strictly larger score, so scoring these suffices for argmax
/// selection.
struct CascadeScores {
  std::vector<std::int32_t> zero_nodes;  // ascending node id
  std::vector<std::int64_t> scores;      // aligned with zero_nodes
  std::int64_t z() const { return static_cast<std::int64_t>(zero_nodes.size()); }
};

/// Builds the dependency DAG. With `max_seq_len` set, each user's sequence is
/// first truncated to its latest L interactions and item chains are induced
/// from the surviving nodes.
Idag build_idag(const Dataset& train, std::optional<std::int32_t> max_seq_len = std::nullopt);

/// Distinct nodes reachable from `node` via out-edges, counting `node`.
std::int64_t descendant_count(const Idag& g, std::int32_t node);

CascadeScores cascading_scores(const Idag& g);

/// Top-k zero in-degree nodes by (score desc, timestamp asc, seq_index asc).
/// Requires 1 <= k <= Z.
std::vector<std::int32_t> select_targets(const Idag& g, const Dataset& train,
                                         const CascadeScores& scores, int k = 1);

/// "src dst kind" per edge, kind in {user, item}; node ids as above.
void write_edge_list(const Idag& g, std::ostream& out);
/// "node,score" rows for the zero in-degree nodes.
void write_scores_csv(const CascadeScores& scores, std::ostream& out);
/// "node,user,item,timestamp,seq_index" rows describing each node.
void write_nodes_csv(const Idag& g, const Dataset& train, std::ostream& out);

}  // namespace ranksens
