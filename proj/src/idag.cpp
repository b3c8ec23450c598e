#include "ranksens/idag.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace ranksens {

std::int64_t Idag::edge_count() const {
  std::int64_t n = 0;
  for (std::int32_t v : out_user)
    if (v >= 0) ++n;
  for (std::int32_t v : out_item)
    if (v >= 0) ++n;
  return n;
}

Idag build_idag(const Dataset& train, std::optional<std::int32_t> max_seq_len) {
  if (train.interactions.empty()) throw std::invalid_argument("build_idag: empty train set");
  if (max_seq_len && *max_seq_len < 1)
    throw std::invalid_argument("build_idag: max_seq_len must be >= 1");

  const auto total = static_cast<std::int32_t>(train.interactions.size());
  std::vector<std::int32_t> node_of(total, -1);

  Idag g;
  g.max_seq_len = max_seq_len;
  if (max_seq_len) {
    // Latest L interactions of each user; collect in global order.
    std::vector<std::uint8_t> keep(total, 0);
    for (const auto& seq : train.user_sequences) {
      const std::size_t start = seq.size() > static_cast<std::size_t>(*max_seq_len)
                                    ? seq.size() - static_cast<std::size_t>(*max_seq_len)
                                    : 0;
      for (std::size_t k = start; k < seq.size(); ++k) keep[seq[k]] = 1;
    }
    for (std::int32_t i = 0; i < total; ++i) {
      if (keep[i]) {
        node_of[i] = static_cast<std::int32_t>(g.node_interaction.size());
        g.node_interaction.push_back(i);
      }
    }
  } else {
    g.node_interaction.resize(total);
    std::iota(g.node_interaction.begin(), g.node_interaction.end(), 0);
    std::iota(node_of.begin(), node_of.end(), 0);
  }

  const auto n = g.size();
  g.out_user.assign(n, -1);
  g.out_item.assign(n, -1);
  g.in_degree.assign(n, 0);

  // Link each chain member to the next strictly-later member: consecutive
  // interactions, except that equal-timestamp pairs get no edge and the
  // earlier node links past them.
  auto link_chain = [&](const std::vector<std::int32_t>& members, std::vector<std::int32_t>& out) {
    for (std::size_t a = 0; a < members.size(); ++a) {
      const std::int32_t src = node_of[members[a]];
      if (src < 0) continue;
      const double t_src = train.interactions[members[a]].timestamp;
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        const std::int32_t dst = node_of[members[b]];
        if (dst < 0) continue;
        if (train.interactions[members[b]].timestamp > t_src) {
          out[src] = dst;
          ++g.in_degree[dst];
          break;
        }
      }
    }
  };

  for (const auto& seq : train.user_sequences) link_chain(seq, g.out_user);

  if (max_seq_len) {
    // Item chains over surviving nodes only, still in global order.
    std::vector<std::vector<std::int32_t>> item_members(train.n_items);
    for (std::int32_t node = 0; node < n; ++node) {
      const Interaction& x = train.interactions[g.node_interaction[node]];
      item_members[x.item].push_back(g.node_interaction[node]);
    }
    for (const auto& members : item_members) link_chain(members, g.out_item);
  } else {
    for (const auto& seq : train.item_sequences) link_chain(seq, g.out_item);
  }
  return g;
}

namespace {

// BFS over out-edges with an epoch-stamped visited buffer so bulk scoring
// does not reallocate per root.
std::int64_t bfs_count(const Idag& g, std::int32_t root, std::vector<std::int32_t>& stamp,
                       std::int32_t epoch, std::vector<std::int32_t>& queue) {
  queue.clear();
  queue.push_back(root);
  stamp[root] = epoch;
  std::size_t head = 0;
  while (head < queue.size()) {
    const std::int32_t v = queue[head++];
    for (const std::int32_t w : {g.out_user[v], g.out_item[v]}) {
      if (w >= 0 && stamp[w] != epoch) {
        stamp[w] = epoch;
        queue.push_back(w);
      }
    }
  }
  return static_cast<std::int64_t>(queue.size());
}

}  // namespace

std::int64_t descendant_count(const Idag& g, std::int32_t node) {
  if (node < 0 || node >= g.size()) throw std::invalid_argument("descendant_count: unknown node");
  std::vector<std::int32_t> stamp(g.size(), 0);
  std::vector<std::int32_t> queue;
  return bfs_count(g, node, stamp, 1, queue);
}

CascadeScores cascading_scores(const Idag& g) {
  CascadeScores cs;
  std::vector<std::int32_t> stamp(g.size(), -1);
  std::vector<std::int32_t> queue;
  queue.reserve(g.size());
  for (std::int32_t node = 0; node < g.size(); ++node) {
    if (g.in_degree[node] == 0) {
      cs.zero_nodes.push_back(node);
      cs.scores.push_back(bfs_count(g, node, stamp, node, queue));
    }
  }
  return cs;
}

std::vector<std::int32_t> select_targets(const Idag& g, const Dataset& train,
                                         const CascadeScores& scores, int k) {
  if (k < 1 || static_cast<std::int64_t>(k) > scores.z())
    throw std::invalid_argument("select_targets: k must lie in [1, Z]");
  std::vector<std::size_t> idx(scores.zero_nodes.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (scores.scores[a] != scores.scores[b]) return scores.scores[a] > scores.scores[b];
    const Interaction& xa = train.interactions[g.node_interaction[scores.zero_nodes[a]]];
    const Interaction& xb = train.interactions[g.node_interaction[scores.zero_nodes[b]]];
    if (xa.timestamp != xb.timestamp) return xa.timestamp < xb.timestamp;
    return xa.seq_index < xb.seq_index;
  });
  std::vector<std::int32_t> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) out.push_back(scores.zero_nodes[idx[i]]);
  return out;
}

void write_edge_list(const Idag& g, std::ostream& out) {
  for (std::int32_t v = 0; v < g.size(); ++v) {
    if (g.out_user[v] >= 0) out << v << ' ' << g.out_user[v] << " user\n";
    if (g.out_item[v] >= 0) out << v << ' ' << g.out_item[v] << " item\n";
  }
}

void write_scores_csv(const CascadeScores& scores, std::ostream& out) {
  out << "node,score\n";
  for (std::size_t i = 0; i < scores.zero_nodes.size(); ++i)
    out << scores.zero_nodes[i] << ',' << scores.scores[i] << '\n';
}

void write_nodes_csv(const Idag& g, const Dataset& train, std::ostream& out) {
  out << "node,user,item,timestamp,seq_index\n";
  for (std::int32_t v = 0; v < g.size(); ++v) {
    const Interaction& x = train.interactions[g.node_interaction[v]];
    out << v << ',' << x.user << ',' << x.item << ',' << x.timestamp << ',' << x.seq_index << '\n';
  }
}

}  // namespace ranksens
