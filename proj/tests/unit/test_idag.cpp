#include <algorithm>
#include <bitset>
#include <optional>
#include <tuple>
#include <vector>

#include "doctest.h"
#include "ranksens/dataset.hpp"
#include "ranksens/idag.hpp"
#include "ranksens/rng.hpp"

using namespace ranksens;

namespace {

Dataset dataset_from(const std::vector<std::tuple<int, int, double>>& rows, int n_users,
                     int n_items) {
  std::vector<Interaction> xs;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Interaction x;
    x.user = std::get<0>(rows[i]);
    x.item = std::get<1>(rows[i]);
    x.timestamp = std::get<2>(rows[i]);
    x.seq_index = static_cast<std::int64_t>(i);
    xs.push_back(x);
  }
  return Dataset::assemble(std::move(xs), n_users, n_items);
}

// The interaction layout behind the worked dependency-graph example: three
// users (A,B,C), five items (a..e), eleven events at times 1..11. Node k
// holds the k+1-th event. The third event has the maximal cascading score, 8.
Dataset figure_fixture() {
  return dataset_from(
      {
          {0, 0, 1},   // X1  (A,a)
          {1, 1, 2},   // X2  (B,b)
          {2, 2, 3},   // X3  (C,c)
          {0, 3, 4},   // X4  (A,d)
          {1, 2, 5},   // X5  (B,c)
          {2, 4, 6},   // X6  (C,e)
          {1, 4, 7},   // X7  (B,e)
          {2, 3, 8},   // X8  (C,d)
          {0, 2, 9},   // X9  (A,c)
          {1, 0, 10},  // X10 (B,a)
          {2, 1, 11},  // X11 (C,b)
      },
      3, 5);
}

// Transitive-closure oracle: node order is topological (edges only go
// forward), so one reverse sweep of bitset unions gives the full
// reachability matrix.
std::vector<std::int64_t> closure_counts(const Idag& g) {
  const int n = g.size();
  REQUIRE(n <= 512);
  std::vector<std::bitset<512>> reach(n);
  for (int v = n - 1; v >= 0; --v) {
    reach[v].set(v);
    if (g.out_user[v] >= 0) reach[v] |= reach[g.out_user[v]];
    if (g.out_item[v] >= 0) reach[v] |= reach[g.out_item[v]];
  }
  std::vector<std::int64_t> counts(n);
  for (int v = 0; v < n; ++v) counts[v] = static_cast<std::int64_t>(reach[v].count());
  return counts;
}

}  // namespace

TEST_CASE("idag: single-user chain") {
  Dataset ds = dataset_from({{0, 0, 1}, {0, 1, 2}, {0, 2, 3}}, 1, 3);
  Idag g = build_idag(ds);
  REQUIRE(g.size() == 3);
  CHECK(g.out_user == std::vector<std::int32_t>{1, 2, -1});
  CHECK(g.out_item == std::vector<std::int32_t>{-1, -1, -1});  // items all distinct
  CascadeScores cs = cascading_scores(g);
  CHECK(cs.z() == 1);
  CHECK(cs.zero_nodes == std::vector<std::int32_t>{0});
  CHECK(cs.scores == std::vector<std::int64_t>{3});
  CHECK(descendant_count(g, 2) == 1);  // sink counts only itself
}

TEST_CASE("idag: figure fixture reproduces the worked example") {
  Dataset ds = figure_fixture();
  Idag g = build_idag(ds);
  REQUIRE(g.size() == 11);

  // user chains: A = X1->X4->X9, B = X2->X5->X7->X10, C = X3->X6->X8->X11
  CHECK(g.out_user == std::vector<std::int32_t>{3, 4, 5, 8, 6, 7, 9, 10, -1, -1, -1});
  // item chains: a = X1->X10, b = X2->X11, c = X3->X5->X9, d = X4->X8, e = X6->X7
  CHECK(g.out_item == std::vector<std::int32_t>{9, 10, 4, 7, 8, 6, -1, -1, -1, -1, -1});

  CascadeScores cs = cascading_scores(g);
  CHECK(cs.z() == 3);
  CHECK(cs.zero_nodes == std::vector<std::int32_t>{0, 1, 2});
  CHECK(descendant_count(g, 2) == 8);  // the example's headline score
  CHECK(cs.scores == std::vector<std::int64_t>{6, 6, 8});

  // argmax selection picks the third event; equal scores fall back to time
  CHECK(select_targets(g, ds, cs, 1) == std::vector<std::int32_t>{2});
  CHECK(select_targets(g, ds, cs, 3) == std::vector<std::int32_t>{2, 0, 1});
  CHECK_THROWS_AS(select_targets(g, ds, cs, 4), std::invalid_argument);

  // every node's count against the closure oracle + parent monotonicity
  const auto oracle = closure_counts(g);
  for (std::int32_t v = 0; v < g.size(); ++v) CHECK(descendant_count(g, v) == oracle[v]);
}

TEST_CASE("idag: no edges between equal timestamps") {
  // one user, three events, first two at the same instant
  Dataset ds = dataset_from({{0, 0, 5}, {0, 1, 5}, {0, 2, 6}}, 1, 3);
  Idag g = build_idag(ds);
  CHECK(g.out_user == std::vector<std::int32_t>{2, 2, -1});  // both skip to t=6
  CHECK(g.in_degree == std::vector<std::int32_t>{0, 0, 2});
  CascadeScores cs = cascading_scores(g);
  CHECK(cs.scores == std::vector<std::int64_t>{2, 2});
  // score tie: the earlier seq_index wins
  CHECK(select_targets(g, ds, cs, 1) == std::vector<std::int32_t>{0});

  // same rule on an item chain
  Dataset item_ds = dataset_from({{0, 0, 5}, {1, 0, 5}, {2, 0, 7}}, 3, 1);
  Idag gi = build_idag(item_ds);
  CHECK(gi.out_item == std::vector<std::int32_t>{2, 2, -1});
}

TEST_CASE("idag: max_seq_len truncates user histories first") {
  // user 0: items (0, 1, 0) at t=1,2,3; user 1: item 0 at t=4
  Dataset ds = dataset_from({{0, 0, 1}, {0, 1, 2}, {0, 0, 3}, {1, 0, 4}}, 2, 2);

  Idag full = build_idag(ds);
  CHECK(full.size() == 4);
  // item 0 chain: X1 -> X3 -> X4
  CHECK(full.out_item == std::vector<std::int32_t>{2, -1, 3, -1});

  Idag g = build_idag(ds, 2);
  CHECK(g.size() == 3);  // min(3,2) + min(1,2)
  // node ids: 0 = (0,1,t2), 1 = (0,0,t3), 2 = (1,0,t4)
  CHECK(g.node_interaction == std::vector<std::int32_t>{1, 2, 3});
  CHECK(g.out_user == std::vector<std::int32_t>{1, -1, -1});
  // item chain induced after truncation: only t3 -> t4 survives
  CHECK(g.out_item == std::vector<std::int32_t>{-1, 2, -1});

  CHECK_THROWS_AS(build_idag(ds, 0), std::invalid_argument);
  CHECK_THROWS_AS(descendant_count(g, 17), std::invalid_argument);
}

TEST_CASE("idag: node count under truncation is sum of min(n_u, L)") {
  SynthConfig cfg;
  cfg.n_users = 12;
  cfg.n_items = 6;
  cfg.events_per_user = 9;
  Dataset ds = synth_generate(cfg, 4);
  for (std::int32_t L : {1, 5, 9, 50}) {
    Idag g = build_idag(ds, L);
    std::int64_t expected = 0;
    for (const auto& seq : ds.user_sequences)
      expected += std::min<std::int64_t>(static_cast<std::int64_t>(seq.size()), L);
    CHECK(g.size() == expected);
  }
}

TEST_CASE("idag: descendant counts match the closure oracle on random graphs") {
  Rng rng(606);
  for (int trial = 0; trial < 100; ++trial) {
    SynthConfig cfg;
    cfg.n_users = 2 + static_cast<std::int32_t>(rng.below(12));
    cfg.n_items = 1 + static_cast<std::int32_t>(rng.below(9));
    cfg.events_per_user = 3 + static_cast<std::int32_t>(rng.below(30));
    while (cfg.n_users * cfg.events_per_user > 500) --cfg.events_per_user;
    Dataset ds = synth_generate(cfg, 1000 + trial);
    std::optional<std::int32_t> L;
    if (trial % 3 == 1) L = 1 + static_cast<std::int32_t>(rng.below(cfg.events_per_user));
    Idag g = build_idag(ds, L);

    const auto oracle = closure_counts(g);
    for (std::int32_t v = 0; v < g.size(); ++v) CHECK(descendant_count(g, v) == oracle[v]);

    // parent monotonicity across every edge
    for (std::int32_t v = 0; v < g.size(); ++v) {
      for (std::int32_t w : {g.out_user[v], g.out_item[v]})
        if (w >= 0) CHECK(oracle[v] >= oracle[w] + 1);
    }

    // zero in-degree nodes dominate: their max equals the all-node max
    CascadeScores cs = cascading_scores(g);
    REQUIRE(cs.z() >= 1);
    for (std::size_t i = 0; i < cs.zero_nodes.size(); ++i) {
      CHECK(g.in_degree[cs.zero_nodes[i]] == 0);
      CHECK(cs.scores[i] == oracle[cs.zero_nodes[i]]);
    }
    CHECK(*std::max_element(cs.scores.begin(), cs.scores.end()) ==
          *std::max_element(oracle.begin(), oracle.end()));
  }
}

TEST_CASE("idag: build and scores are deterministic") {
  SynthConfig cfg;
  cfg.n_users = 20;
  cfg.n_items = 10;
  cfg.events_per_user = 25;
  Dataset ds = synth_generate(cfg, 8);
  Idag a = build_idag(ds), b = build_idag(ds);
  CHECK(a.out_user == b.out_user);
  CHECK(a.out_item == b.out_item);
  CascadeScores ca = cascading_scores(a), cb = cascading_scores(b);
  CHECK(ca.scores == cb.scores);
  CHECK(a.edge_count() == b.edge_count());
}
