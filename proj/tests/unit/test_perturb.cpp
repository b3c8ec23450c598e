#include <algorithm>
#include <set>
#include <tuple>
#include <vector>

#include "doctest.h"
#include "ranksens/dataset.hpp"
#include "ranksens/idag.hpp"
#include "ranksens/perturb.hpp"

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

std::multiset<std::tuple<int, int, double>> content(const Dataset& ds) {
  std::multiset<std::tuple<int, int, double>> out;
  for (const Interaction& x : ds.interactions) out.insert({x.user, x.item, x.timestamp});
  return out;
}

Dataset three_user_log() {
  return dataset_from({{0, 0, 1}, {1, 1, 2}, {2, 2, 3}, {0, 1, 4}, {1, 2, 5},
                       {2, 0, 6}, {0, 2, 7}, {1, 0, 8}, {2, 1, 9}, {0, 0, 10}},
                      3, 3);
}

}  // namespace

TEST_CASE("choose_targets: pools and determinism") {
  Dataset ds = three_user_log();

  TargetStrategy earliest{TargetVariant::earliest_random, 1, 42};
  auto a = choose_targets(ds, earliest);
  REQUIRE(a.size() == 1);
  const std::set<std::int32_t> firsts = {0, 1, 2};  // per-user first rows
  CHECK(firsts.count(a[0]) == 1);
  CHECK(choose_targets(ds, earliest) == a);  // same seed, same pick

  TargetStrategy latest{TargetVariant::latest_random, 3, 7};
  auto b = choose_targets(ds, latest);
  const std::set<std::int32_t> lasts = {9, 7, 8};  // per-user last rows
  CHECK(std::set<std::int32_t>(b.begin(), b.end()) == lasts);

  TargetStrategy random{TargetVariant::random, 4, 9};
  auto c = choose_targets(ds, random);
  CHECK(std::set<std::int32_t>(c.begin(), c.end()).size() == 4);  // no replacement

  TargetStrategy too_many{TargetVariant::earliest_random, 4, 1};
  CHECK_THROWS_AS(choose_targets(ds, too_many), std::invalid_argument);
  TargetStrategy casper{TargetVariant::casper, 1, 1};
  CHECK_THROWS_AS(choose_targets(ds, casper), std::invalid_argument);  // graph missing
}

TEST_CASE("choose_targets: casper picks the top cascading score") {
  // same layout as the dependency-graph fixture: the third event dominates
  Dataset ds = dataset_from(
      {{0, 0, 1}, {1, 1, 2}, {2, 2, 3}, {0, 3, 4}, {1, 2, 5}, {2, 4, 6},
       {1, 4, 7}, {2, 3, 8}, {0, 2, 9}, {1, 0, 10}, {2, 1, 11}},
      3, 5);
  Idag g = build_idag(ds);
  CascadeScores cs = cascading_scores(g);
  TargetStrategy casper{TargetVariant::casper, 1, 123};
  auto refs = choose_targets(ds, casper, &g, &cs);
  CHECK(refs == std::vector<std::int32_t>{2});
  // casper targets always sit at zero in-degree
  for (std::int32_t ref : refs) {
    const auto node = std::find(g.node_interaction.begin(), g.node_interaction.end(), ref) -
                      g.node_interaction.begin();
    CHECK(g.in_degree[node] == 0);
  }
}

TEST_CASE("choose_item: popularity strategies") {
  Dataset ds = dataset_from({{0, 0, 1}, {0, 0, 2}, {0, 0, 3}, {0, 0, 4}, {0, 0, 5}, {0, 1, 6}},
                            1, 2);
  PopularityIndex pop = item_popularity(ds);  // counts {a:5, b:1}
  CHECK(choose_item(pop, ItemStrategy::popular, {}, 1) == 0);
  CHECK(choose_item(pop, ItemStrategy::unpopular, {}, 1) == 1);
  CHECK(choose_item(pop, ItemStrategy::unpopular, {1}, 1) == 0);
  CHECK(choose_item(pop, ItemStrategy::random, {}, 5) ==
        choose_item(pop, ItemStrategy::random, {}, 5));
  CHECK_THROWS_AS(choose_item(pop, ItemStrategy::random, {0, 1}, 1), std::invalid_argument);
}

TEST_CASE("apply: leave-one-out removes exactly one row") {
  Dataset ds = three_user_log();
  Perturbation p{EditKind::loo, 4, std::nullopt, std::nullopt};
  Dataset out = apply(ds, p);
  REQUIRE(out.size() == 9);

  // all surviving rows byte-identical, seq indices included
  std::size_t j = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (i == 4) continue;
    CHECK(out.interactions[j].user == ds.interactions[i].user);
    CHECK(out.interactions[j].item == ds.interactions[i].item);
    CHECK(out.interactions[j].timestamp == ds.interactions[i].timestamp);
    CHECK(out.interactions[j].seq_index == ds.interactions[i].seq_index);
    ++j;
  }

  auto before = content(ds), after = content(out);
  std::vector<std::tuple<int, int, double>> removed;
  std::set_difference(before.begin(), before.end(), after.begin(), after.end(),
                      std::back_inserter(removed));
  CHECK(removed.size() == 1);
}

TEST_CASE("apply: replace swaps one item in place") {
  Dataset ds = three_user_log();
  const Interaction target = ds.interactions[4];  // (1, 2, t=5)
  Perturbation p{EditKind::replace, 4, 0, ItemStrategy::random};
  Dataset out = apply(ds, p);
  REQUIRE(out.size() == ds.size());
  CHECK(out.user_sequences[target.user].size() == ds.user_sequences[target.user].size());
  CHECK(out.item_sequences[2].size() == ds.item_sequences[2].size() - 1);
  CHECK(out.item_sequences[0].size() == ds.item_sequences[0].size() + 1);
  CHECK(out.interactions[4].timestamp == target.timestamp);
  CHECK(out.interactions[4].seq_index == target.seq_index);

  Perturbation noop{EditKind::replace, 4, 2, std::nullopt};
  CHECK_THROWS_AS(apply(ds, noop), std::invalid_argument);  // same item
  Perturbation missing{EditKind::loo, 99, std::nullopt, std::nullopt};
  CHECK_THROWS_AS(apply(ds, missing), std::invalid_argument);
}

TEST_CASE("apply: insert lands right after the target") {
  Dataset ds = three_user_log();
  const Interaction target = ds.interactions[4];  // (1, 2, t=5)
  Perturbation p{EditKind::insert, 4, 0, ItemStrategy::random};
  Dataset out = apply(ds, p);
  REQUIRE(out.size() == ds.size() + 1);
  CHECK(out.user_sequences[target.user].size() == ds.user_sequences[target.user].size() + 1);

  // position 5 is the new row: same user and timestamp as the target
  CHECK(out.interactions[5].user == target.user);
  CHECK(out.interactions[5].item == 0);
  CHECK(out.interactions[5].timestamp == target.timestamp);
  CHECK(out.interactions[4].item == target.item);

  // multiset difference is exactly the inserted row
  auto before = content(ds), after = content(out);
  std::vector<std::tuple<int, int, double>> added;
  std::set_difference(after.begin(), after.end(), before.begin(), before.end(),
                      std::back_inserter(added));
  REQUIRE(added.size() == 1);
  CHECK(added[0] == std::tuple<int, int, double>{1, 0, 5.0});
}

TEST_CASE("apply: replace difference shares user and timestamp") {
  Dataset ds = three_user_log();
  Perturbation p{EditKind::replace, 6, 1, std::nullopt};  // (0, 2, t=7) -> item 1
  Dataset out = apply(ds, p);
  auto before = content(ds), after = content(out);
  std::vector<std::tuple<int, int, double>> removed, added;
  std::set_difference(before.begin(), before.end(), after.begin(), after.end(),
                      std::back_inserter(removed));
  std::set_difference(after.begin(), after.end(), before.begin(), before.end(),
                      std::back_inserter(added));
  REQUIRE(removed.size() == 1);
  REQUIRE(added.size() == 1);
  CHECK(std::get<0>(removed[0]) == std::get<0>(added[0]));  // same user
  CHECK(std::get<2>(removed[0]) == std::get<2>(added[0]));  // same timestamp
}

TEST_CASE("perturbation spec: json round-trip") {
  PerturbationSpec spec;
  spec.kind = EditKind::replace;
  spec.strategy = TargetVariant::casper;
  spec.item_strategy = ItemStrategy::unpopular;
  spec.k = 4;
  spec.seed = 99;
  const std::string text = perturbation_spec_to_json(spec);
  PerturbationSpec back = perturbation_spec_from_json(text);
  CHECK(back.kind == spec.kind);
  CHECK(back.strategy == spec.strategy);
  CHECK(back.item_strategy == spec.item_strategy);
  CHECK(back.k == spec.k);
  CHECK(back.seed == spec.seed);
  CHECK(perturbation_spec_to_json(back) == text);

  PerturbationSpec control;
  control.kind.reset();
  PerturbationSpec back2 = perturbation_spec_from_json(perturbation_spec_to_json(control));
  CHECK(!back2.kind.has_value());

  CHECK_THROWS(perturbation_spec_from_json("{\"kind\":\"explode\"}"));
  CHECK_THROWS(perturbation_spec_from_json("{\"k\":0}"));
}
