#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "ranksens/dataset.hpp"
#include "ranksens/errors.hpp"
#include "ranksens/metrics.hpp"
#include "ranksens/model.hpp"

using namespace ranksens;

namespace {

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 3;
  cfg.seed = 5;
  return cfg;
}

TemporalSplit markov_split(std::uint64_t seed) {
  SynthConfig synth;
  synth.n_users = 40;
  synth.n_items = 30;
  synth.events_per_user = 60;
  synth.concentration = 6.0;  // strongly patterned streams
  Dataset ds = synth_generate(synth, seed);
  return temporal_split(ds, 0.9);
}

}  // namespace

TEST_CASE("init: seeded, bounded, unit-norm users") {
  ModelConfig cfg = small_config();
  SeqEmbModel a = init_model(20, 15, cfg);
  SeqEmbModel b = init_model(20, 15, cfg);
  CHECK(a.user_emb == b.user_emb);
  CHECK(a.item_emb == b.item_emb);

  const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.dim));
  for (double v : a.item_emb) {
    CHECK(std::isfinite(v));
    CHECK(std::fabs(v) <= bound);
  }
  for (std::int32_t u = 0; u < 20; ++u) {
    double norm = 0.0;
    for (int c = 0; c < cfg.dim; ++c) norm += a.user_row(u)[c] * a.user_row(u)[c];
    CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-12));
  }

  ModelConfig one_d = cfg;
  one_d.dim = 1;
  SeqEmbModel c = init_model(6, 3, one_d);
  for (std::int32_t u = 0; u < 6; ++u)
    CHECK(std::fabs(c.user_row(u)[0]) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fit: zero rates are a no-op") {
  ModelConfig cfg = small_config();
  cfg.learning_rate = 0.0;
  cfg.drift = 0.0;
  cfg.epochs = 1;
  TemporalSplit split = markov_split(3);
  SeqEmbModel before = init_model(split.train.n_users, split.train.n_items, cfg);
  SeqEmbModel after = fit(before, split.train);
  CHECK(after.user_emb == before.user_emb);
  CHECK(after.item_emb == before.item_emb);
}

TEST_CASE("fit: bitwise deterministic") {
  ModelConfig cfg = small_config();
  TemporalSplit split = markov_split(4);
  SeqEmbModel a = fit(init_model(split.train.n_users, split.train.n_items, cfg), split.train);
  SeqEmbModel b = fit(init_model(split.train.n_users, split.train.n_items, cfg), split.train);
  CHECK(a.user_emb == b.user_emb);
  CHECK(a.item_emb == b.item_emb);

  // unit norm preserved by every drift step
  for (std::int32_t u = 0; u < a.n_users; ++u) {
    double norm = 0.0;
    for (int c = 0; c < cfg.dim; ++c) norm += a.user_row(u)[c] * a.user_row(u)[c];
    CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("fit: beats the popularity baseline on patterned data") {
  TemporalSplit split = markov_split(9);
  ModelConfig cfg;
  cfg.dim = 16;
  cfg.epochs = 5;
  cfg.seed = 2;
  SeqEmbModel m = fit(init_model(split.train.n_users, split.train.n_items, cfg), split.train);
  std::vector<RankList> lists = rank_for_test(m, split);

  double model_mrr = 0.0;
  for (std::size_t t = 0; t < lists.size(); ++t)
    model_mrr += reciprocal_rank(lists[t], split.test.interactions[t].item);
  model_mrr /= static_cast<double>(lists.size());

  // oracle: rank items by train count (desc, id asc) and score the same
  // test interactions with that one fixed list
  PopularityIndex pop = item_popularity(split.train);
  RankList pop_list{pop.order, split.train.n_items};
  double pop_mrr = 0.0;
  for (const Interaction& x : split.test.interactions) pop_mrr += reciprocal_rank(pop_list, x.item);
  pop_mrr /= static_cast<double>(split.test.interactions.size());

  CHECK(model_mrr > pop_mrr);
}

TEST_CASE("rank: score ties break by item id") {
  ModelConfig cfg;
  cfg.dim = 1;
  cfg.seed = 1;
  SeqEmbModel m = init_model(1, 10, cfg);
  m.user_row(0)[0] = 1.0;
  for (std::int32_t i = 0; i < 10; ++i) m.item_row(i)[0] = -1.0 - i;
  m.item_row(2)[0] = 2.0;
  m.item_row(7)[0] = 2.0;
  m.item_row(9)[0] = 1.0;

  TemporalSplit split;
  std::vector<Interaction> train_rows = {{0, 0, 0.0, 0}, {0, 1, 1.0, 1}};
  std::vector<Interaction> test_rows = {{0, 2, 2.0, 2}};
  split.train = Dataset::assemble(train_rows, 1, 10);
  split.test = Dataset::assemble(test_rows, 1, 10);

  ModelConfig frozen = cfg;
  SeqEmbModel frozen_model = m;
  frozen_model.config.drift = 0.0;
  std::vector<RankList> lists = rank_for_test(frozen_model, split);
  REQUIRE(lists.size() == 1);
  CHECK(lists[0].items[0] == 2);
  CHECK(lists[0].items[1] == 7);
  CHECK(lists[0].items[2] == 9);

  // full permutation, no duplicates
  CHECK(lists[0].items.size() == 10);
  CHECK(std::set<std::int32_t>(lists[0].items.begin(), lists[0].items.end()).size() == 10);

  // identical model, identical output
  std::vector<RankList> again = rank_for_test(frozen_model, split);
  CHECK(again[0].items == lists[0].items);
}

TEST_CASE("rank: unseen test user falls back to its initial embedding") {
  // user 1 has no training rows; ranking still works
  ModelConfig cfg = small_config();
  std::vector<Interaction> train_rows = {{0, 0, 0.0, 0}, {0, 1, 1.0, 1}};
  std::vector<Interaction> test_rows = {{1, 2, 2.0, 2}, {0, 2, 3.0, 3}};
  TemporalSplit split;
  split.train = Dataset::assemble(train_rows, 2, 3);
  split.test = Dataset::assemble(test_rows, 2, 3);
  SeqEmbModel m = fit(init_model(2, 3, cfg), split.train);
  std::vector<RankList> lists = rank_for_test(m, split);
  CHECK(lists.size() == 2);
  CHECK(lists[0].items.size() == 3);
}

TEST_CASE("fit: poisoned parameters raise a training error") {
  ModelConfig cfg = small_config();
  TemporalSplit split = markov_split(6);
  SeqEmbModel m = init_model(split.train.n_users, split.train.n_items, cfg);
  m.item_emb[3] = std::nan("");
  CHECK_THROWS_AS(fit(m, split.train), TrainingError);
}

TEST_CASE("model checkpoint round-trips bitwise") {
  ModelConfig cfg = small_config();
  cfg.max_seq_len = 40;
  TemporalSplit split = markov_split(12);
  SeqEmbModel m = fit(init_model(split.train.n_users, split.train.n_items, cfg), split.train);

  std::stringstream buffer;
  save_model(m, buffer);
  SeqEmbModel back = load_model(buffer);
  CHECK(back.n_users == m.n_users);
  CHECK(back.n_items == m.n_items);
  CHECK(back.config.dim == m.config.dim);
  CHECK(back.config.max_seq_len == m.config.max_seq_len);
  CHECK(back.user_emb == m.user_emb);
  CHECK(back.item_emb == m.item_emb);

  std::stringstream junk("not a header\n");
  CHECK_THROWS_AS(load_model(junk), ParseError);
}

TEST_CASE("fit: single leave-one-out changes some test list") {
  // the phenomenon under study: one removed row, different rankings
  TemporalSplit split = markov_split(20);
  ModelConfig cfg;
  cfg.dim = 16;
  cfg.epochs = 3;
  cfg.seed = 8;
  SeqEmbModel m = fit(init_model(split.train.n_users, split.train.n_items, cfg), split.train);
  std::vector<RankList> before = rank_for_test(m, split);

  TemporalSplit edited = split;
  std::vector<Interaction> rows = split.train.interactions;
  rows.erase(rows.begin());  // drop the earliest training interaction
  edited.train = Dataset::assemble(std::move(rows), split.train.n_users, split.train.n_items);
  SeqEmbModel m2 = fit(init_model(split.train.n_users, split.train.n_items, cfg), edited.train);
  std::vector<RankList> after = rank_for_test(m2, edited);

  bool any_change = false;
  for (std::size_t t = 0; t < before.size(); ++t)
    if (before[t].items != after[t].items) any_change = true;
  CHECK(any_change);
}
