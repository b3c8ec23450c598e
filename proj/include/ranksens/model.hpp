#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ranksens/dataset.hpp"
#include "ranksens/metrics.hpp"

namespace ranksens {

struct ModelConfig {
  int dim = 32;
  double learning_rate = 0.05;
  double drift = 0.3;  // recurrent mixing weight toward the consumed item
  int epochs = 5;
  int negatives = 1;
  std::optional<std::int32_t> max_seq_len;
  std::uint64_t seed = 1;
};

/// Embedding recommender trained by temporally-ordered online updates. The
/// whole point of this model is determinism: two fits with identical data,
/// config, and seed produce bit-identical parameters, so any rank-list
/// divergence between two runs is attributable to the training-data edit
/// alone. User rows keep unit L2 norm after every recurrent update.
struct SeqEmbModel {
  std::int32_t n_users = 0;
  std::int32_t n_items = 0;
  ModelConfig config;
  std::vector<double> user_emb;  // row-major n_users x dim
  std::vector<double> item_emb;  // row-major n_items x dim

  double* user_row(std::int32_t u) { return user_emb.data() + static_cast<std::size_t>(u) * config.dim; }
  const double* user_row(std::int32_t u) const {
    return user_emb.data() + static_cast<std::size_t>(u) * config.dim;
  }
  double* item_row(std::int32_t i) { return item_emb.data() + static_cast<std::size_t>(i) * config.dim; }
  const double* item_row(std::int32_t i) const {
    return item_emb.data() + static_cast<std::size_t>(i) * config.dim;
  }
};

/// Seeded uniform init in [-1/sqrt(d), 1/sqrt(d)]; user rows normalized.
SeqEmbModel init_model(std::int32_t n_users, std::int32_t n_items, const ModelConfig& cfg);

/// One pass per epoch over the training interactions in global
/// (timestamp, seq_index) order, single-threaded:
///   - when the user has a later participating interaction with item j, a
///     BPR-style step against a seeded negative n != j:
///       s      = sigmoid(u . (v_j - v_n))
///       u     += lr (1-s) (v_j - v_n)
///       v_j   += lr (1-s) u_old
///       v_n   -= lr (1-s) u_old
///   - then the recurrent drift u = normalize((1-a) u + a v_i) with the
///     current item i (kept unchanged if the mix is numerically zero).
/// With max_seq_len L, only each user's latest L interactions participate.
/// The negative stream restarts at each epoch keyed by (seed, epoch), so an
/// edit at time t leaves every pre-t draw of every epoch identical.
SeqEmbModel fit(SeqEmbModel model, const Dataset& train);

/// Full rank list (all items, score desc, ties by item id asc) emitted before
/// each test interaction in global order; after emitting, the user state
/// drifts with the consumed item (no gradient updates at test time). The
/// returned lists align 1:1 with split.test.interactions. Users absent from
/// train rank from their initial embedding.
std::vector<RankList> rank_for_test(const SeqEmbModel& model, const TemporalSplit& split);

/// Checkpoint: a one-line JSON header followed by one CSV row per embedding
/// row, doubles at round-trip precision.
void save_model(const SeqEmbModel& model, std::ostream& out);
SeqEmbModel load_model(std::istream& in);

}  // namespace ranksens
