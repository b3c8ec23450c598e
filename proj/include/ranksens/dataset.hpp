#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ranksens {

/// One (user, item, timestamp) event. `seq_index` is the position of the row
/// in the originally ingested stream and breaks ties between equal
/// timestamps, so every dataset has a total temporal order.
struct Interaction {
  std::int32_t user = 0;
  std::int32_t item = 0;
  double timestamp = 0.0;
  std::int64_t seq_index = 0;
};

/// Immutable interaction log. `interactions` is sorted by
/// (timestamp, seq_index); per-user and per-item sequences hold indices into
/// `interactions` in that same order. `n_users` / `n_items` are the size of
/// the dense id space (a split keeps the parent universe, so a part may not
/// contain every id).
struct Dataset {
  std::vector<Interaction> interactions;
  std::vector<std::vector<std::int32_t>> user_sequences;
  std::vector<std::vector<std::int32_t>> item_sequences;
  std::int32_t n_users = 0;
  std::int32_t n_items = 0;
  std::vector<std::string> user_labels;  // dense id -> original token
  std::vector<std::string> item_labels;

  std::size_t size() const { return interactions.size(); }

  /// Sorts rows by (timestamp, seq_index) and rebuilds the per-user/per-item
  /// sequences. Ids must already be dense in [0, n_users) x [0, n_items).
  static Dataset assemble(std::vector<Interaction> rows, std::int32_t n_users,
                          std::int32_t n_items, std::vector<std::string> user_labels = {},
                          std::vector<std::string> item_labels = {});
};

struct TemporalSplit {
  Dataset train;
  Dataset test;
  double frac = 0.9;
};

/// Item occurrence counts over a training set. `order` holds every item of
/// the universe sorted by (count desc, item id asc); items absent from the
/// training data count 0.
struct PopularityIndex {
  std::vector<std::int64_t> counts;
  std::vector<std::int32_t> order;
};

enum class TextFormat { csv, tsv };

/// Which columns hold user / item / timestamp. Either 0-based indices
/// (header optional, skipped when `has_header`) or column names (implies a
/// header row).
struct ColumnMap {
  std::optional<int> user_col, item_col, time_col;          // indices
  std::optional<std::string> user_name, item_name, time_name;  // names
  bool has_header = false;

  static ColumnMap indices(int user, int item, int time, bool header = false);
  static ColumnMap names(std::string user, std::string item, std::string time);
};

/// Parses a UTF-8 CSV/TSV stream into a Dataset. Original user/item tokens
/// are remapped to dense ids assigned in ascending (lexicographic) token
/// order; the token tables are retained on the Dataset. Rows end up sorted
/// by (timestamp, input row order).
Dataset load_interactions(std::istream& source, TextFormat format, const ColumnMap& columns);

/// Drops users with fewer than `min_count` interactions, then items left with
/// zero interactions; surviving ids are re-densified in ascending old-id
/// order. Throws ValidationError when nothing survives.
Dataset filter_min_activity(const Dataset& ds, int min_count = 10);

/// Per-user prefix split: the first floor(frac*n) interactions of each user
/// go to train, the rest to test. Every user must have at least 2
/// interactions. Both parts keep the parent id universe.
TemporalSplit temporal_split(const Dataset& ds, double frac = 0.9);

PopularityIndex item_popularity(const Dataset& train);

/// Synthetic log: each user walks a first-order Markov chain over items whose
/// transition rows are fixed by (seed, user, item); events from all users are
/// interleaved by a seeded shuffle and timestamped 0,1,2,... in stream order.
struct SynthConfig {
  std::int32_t n_users = 200;
  std::int32_t n_items = 100;
  std::int32_t events_per_user = 100;
  int markov_order = 1;
  /// Row peakedness: 0 gives uniform rows, larger values concentrate each
  /// row's mass on a few successor items.
  double concentration = 4.0;
};

Dataset synth_generate(const SynthConfig& cfg, std::uint64_t seed);

/// The transition row the generator uses for `user` when its current item is
/// `item` (probabilities over the next item). Exposed so frequency tests can
/// compare observed transitions against the sampled chain.
std::vector<double> synth_transition_row(const SynthConfig& cfg, std::uint64_t seed,
                                         std::int32_t user, std::int32_t item);

/// Writers for the CLI: dataset rows as "user,item,timestamp" CSV and the
/// original->dense id mapping sidecar.
void write_dataset_csv(const Dataset& ds, std::ostream& out);
void write_id_map_csv(const std::vector<std::string>& labels, std::ostream& out);

}  // namespace ranksens
