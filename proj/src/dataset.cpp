#include "ranksens/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "ranksens/errors.hpp"
#include "ranksens/rng.hpp"

namespace ranksens {

namespace {

// Stream tags for Rng::keyed so independent draws never share a stream.
enum StreamTag : std::uint64_t {
  kSynthInterleave = 1,
  kSynthStart = 2,
  kSynthRow = 3,
};

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(delim, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double parse_timestamp(const std::string& field, long line_no) {
  const char* first = field.data();
  const char* last = field.data() + field.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  while (last != first && (*(last - 1) == ' ' || *(last - 1) == '\t')) --last;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || first == last)
    throw ParseError("invalid timestamp \"" + field + "\"", line_no);
  return value;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Dataset Dataset::assemble(std::vector<Interaction> rows, std::int32_t n_users,
                          std::int32_t n_items, std::vector<std::string> user_labels,
                          std::vector<std::string> item_labels) {
  Dataset ds;
  ds.interactions = std::move(rows);
  ds.n_users = n_users;
  ds.n_items = n_items;
  ds.user_labels = std::move(user_labels);
  ds.item_labels = std::move(item_labels);
  std::stable_sort(ds.interactions.begin(), ds.interactions.end(),
                   [](const Interaction& a, const Interaction& b) {
                     if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
                     return a.seq_index < b.seq_index;
                   });
  ds.user_sequences.assign(n_users, {});
  ds.item_sequences.assign(n_items, {});
  for (std::size_t i = 0; i < ds.interactions.size(); ++i) {
    const Interaction& x = ds.interactions[i];
    if (x.user < 0 || x.user >= n_users || x.item < 0 || x.item >= n_items)
      throw ValidationError("interaction id out of range");
    ds.user_sequences[x.user].push_back(static_cast<std::int32_t>(i));
    ds.item_sequences[x.item].push_back(static_cast<std::int32_t>(i));
  }
  return ds;
}

ColumnMap ColumnMap::indices(int user, int item, int time, bool header) {
  ColumnMap m;
  m.user_col = user;
  m.item_col = item;
  m.time_col = time;
  m.has_header = header;
  return m;
}

ColumnMap ColumnMap::names(std::string user, std::string item, std::string time) {
  ColumnMap m;
  m.user_name = std::move(user);
  m.item_name = std::move(item);
  m.time_name = std::move(time);
  m.has_header = true;
  return m;
}

Dataset load_interactions(std::istream& source, TextFormat format, const ColumnMap& columns) {
  const char delim = format == TextFormat::csv ? ',' : '\t';
  const bool by_name = columns.user_name.has_value();
  if (by_name && (!columns.item_name || !columns.time_name))
    throw ValidationError("column names must name all of user, item, timestamp");

  std::string line;
  long line_no = 0;
  int user_col = columns.user_col.value_or(0);
  int item_col = columns.item_col.value_or(1);
  int time_col = columns.time_col.value_or(2);

  if (columns.has_header || by_name) {
    if (!std::getline(source, line)) throw ValidationError("empty input");
    ++line_no;
    if (by_name) {
      auto header = split_line(line, delim);
      user_col = item_col = time_col = -1;
      for (std::size_t i = 0; i < header.size(); ++i) {
        std::string h = trim(header[i]);
        if (h == *columns.user_name) user_col = static_cast<int>(i);
        if (h == *columns.item_name) item_col = static_cast<int>(i);
        if (h == *columns.time_name) time_col = static_cast<int>(i);
      }
      if (user_col < 0 || item_col < 0 || time_col < 0)
        throw ParseError("header does not contain the requested columns", 1);
    }
  }

  struct RawRow {
    std::string user, item;
    double timestamp;
  };
  std::vector<RawRow> raw;
  const int max_col = std::max({user_col, item_col, time_col});

  while (std::getline(source, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_line(line, delim);
    if (static_cast<int>(fields.size()) <= max_col)
      throw ParseError("expected at least " + std::to_string(max_col + 1) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    RawRow row;
    row.user = trim(fields[user_col]);
    row.item = trim(fields[item_col]);
    if (row.user.empty() || row.item.empty()) throw ParseError("empty user or item field", line_no);
    row.timestamp = parse_timestamp(fields[time_col], line_no);
    if (row.timestamp < 0) throw ValidationError("line " + std::to_string(line_no) + ": negative timestamp");
    raw.push_back(std::move(row));
  }
  if (raw.empty()) throw ValidationError("empty input");

  // Dense ids in ascending token order; ordered map gives that directly.
  std::map<std::string, std::int32_t> user_ids, item_ids;
  for (const RawRow& r : raw) {
    user_ids.emplace(r.user, 0);
    item_ids.emplace(r.item, 0);
  }
  std::vector<std::string> user_labels, item_labels;
  for (auto& [token, id] : user_ids) {
    id = static_cast<std::int32_t>(user_labels.size());
    user_labels.push_back(token);
  }
  for (auto& [token, id] : item_ids) {
    id = static_cast<std::int32_t>(item_labels.size());
    item_labels.push_back(token);
  }

  std::vector<Interaction> rows;
  rows.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    Interaction x;
    x.user = user_ids[raw[i].user];
    x.item = item_ids[raw[i].item];
    x.timestamp = raw[i].timestamp;
    x.seq_index = static_cast<std::int64_t>(i);
    rows.push_back(x);
  }
  const auto n_users = static_cast<std::int32_t>(user_labels.size());
  const auto n_items = static_cast<std::int32_t>(item_labels.size());
  return Dataset::assemble(std::move(rows), n_users, n_items, std::move(user_labels),
                           std::move(item_labels));
}

Dataset filter_min_activity(const Dataset& ds, int min_count) {
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
  std::vector<std::int64_t> user_counts(ds.n_users, 0);
  for (const Interaction& x : ds.interactions) ++user_counts[x.user];

  std::vector<std::int32_t> new_user(ds.n_users, -1);
  std::vector<std::string> user_labels;
  for (std::int32_t u = 0; u < ds.n_users; ++u) {
    if (user_counts[u] >= min_count) {
      new_user[u] = static_cast<std::int32_t>(user_labels.size());
      user_labels.push_back(u < static_cast<std::int32_t>(ds.user_labels.size())
                                ? ds.user_labels[u]
                                : std::to_string(u));
    }
  }
  if (user_labels.empty()) throw ValidationError("no users survive filter");

  std::vector<bool> item_seen(ds.n_items, false);
  for (const Interaction& x : ds.interactions)
    if (new_user[x.user] >= 0) item_seen[x.item] = true;

  std::vector<std::int32_t> new_item(ds.n_items, -1);
  std::vector<std::string> item_labels;
  for (std::int32_t i = 0; i < ds.n_items; ++i) {
    if (item_seen[i]) {
      new_item[i] = static_cast<std::int32_t>(item_labels.size());
      item_labels.push_back(i < static_cast<std::int32_t>(ds.item_labels.size())
                                ? ds.item_labels[i]
                                : std::to_string(i));
    }
  }

  std::vector<Interaction> rows;
  rows.reserve(ds.interactions.size());
  for (const Interaction& x : ds.interactions) {
    if (new_user[x.user] < 0) continue;
    Interaction y = x;
    y.user = new_user[x.user];
    y.item = new_item[x.item];
    rows.push_back(y);
  }
  const auto n_users = static_cast<std::int32_t>(user_labels.size());
  const auto n_items = static_cast<std::int32_t>(item_labels.size());
  return Dataset::assemble(std::move(rows), n_users, n_items, std::move(user_labels),
                           std::move(item_labels));
}

TemporalSplit temporal_split(const Dataset& ds, double frac) {
  if (!(frac > 0.0 && frac < 1.0)) throw std::invalid_argument("frac must lie in (0,1)");
  for (std::int32_t u = 0; u < ds.n_users; ++u) {
    if (!ds.user_sequences[u].empty() && ds.user_sequences[u].size() < 2)
      throw ValidationError("user " + std::to_string(u) +
                            " has fewer than 2 interactions; filter first");
  }

  std::vector<bool> in_train(ds.interactions.size(), false);
  for (const auto& seq : ds.user_sequences) {
    const auto n = static_cast<std::int64_t>(seq.size());
    // Tiny guard so frac*n that is an integer mathematically is not floored
    // one below by rounding (e.g. 0.7 * 10).
    auto take = static_cast<std::int64_t>(std::floor(frac * static_cast<double>(n) + 1e-9));
    take = std::min(take, n - 1);  // at least one test interaction per user
    for (std::int64_t k = 0; k < take; ++k) in_train[seq[k]] = true;
  }

  std::vector<Interaction> train_rows, test_rows;
  for (std::size_t i = 0; i < ds.interactions.size(); ++i)
    (in_train[i] ? train_rows : test_rows).push_back(ds.interactions[i]);

  TemporalSplit split;
  split.frac = frac;
  split.train = Dataset::assemble(std::move(train_rows), ds.n_users, ds.n_items, ds.user_labels,
                                  ds.item_labels);
  split.test = Dataset::assemble(std::move(test_rows), ds.n_users, ds.n_items, ds.user_labels,
                                 ds.item_labels);
  return split;
}

PopularityIndex item_popularity(const Dataset& train) {
  if (train.interactions.empty()) throw std::invalid_argument("item_popularity: empty train set");
  PopularityIndex pop;
  pop.counts.assign(train.n_items, 0);
  for (const Interaction& x : train.interactions) ++pop.counts[x.item];
  pop.order.resize(train.n_items);
  std::iota(pop.order.begin(), pop.order.end(), 0);
  std::sort(pop.order.begin(), pop.order.end(), [&](std::int32_t a, std::int32_t b) {
    if (pop.counts[a] != pop.counts[b]) return pop.counts[a] > pop.counts[b];
    return a < b;
  });
  return pop;
}

std::vector<double> synth_transition_row(const SynthConfig& cfg, std::uint64_t seed,
                                         std::int32_t user, std::int32_t item) {
  Rng rng = Rng::keyed(seed, (static_cast<std::uint64_t>(user) << 32) | static_cast<std::uint32_t>(item),
                       kSynthRow);
  std::vector<double> row(cfg.n_items);
  double total = 0.0;
  for (double& w : row) {
    w = std::pow(rng.exponential(), cfg.concentration);
    total += w;
  }
  for (double& w : row) w /= total;
  return row;
}

Dataset synth_generate(const SynthConfig& cfg, std::uint64_t seed) {
  if (cfg.n_users < 1 || cfg.n_items < 1 || cfg.events_per_user < 1)
    throw std::invalid_argument("synth_generate: all counts must be >= 1");
  if (cfg.markov_order != 1)
    throw std::invalid_argument("synth_generate: only first-order chains are supported");
  if (cfg.concentration < 0.0)
    throw std::invalid_argument("synth_generate: concentration must be >= 0");

  const std::int64_t total = static_cast<std::int64_t>(cfg.n_users) * cfg.events_per_user;

  // Per-user item streams; transition rows are cached per user while the
  // stream is generated and regenerated on demand elsewhere (synth_transition_row).
  std::vector<std::vector<std::int32_t>> streams(cfg.n_users);
  for (std::int32_t u = 0; u < cfg.n_users; ++u) {
    Rng walk = Rng::keyed(seed, static_cast<std::uint64_t>(u), kSynthStart);
    std::unordered_map<std::int32_t, std::vector<double>> row_cdf;
    auto& stream = streams[u];
    stream.reserve(cfg.events_per_user);
    std::int32_t current = static_cast<std::int32_t>(walk.below(cfg.n_items));
    stream.push_back(current);
    for (std::int32_t e = 1; e < cfg.events_per_user; ++e) {
      auto it = row_cdf.find(current);
      if (it == row_cdf.end()) {
        std::vector<double> cdf = synth_transition_row(cfg, seed, u, current);
        for (std::size_t j = 1; j < cdf.size(); ++j) cdf[j] += cdf[j - 1];
        it = row_cdf.emplace(current, std::move(cdf)).first;
      }
      const std::vector<double>& cdf = it->second;
      const double r = walk.uniform();
      std::int32_t next = static_cast<std::int32_t>(
          std::lower_bound(cdf.begin(), cdf.end(), r) - cdf.begin());
      if (next >= cfg.n_items) next = cfg.n_items - 1;
      current = next;
      stream.push_back(current);
    }
  }

  // Interleave users by a seeded shuffle of the slot multiset; the slot
  // position doubles as the integer timestamp, so per-user timestamps are
  // strictly increasing.
  std::vector<std::int32_t> slots;
  slots.reserve(total);
  for (std::int32_t u = 0; u < cfg.n_users; ++u)
    slots.insert(slots.end(), cfg.events_per_user, u);
  Rng shuf = Rng::keyed(seed, 0, kSynthInterleave);
  for (std::int64_t i = total - 1; i > 0; --i) {
    const auto j = static_cast<std::int64_t>(shuf.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(slots[i], slots[j]);
  }

  std::vector<Interaction> rows;
  rows.reserve(total);
  std::vector<std::int32_t> cursor(cfg.n_users, 0);
  for (std::int64_t t = 0; t < total; ++t) {
    const std::int32_t u = slots[t];
    Interaction x;
    x.user = u;
    x.item = streams[u][cursor[u]++];
    x.timestamp = static_cast<double>(t);
    x.seq_index = t;
    rows.push_back(x);
  }

  std::vector<std::string> user_labels(cfg.n_users), item_labels(cfg.n_items);
  for (std::int32_t u = 0; u < cfg.n_users; ++u) user_labels[u] = std::to_string(u);
  for (std::int32_t i = 0; i < cfg.n_items; ++i) item_labels[i] = std::to_string(i);
  return Dataset::assemble(std::move(rows), cfg.n_users, cfg.n_items, std::move(user_labels),
                           std::move(item_labels));
}

void write_dataset_csv(const Dataset& ds, std::ostream& out) {
  out << "user,item,timestamp\n";
  char buf[64];
  for (const Interaction& x : ds.interactions) {
    const std::string& u = ds.user_labels.empty() ? std::to_string(x.user) : ds.user_labels[x.user];
    const std::string& i = ds.item_labels.empty() ? std::to_string(x.item) : ds.item_labels[x.item];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x.timestamp,
                                 std::chars_format::general, 17);
    out << u << ',' << i << ',' << std::string_view(buf, p - buf) << '\n';
  }
}

void write_id_map_csv(const std::vector<std::string>& labels, std::ostream& out) {
  out << "original_id,dense_id\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out << labels[i] << ',' << i << '\n';
}

}  // namespace ranksens
