#include "ranksens/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "ranksens/errors.hpp"
#include "ranksens/rng.hpp"

namespace ranksens {

namespace {

enum StreamTag : std::uint64_t {
  kModelInit = 21,
  kNegative = 22,
};

double dot(const double* a, const double* b, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += a[i] * b[i];
  return s;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Normalize in place; returns false (row untouched) when the norm is
// numerically zero.
bool normalize(double* row, int d) {
  const double norm = std::sqrt(dot(row, row, d));
  if (!(norm >= 1e-12)) return std::isfinite(norm) ? false : throw TrainingError("non-finite norm");
  for (int i = 0; i < d; ++i) row[i] /= norm;
  return true;
}

}  // namespace

SeqEmbModel init_model(std::int32_t n_users, std::int32_t n_items, const ModelConfig& cfg) {
  if (n_users < 1 || n_items < 1) throw std::invalid_argument("init_model: counts must be >= 1");
  if (cfg.dim < 1 || cfg.learning_rate < 0.0 || cfg.epochs < 1 || cfg.negatives < 1 ||
      cfg.drift < 0.0 || cfg.drift > 1.0)
    throw std::invalid_argument("init_model: invalid config");

  SeqEmbModel m;
  m.n_users = n_users;
  m.n_items = n_items;
  m.config = cfg;
  const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.dim));
  Rng rng = Rng::keyed(cfg.seed, 0, kModelInit);
  m.user_emb.resize(static_cast<std::size_t>(n_users) * cfg.dim);
  m.item_emb.resize(static_cast<std::size_t>(n_items) * cfg.dim);
  for (double& v : m.user_emb) v = rng.uniform(-bound, bound);
  for (double& v : m.item_emb) v = rng.uniform(-bound, bound);
  for (std::int32_t u = 0; u < n_users; ++u) normalize(m.user_row(u), cfg.dim);
  return m;
}

SeqEmbModel fit(SeqEmbModel model, const Dataset& train) {
  const int d = model.config.dim;
  const double lr = model.config.learning_rate;
  const double a = model.config.drift;
  // Zero rates make every update the identity; returning early keeps the
  // result bit-equal to the initial parameters.
  if (lr == 0.0 && a == 0.0) return model;
  const auto total = static_cast<std::int32_t>(train.interactions.size());

  // Participation and successor item under the optional max_seq_len window.
  std::vector<std::uint8_t> participates(total, 1);
  std::vector<std::int32_t> next_item(total, -1);
  for (const auto& seq : train.user_sequences) {
    std::size_t start = 0;
    if (model.config.max_seq_len && seq.size() > static_cast<std::size_t>(*model.config.max_seq_len))
      start = seq.size() - static_cast<std::size_t>(*model.config.max_seq_len);
    for (std::size_t k = 0; k < start; ++k) participates[seq[k]] = 0;
    for (std::size_t k = start; k + 1 < seq.size(); ++k)
      next_item[seq[k]] = train.interactions[seq[k + 1]].item;
  }

  std::vector<double> u_old(d), diff(d), mixed(d);
  for (int epoch = 0; epoch < model.config.epochs; ++epoch) {
    Rng neg = Rng::keyed(model.config.seed, static_cast<std::uint64_t>(epoch), kNegative);
    for (std::int32_t idx = 0; idx < total; ++idx) {
      if (!participates[idx]) continue;
      const Interaction& x = train.interactions[idx];
      double* u = model.user_row(x.user);
      const std::int32_t j = next_item[idx];
      if (j >= 0) {
        for (int rep = 0; rep < model.config.negatives; ++rep) {
          const auto r = static_cast<std::int32_t>(neg.below(model.n_items - 1));
          const std::int32_t n = r >= j ? r + 1 : r;
          double* vj = model.item_row(j);
          double* vn = model.item_row(n);
          for (int c = 0; c < d; ++c) diff[c] = vj[c] - vn[c];
          const double s = sigmoid(dot(u, diff.data(), d));
          if (!std::isfinite(s))
            throw TrainingError("non-finite score at epoch " + std::to_string(epoch) + ", step " +
                                std::to_string(idx));
          const double g = lr * (1.0 - s);
          std::copy(u, u + d, u_old.begin());
          for (int c = 0; c < d; ++c) u[c] += g * diff[c];
          for (int c = 0; c < d; ++c) vj[c] += g * u_old[c];
          for (int c = 0; c < d; ++c) vn[c] -= g * u_old[c];
        }
      }
      const double* vi = model.item_row(x.item);
      for (int c = 0; c < d; ++c) mixed[c] = (1.0 - a) * u[c] + a * vi[c];
      bool ok;
      try {
        ok = normalize(mixed.data(), d);
      } catch (const TrainingError&) {
        throw TrainingError("non-finite embedding at epoch " + std::to_string(epoch) + ", step " +
                            std::to_string(idx));
      }
      if (ok) std::copy(mixed.begin(), mixed.end(), u);
    }
  }
  return model;
}

std::vector<RankList> rank_for_test(const SeqEmbModel& model, const TemporalSplit& split) {
  const int d = model.config.dim;
  std::vector<double> user_state(model.user_emb);  // test-time drift is local
  std::vector<RankList> lists;
  lists.reserve(split.test.interactions.size());

  std::vector<double> scores(model.n_items);
  std::vector<std::int32_t> order(model.n_items);
  std::vector<double> mixed(d);
  for (const Interaction& x : split.test.interactions) {
    double* u = user_state.data() + static_cast<std::size_t>(x.user) * d;
    for (std::int32_t i = 0; i < model.n_items; ++i) scores[i] = dot(u, model.item_row(i), d);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::int32_t p, std::int32_t q) {
      if (scores[p] != scores[q]) return scores[p] > scores[q];
      return p < q;
    });
    lists.push_back(RankList{order, model.n_items});

    const double* vi = model.item_row(x.item);
    const double a = model.config.drift;
    for (int c = 0; c < d; ++c) mixed[c] = (1.0 - a) * u[c] + a * vi[c];
    if (normalize(mixed.data(), d)) std::copy(mixed.begin(), mixed.end(), u);
  }
  return lists;
}

void save_model(const SeqEmbModel& model, std::ostream& out) {
  nlohmann::json header;
  header["format"] = "ranksens.model";
  header["version"] = 1;
  header["n_users"] = model.n_users;
  header["n_items"] = model.n_items;
  header["dim"] = model.config.dim;
  header["config"] = {
      {"learning_rate", model.config.learning_rate},
      {"drift", model.config.drift},
      {"epochs", model.config.epochs},
      {"negatives", model.config.negatives},
      {"max_seq_len",
       model.config.max_seq_len ? nlohmann::json(*model.config.max_seq_len) : nlohmann::json(nullptr)},
      {"seed", model.config.seed},
  };
  out << header.dump() << '\n';

  char buf[64];
  auto write_matrix = [&](const std::vector<double>& mat, std::int32_t rows) {
    for (std::int32_t r = 0; r < rows; ++r) {
      for (int c = 0; c < model.config.dim; ++c) {
        const double v = mat[static_cast<std::size_t>(r) * model.config.dim + c];
        auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::scientific, 16);
        if (c) out << ',';
        out << std::string_view(buf, p - buf);
      }
      out << '\n';
    }
  };
  write_matrix(model.user_emb, model.n_users);
  write_matrix(model.item_emb, model.n_items);
}

SeqEmbModel load_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("model checkpoint: missing header", 1);
  nlohmann::json header = nlohmann::json::parse(line, nullptr, false);
  if (header.is_discarded() || header.value("format", "") != "ranksens.model")
    throw ParseError("model checkpoint: bad header", 1);
  if (header.value("version", 0) != 1)
    throw ValidationError("model checkpoint: unsupported version");

  SeqEmbModel m;
  m.n_users = header.at("n_users").get<std::int32_t>();
  m.n_items = header.at("n_items").get<std::int32_t>();
  m.config.dim = header.at("dim").get<int>();
  const auto& cfg = header.at("config");
  m.config.learning_rate = cfg.at("learning_rate").get<double>();
  m.config.drift = cfg.at("drift").get<double>();
  m.config.epochs = cfg.at("epochs").get<int>();
  m.config.negatives = cfg.at("negatives").get<int>();
  if (!cfg.at("max_seq_len").is_null())
    m.config.max_seq_len = cfg.at("max_seq_len").get<std::int32_t>();
  m.config.seed = cfg.at("seed").get<std::uint64_t>();

  auto read_matrix = [&](std::vector<double>& mat, std::int32_t rows, long base_line) {
    mat.resize(static_cast<std::size_t>(rows) * m.config.dim);
    for (std::int32_t r = 0; r < rows; ++r) {
      if (!std::getline(in, line)) throw ParseError("model checkpoint: truncated", base_line + r + 1);
      const char* ptr = line.data();
      const char* end = line.data() + line.size();
      for (int c = 0; c < m.config.dim; ++c) {
        if (c) {
          if (ptr >= end || *ptr != ',')
            throw ParseError("model checkpoint: bad row", base_line + r + 1);
          ++ptr;
        }
        double v = 0.0;
        auto [next, ec] = std::from_chars(ptr, end, v);
        if (ec != std::errc()) throw ParseError("model checkpoint: bad value", base_line + r + 1);
        mat[static_cast<std::size_t>(r) * m.config.dim + c] = v;
        ptr = next;
      }
    }
  };
  read_matrix(m.user_emb, m.n_users, 1);
  read_matrix(m.item_emb, m.n_items, 1 + m.n_users);
  return m;
}

}  // namespace ranksens
