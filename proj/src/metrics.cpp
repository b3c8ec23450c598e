#include "ranksens/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <tuple>

namespace ranksens {

namespace {

// Both lists must rank the same full universe. Distinct in-range ids plus
// equal full length imply equal item sets.
void check_full_pair(const RankList& a, const RankList& b) {
  if (a.universe_size != b.universe_size)
    throw std::invalid_argument("rbo: rank lists have different universes");
  if (!a.full() || !b.full())
    throw std::invalid_argument("rbo: both rank lists must be full (length == universe)");
  std::vector<std::uint8_t> seen(a.universe_size, 0);
  for (std::int32_t x : a.items) {
    if (x < 0 || x >= a.universe_size || seen[x])
      throw std::invalid_argument("rbo: list is not a permutation of the universe");
    seen[x] = 1;
  }
  std::fill(seen.begin(), seen.end(), 0);
  for (std::int32_t x : b.items) {
    if (x < 0 || x >= b.universe_size || seen[x])
      throw std::invalid_argument("rbo: list is not a permutation of the universe");
    seen[x] = 1;
  }
}

}  // namespace

std::string to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::rbo: return "rbo";
    case MetricKind::rbo_normalized: return "rbo_normalized";
    case MetricKind::jaccard: return "jaccard";
  }
  return "?";
}

double rbo(const RankList& a, const RankList& b, const RboParams& params) {
  if (!(params.p > 0.0 && params.p < 1.0)) throw std::invalid_argument("rbo: p must lie in (0,1)");
  check_full_pair(a, b);
  const auto n = static_cast<std::int32_t>(a.items.size());
  const double p = params.p;

  // Incremental overlap: one counter updated as each depth adds one item per
  // list, instead of re-intersecting the prefixes.
  std::vector<std::uint8_t> in_a(a.universe_size, 0), in_b(b.universe_size, 0);
  std::int64_t overlap = 0;
  double sum = 0.0;
  double pw = 1.0;  // p^(d-1)
  for (std::int32_t d = 1; d <= n; ++d) {
    const std::int32_t x = a.items[d - 1];
    const std::int32_t y = b.items[d - 1];
    if (x == y) {
      ++overlap;
    } else {
      if (in_b[x]) ++overlap;
      if (in_a[y]) ++overlap;
    }
    in_a[x] = 1;
    in_b[y] = 1;
    sum += pw * static_cast<double>(overlap) / static_cast<double>(d);
    pw *= p;
  }
  return (1.0 - p) * sum;
}

double rbo_normalized(const RankList& a, const RankList& b, const RboParams& params) {
  if (!(params.p > 0.0 && params.p < 1.0)) throw std::invalid_argument("rbo: p must lie in (0,1)");
  check_full_pair(a, b);
  // The contract pins identical lists to exactly 1.0; dividing the two
  // float sums would land within ~1e-15 of it but not on it.
  if (a.items == b.items) return 1.0;
  const double denom = 1.0 - std::pow(params.p, static_cast<double>(a.items.size()));
  return rbo(a, b, params) / denom;
}

double jaccard_top_k(const RankList& a, const RankList& b, int k) {
  if (k < 1) throw std::invalid_argument("jaccard_top_k: K must be >= 1");
  if (static_cast<int>(a.items.size()) < k || static_cast<int>(b.items.size()) < k)
    throw std::invalid_argument("jaccard_top_k: K exceeds a list length");
  const std::int32_t cap = std::max(a.universe_size, b.universe_size);
  std::vector<std::uint8_t> in_a(cap, 0), in_b(cap, 0);
  for (int i = 0; i < k; ++i) {
    const std::int32_t x = a.items[i];
    const std::int32_t y = b.items[i];
    if (x < 0 || x >= cap || in_a[x] || y < 0 || y >= cap || in_b[y])
      throw std::invalid_argument("jaccard_top_k: invalid or duplicate item");
    in_a[x] = 1;
    in_b[y] = 1;
  }
  std::int64_t inter = 0;
  for (int i = 0; i < k; ++i)
    if (in_a[b.items[i]]) ++inter;
  const std::int64_t uni = 2 * static_cast<std::int64_t>(k) - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double reciprocal_rank(const RankList& list, std::int32_t truth) {
  for (std::size_t i = 0; i < list.items.size(); ++i)
    if (list.items[i] == truth) return 1.0 / static_cast<double>(i + 1);
  throw std::invalid_argument("reciprocal_rank: truth item not in list");
}

double recall_at_k(const RankList& list, std::int32_t truth, int k) {
  if (k < 1) throw std::invalid_argument("recall_at_k: K must be >= 1");
  for (std::size_t i = 0; i < list.items.size(); ++i)
    if (list.items[i] == truth) return static_cast<int>(i) < k ? 1.0 : 0.0;
  throw std::invalid_argument("recall_at_k: truth item not in list");
}

std::pair<double, double> mean_stddev(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  return {mean, std::sqrt(var)};
}

RlsReport aggregate_rls(const std::vector<std::pair<RankList, RankList>>& pairs,
                        MetricKind kind, const RboParams& params, int k) {
  if (pairs.empty()) throw std::invalid_argument("aggregate_rls: empty input");
  RlsReport report;
  report.metric_kind = kind;
  report.p = params.p;
  report.k = k;
  report.per_pair.reserve(pairs.size());
  for (const auto& [a, b] : pairs) {
    double score = 0.0;
    switch (kind) {
      case MetricKind::rbo: score = rbo(a, b, params); break;
      case MetricKind::rbo_normalized: score = rbo_normalized(a, b, params); break;
      case MetricKind::jaccard: score = jaccard_top_k(a, b, k); break;
    }
    report.per_pair.push_back(score);
  }
  std::tie(report.mean, report.stddev) = mean_stddev(report.per_pair);
  return report;
}

}  // namespace ranksens
