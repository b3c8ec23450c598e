#include "ranksens/wilcoxon.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>

namespace ranksens {

namespace {

// Average ranks of |d| ascending. Returned doubled (so ties at .5 stay
// integral), which keeps the exact distribution an integer convolution.
std::vector<std::int64_t> doubled_ranks(const std::vector<double>& abs_d) {
  const std::size_t n = abs_d.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return abs_d[a] < abs_d[b]; });
  std::vector<std::int64_t> out(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && abs_d[idx[j + 1]] == abs_d[idx[i]]) ++j;
    // ranks i+1 .. j+1 averaged, doubled: (i+1 + j+1)
    const std::int64_t doubled = static_cast<std::int64_t>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) out[idx[k]] = doubled;
    i = j + 1;
  }
  return out;
}

double normal_sf_two_sided(double z_abs) { return std::erfc(z_abs / std::sqrt(2.0)); }

}  // namespace

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("wilcoxon_signed_rank: samples differ in length");

  std::vector<double> abs_d;
  std::vector<int> sign;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    if (d == 0.0) continue;
    abs_d.push_back(std::fabs(d));
    sign.push_back(d > 0 ? 1 : -1);
  }

  WilcoxonResult res;
  res.n_used = static_cast<int>(abs_d.size());
  if (res.n_used == 0) {
    res.p_value = 1.0;
    res.exact = true;
    return res;
  }
  if (res.n_used < 5)
    throw std::invalid_argument("wilcoxon_signed_rank: need >= 5 nonzero differences");

  const auto ranks2 = doubled_ranks(abs_d);  // doubled average ranks
  std::int64_t w_plus2 = 0, total2 = 0;
  for (std::size_t i = 0; i < ranks2.size(); ++i) {
    total2 += ranks2[i];
    if (sign[i] > 0) w_plus2 += ranks2[i];
  }
  const double w_plus = static_cast<double>(w_plus2) / 2.0;
  const double w_minus = static_cast<double>(total2 - w_plus2) / 2.0;
  res.statistic = std::min(w_plus, w_minus);

  const int n = res.n_used;
  if (n <= 12) {
    // Exact null distribution of 2*W+ by convolution over sign choices.
    res.exact = true;
    std::vector<double> dist(total2 + 1, 0.0);
    dist[0] = 1.0;
    std::int64_t reach = 0;
    for (std::int64_t r : ranks2) {
      for (std::int64_t s = reach; s >= 0; --s) {
        if (dist[s] > 0.0) dist[s + r] += dist[s];
      }
      reach += r;
    }
    // Two-sided: mass at least as far from the center as observed.
    const double center = static_cast<double>(total2) / 2.0;
    const double dev = std::fabs(static_cast<double>(w_plus2) - center);
    double tail = 0.0, all = 0.0;
    for (std::int64_t s = 0; s <= total2; ++s) {
      all += dist[s];
      if (std::fabs(static_cast<double>(s) - center) >= dev - 1e-9) tail += dist[s];
    }
    res.p_value = std::min(1.0, tail / all);
  } else {
    res.exact = false;
    const double nn = static_cast<double>(n);
    const double mu = nn * (nn + 1.0) / 4.0;
    double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
    // Tie correction: sum over groups of (t^3 - t) / 48.
    std::vector<double> sorted(abs_d);
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < sorted.size()) {
      std::size_t j = i;
      while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i + 1);
      var -= (t * t * t - t) / 48.0;
      i = j + 1;
    }
    double z = w_plus - mu;
    // Continuity correction toward the mean.
    if (z > 0.5)
      z -= 0.5;
    else if (z < -0.5)
      z += 0.5;
    else
      z = 0.0;
    res.p_value = std::min(1.0, normal_sf_two_sided(std::fabs(z) / std::sqrt(var)));
  }
  return res;
}

}  // namespace ranksens
