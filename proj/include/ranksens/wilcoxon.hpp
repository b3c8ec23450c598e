#pragma once

#include <vector>

namespace ranksens {

struct WilcoxonResult {
  double statistic = 0.0;  // min(W+, W-)
  double p_value = 1.0;    // two-sided
  int n_used = 0;          // pairs left after dropping zero differences
  bool exact = false;      // exact sign-permutation distribution vs normal approx
};

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
/// are dropped; tied |differences| get average ranks. Uses the exact
/// permutation distribution for n <= 12 and the normal approximation with
/// continuity and tie corrections above that.
///
/// All differences zero -> p = 1.0. Between 1 and 4 usable pairs the test is
/// underpowered and refused (std::invalid_argument).
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace ranksens
