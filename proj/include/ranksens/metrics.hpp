#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ranksens {

/// An ordering of distinct item ids for one test interaction. A "full" list
/// ranks the whole universe (length == universe_size).
struct RankList {
  std::vector<std::int32_t> items;
  std::int32_t universe_size = 0;

  std::size_t size() const { return items.size(); }
  bool full() const { return static_cast<std::int32_t>(items.size()) == universe_size; }
};

struct RboParams {
  double p = 0.9;  // persistence; weight of depth d is (1-p) p^(d-1)
};

enum class MetricKind { rbo, rbo_normalized, jaccard };

std::string to_string(MetricKind kind);

/// Rank-biased overlap of two full rank lists over the same universe,
/// truncated at |I|:  (1-p) * sum_{d=1..|I|} p^(d-1) * |A[1:d] n B[1:d]| / d.
/// Identical lists score 1 - p^|I|, not 1. O(|I|) time.
double rbo(const RankList& a, const RankList& b, const RboParams& params = {});

/// rbo / (1 - p^|I|), so identical lists score exactly 1.0.
double rbo_normalized(const RankList& a, const RankList& b, const RboParams& params = {});

/// Order-agnostic overlap of the two top-K prefixes: |inter| / |union|.
double jaccard_top_k(const RankList& a, const RankList& b, int k);

/// 1 / (1-based rank of `truth`); throws if truth is absent.
double reciprocal_rank(const RankList& list, std::int32_t truth);

/// 1.0 when `truth` ranks within the top K, else 0.0.
double recall_at_k(const RankList& list, std::int32_t truth, int k = 10);

/// Scores for a batch of aligned (before, after) rank-list pairs plus their
/// mean and population standard deviation.
struct RlsReport {
  std::vector<double> per_pair;  // input order
  double mean = 0.0;
  double stddev = 0.0;  // population
  MetricKind metric_kind = MetricKind::rbo;
  double p = 0.9;
  int k = 10;
};

RlsReport aggregate_rls(const std::vector<std::pair<RankList, RankList>>& pairs,
                        MetricKind kind, const RboParams& params = {}, int k = 10);

/// Mean and population standard deviation of a score vector.
std::pair<double, double> mean_stddev(const std::vector<double>& xs);

}  // namespace ranksens
