#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ranksens/dataset.hpp"
#include "ranksens/model.hpp"
#include "ranksens/perturb.hpp"

namespace ranksens {

/// Where the interaction log comes from: a synthetic generator (regenerated
/// per experiment seed) or a file (loaded once, shared across seeds).
struct DataSpec {
  std::optional<SynthConfig> synth;
  std::optional<std::string> file;
  TextFormat format = TextFormat::csv;
  ColumnMap columns;
};

struct ExperimentConfig {
  DataSpec data;
  int min_activity = 10;
  double split_frac = 0.9;
  ModelConfig model;
  /// kind absent means "no edit": the second model retrains on identical
  /// data, which is exactly the determinism control.
  PerturbationSpec perturb;
  double rbo_p = 0.9;
  int top_k = 10;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  int jobs = 1;
  /// When set, the second model initializes from this seed instead of the
  /// experiment seed (negative control for the determinism check).
  std::optional<std::uint64_t> mprime_seed_override;
};

/// The frozen desk-scale benchmark: 200 users x 100 items x 100 events/user.
ExperimentConfig standard_benchmark();

std::string experiment_config_to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_config_from_json(const std::string& text);

struct TargetInfo {
  std::int32_t user = 0;
  std::int32_t item = 0;
  double timestamp = 0.0;
  std::int64_t seq_index = 0;
  std::string kind;
  std::optional<std::int32_t> new_item;
};

struct SeedStats {
  std::uint64_t seed = 0;
  double rbo_mean = 0.0;
  double rbo_norm_mean = 0.0;
  double jaccard_mean = 0.0;
  double mrr_m = 0.0;
  double mrr_mprime = 0.0;
  double recall_m = 0.0;
  double recall_mprime = 0.0;
  std::vector<TargetInfo> targets;
};

struct PerTestRow {
  std::uint64_t seed = 0;
  std::int64_t test_index = 0;  // position in split.test.interactions
  std::int32_t user = 0;
  std::int32_t item = 0;
  double rbo = 0.0, rbo_norm = 0.0, jaccard = 0.0;
  double rr_m = 0.0, rr_mprime = 0.0;
};

struct UserStats {
  std::int32_t user = 0;
  std::int64_t n_scores = 0;  // test interactions x seeds
  double mrr = 0.0;           // of the unperturbed model
  double rbo = 0.0, rbo_norm = 0.0, jaccard = 0.0;
};

struct GroupStats {
  std::string name;  // high / mid / low
  std::int64_t n_users = 0;
  double mrr = 0.0;
  double rbo = 0.0, rbo_norm = 0.0, jaccard = 0.0;
};

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // population, across seeds
};

struct StabilityReport {
  std::string config_json;  // provenance echo
  double rbo_p = 0.9;
  int top_k = 10;
  std::vector<SeedStats> per_seed;
  MeanStd rbo, rbo_norm, jaccard;
  MeanStd mrr_m, mrr_mprime, recall_m, recall_mprime;
  std::vector<PerTestRow> per_test;
  std::vector<UserStats> per_user;  // pooled across seeds, sorted by user id
  std::vector<GroupStats> groups;   // 20/60/20 by per-user MRR
  bool mrr_ties_fallback = false;   // per-user MRR ties decided group order
  bool is_control = false;
  bool control_pass = true;
  std::optional<std::uint64_t> mismatch_seed;  // first control mismatch
  std::optional<std::int64_t> mismatch_test_index;
};

/// Trains the model twice on the unperturbed data and checks every aligned
/// test pair for rbo_normalized == 1 and jaccard@K == 1. Any mismatch means
/// training nondeterminism and is flagged (not thrown).
StabilityReport run_control(const ExperimentConfig& cfg);

/// Full protocol per seed: build data, fit and rank the reference model,
/// pick and apply the perturbation, fit and rank the edited model with the
/// same seed, score every aligned test pair, then aggregate across seeds.
StabilityReport run_stability(const ExperimentConfig& cfg);

/// 20/60/20 split of users by mean MRR (high / mid / low), ties by user id.
/// Means are user-weighted within each group. Requires >= 5 users.
std::vector<GroupStats> user_group_breakdown(const StabilityReport& report);

struct StrategyPairTest {
  TargetVariant a, b;
  double statistic = 0.0;
  double p_value = 1.0;
  bool skipped = false;  // fewer than 5 usable pairs
  std::string note;
};

struct CompareResult {
  std::vector<TargetVariant> strategies;
  std::vector<StabilityReport> reports;  // aligned with strategies
  std::vector<StrategyPairTest> tests;   // all unordered pairs
  std::vector<std::string> warnings;
};

/// Runs every strategy on the same seeds (sharing the per-seed reference
/// model) and compares per-seed mean RBO distributions pairwise with the
/// Wilcoxon signed-rank test.
CompareResult compare_strategies(const ExperimentConfig& cfg,
                                 const std::vector<TargetVariant>& strategies);

struct SweepResult {
  std::vector<int> ks;
  std::vector<StabilityReport> reports;  // aligned with ks
};

/// CASPER-only sweep over perturbation counts; the reference model is fitted
/// once per seed and reused for every k.
SweepResult sweep_k(const ExperimentConfig& cfg, const std::vector<int>& ks);

struct BenchRow {
  std::int64_t requested_size = 0;
  std::int64_t actual_size = 0;
  std::int32_t n_users = 0;
  int trials = 0;
  double idag_ms_median = 0.0, idag_ms_min = 0.0, idag_ms_max = 0.0;
  double pipeline_ms_median = 0.0, pipeline_ms_min = 0.0, pipeline_ms_max = 0.0;
};

struct BenchConfig {
  std::int32_t n_users = 200;  // held fixed; events per user scale with size
  std::int32_t n_items = 100;
  double concentration = 4.0;
  int trials = 3;
  ModelConfig model;
};

/// For each interaction count: generate data, time (a) dependency-graph
/// build + cascading scores and (b) the full casper LOO pipeline (fit, rank,
/// select, edit, refit, rerank, score). Generation itself is not timed.
std::vector<BenchRow> runtime_benchmark(const std::vector<std::int64_t>& sizes,
                                        const BenchConfig& bench = {});

// --- report serialization -------------------------------------------------

std::string report_to_json(const StabilityReport& report);
StabilityReport report_from_json(const std::string& text);
std::string compare_to_json(const CompareResult& result);
std::string sweep_to_json(const SweepResult& result);

void write_per_seed_csv(const StabilityReport& report, std::ostream& out);
void write_per_test_csv(const StabilityReport& report, std::ostream& out);
void write_per_user_csv(const StabilityReport& report, std::ostream& out);
void write_per_group_csv(const StabilityReport& report, std::ostream& out);
/// Tidy "strategy,seed,rbo_mean,..." rows for plotting strategy comparisons.
void write_compare_csv(const CompareResult& result, std::ostream& out);
/// Tidy "k,seed,jaccard_mean,..." rows for plotting k sweeps.
void write_sweep_csv(const SweepResult& result, std::ostream& out);
void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out);

/// Writes report.json plus the per-seed/test/user/group CSVs into `dir`.
void write_report_files(const StabilityReport& report, const std::string& dir);

}  // namespace ranksens
