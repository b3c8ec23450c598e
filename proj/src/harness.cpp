#include "ranksens/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "ranksens/errors.hpp"
#include "ranksens/idag.hpp"
#include "ranksens/metrics.hpp"
#include "ranksens/rng.hpp"
#include "ranksens/wilcoxon.hpp"

namespace ranksens {

namespace {

enum StreamTag : std::uint64_t {
  kItemSeedDerive = 31,
};

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  return Rng::keyed(seed, salt, kItemSeedDerive).next_u64();
}

Dataset make_base_data(const ExperimentConfig& cfg, std::uint64_t seed,
                       const Dataset* file_data) {
  Dataset base;
  if (cfg.data.synth) {
    base = synth_generate(*cfg.data.synth, seed);
  } else if (file_data) {
    base = *file_data;
  } else {
    throw ValidationError("experiment config names neither synthetic nor file data");
  }
  return filter_min_activity(base, cfg.min_activity);
}

Dataset load_file_data(const ExperimentConfig& cfg) {
  std::ifstream in(*cfg.data.file);
  if (!in) throw ValidationError("cannot open input file: " + *cfg.data.file);
  return load_interactions(in, cfg.data.format, cfg.data.columns);
}

struct PreparedSeed {
  std::uint64_t seed = 0;
  TemporalSplit split;
  SeqEmbModel m;
  std::vector<RankList> lists_m;
  std::vector<double> rr_m;  // reciprocal rank per test interaction
};

PreparedSeed prepare_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                          const Dataset* file_data) {
  PreparedSeed ps;
  ps.seed = seed;
  Dataset base = make_base_data(cfg, seed, file_data);
  ps.split = temporal_split(base, cfg.split_frac);

  ModelConfig mc = cfg.model;
  mc.seed = seed;
  ps.m = fit(init_model(base.n_users, base.n_items, mc), ps.split.train);
  ps.lists_m = rank_for_test(ps.m, ps.split);
  ps.rr_m.reserve(ps.lists_m.size());
  for (std::size_t t = 0; t < ps.lists_m.size(); ++t)
    ps.rr_m.push_back(reciprocal_rank(ps.lists_m[t], ps.split.test.interactions[t].item));
  return ps;
}

struct EditPlan {
  Dataset perturbed;
  std::vector<TargetInfo> targets;
};

// Applies cfg.perturb (with the strategy/k overrides used by compare and
// sweep) to a prepared training set. Targets are chosen on the original
// data; edits are applied from the latest position backwards so earlier
// positions stay valid.
EditPlan plan_edits(const ExperimentConfig& cfg, const PreparedSeed& ps,
                    TargetVariant variant, int k, const Idag* graph,
                    const CascadeScores* scores) {
  EditPlan plan;
  const Dataset& train = ps.split.train;
  if (!cfg.perturb.kind) {
    plan.perturbed = train;
    return plan;
  }
  const EditKind kind = *cfg.perturb.kind;

  TargetStrategy strategy;
  strategy.variant = variant;
  strategy.k = k;
  strategy.seed = ps.seed;

  std::optional<Idag> local_graph;
  std::optional<CascadeScores> local_scores;
  if (variant == TargetVariant::casper && !graph) {
    local_graph = build_idag(train, cfg.model.max_seq_len);
    local_scores = cascading_scores(*local_graph);
    graph = &*local_graph;
    scores = &*local_scores;
  }
  std::vector<std::int32_t> targets = choose_targets(train, strategy, graph, scores);

  std::optional<PopularityIndex> pop;
  if (kind != EditKind::loo) pop = item_popularity(train);
  const ItemStrategy item_strategy = cfg.perturb.item_strategy.value_or(ItemStrategy::random);

  // Item choices keyed by ascending target position for reproducibility.
  std::vector<std::size_t> order(targets.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return targets[a] < targets[b]; });

  std::vector<Perturbation> edits(targets.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const std::size_t ti = order[rank];
    Perturbation p;
    p.kind = kind;
    p.target = targets[ti];
    if (kind != EditKind::loo) {
      p.item_strategy = item_strategy;
      p.new_item = choose_item(*pop, item_strategy, {train.interactions[p.target].item},
                               derive_seed(ps.seed, rank));
    }
    edits[ti] = p;

    const Interaction& x = train.interactions[p.target];
    TargetInfo info;
    info.user = x.user;
    info.item = x.item;
    info.timestamp = x.timestamp;
    info.seq_index = x.seq_index;
    info.kind = to_string(kind);
    info.new_item = p.new_item;
    plan.targets.push_back(info);
  }

  std::sort(edits.begin(), edits.end(),
            [](const Perturbation& a, const Perturbation& b) { return a.target > b.target; });
  Dataset current = train;
  for (const Perturbation& p : edits) current = apply(current, p);
  plan.perturbed = std::move(current);
  return plan;
}

struct SeedOutcome {
  SeedStats stats;
  std::vector<PerTestRow> per_test;
  bool control_pass = true;
  std::int64_t first_mismatch = -1;
};

SeedOutcome score_seed(const ExperimentConfig& cfg, const PreparedSeed& ps,
                       const EditPlan& plan, bool as_control) {
  SeedOutcome out;
  out.stats.seed = ps.seed;
  out.stats.targets = plan.targets;

  ModelConfig mc = cfg.model;
  mc.seed = cfg.mprime_seed_override.value_or(ps.seed);
  TemporalSplit edited_split;
  edited_split.frac = ps.split.frac;
  edited_split.train = plan.perturbed;
  edited_split.test = ps.split.test;
  SeqEmbModel m2 = fit(init_model(ps.split.train.n_users, ps.split.train.n_items, mc),
                       edited_split.train);
  std::vector<RankList> lists_m2 = rank_for_test(m2, edited_split);

  const RboParams params{cfg.rbo_p};
  const auto n_test = static_cast<std::int64_t>(ps.lists_m.size());
  double sum_rbo = 0, sum_norm = 0, sum_jac = 0;
  double sum_rr_m = 0, sum_rr_m2 = 0, sum_rec_m = 0, sum_rec_m2 = 0;
  out.per_test.reserve(n_test);
  for (std::int64_t t = 0; t < n_test; ++t) {
    const Interaction& x = ps.split.test.interactions[t];
    PerTestRow row;
    row.seed = ps.seed;
    row.test_index = t;
    row.user = x.user;
    row.item = x.item;
    row.rbo = rbo(ps.lists_m[t], lists_m2[t], params);
    row.rbo_norm = rbo_normalized(ps.lists_m[t], lists_m2[t], params);
    row.jaccard = jaccard_top_k(ps.lists_m[t], lists_m2[t], cfg.top_k);
    row.rr_m = ps.rr_m[t];
    row.rr_mprime = reciprocal_rank(lists_m2[t], x.item);
    out.per_test.push_back(row);

    sum_rbo += row.rbo;
    sum_norm += row.rbo_norm;
    sum_jac += row.jaccard;
    sum_rr_m += row.rr_m;
    sum_rr_m2 += row.rr_mprime;
    sum_rec_m += recall_at_k(ps.lists_m[t], x.item, cfg.top_k);
    sum_rec_m2 += recall_at_k(lists_m2[t], x.item, cfg.top_k);

    if (as_control && out.first_mismatch < 0 && (row.rbo_norm != 1.0 || row.jaccard != 1.0)) {
      out.control_pass = false;
      out.first_mismatch = t;
    }
  }
  const auto denom = static_cast<double>(n_test);
  out.stats.rbo_mean = sum_rbo / denom;
  out.stats.rbo_norm_mean = sum_norm / denom;
  out.stats.jaccard_mean = sum_jac / denom;
  out.stats.mrr_m = sum_rr_m / denom;
  out.stats.mrr_mprime = sum_rr_m2 / denom;
  out.stats.recall_m = sum_rec_m / denom;
  out.stats.recall_mprime = sum_rec_m2 / denom;
  return out;
}

MeanStd across_seeds(const std::vector<SeedStats>& per_seed, double SeedStats::*field) {
  std::vector<double> xs;
  xs.reserve(per_seed.size());
  for (const SeedStats& s : per_seed) xs.push_back(s.*field);
  auto [mean, sd] = mean_stddev(xs);
  return MeanStd{mean, sd};
}

StabilityReport assemble_report(const ExperimentConfig& cfg,
                                std::vector<SeedOutcome> outcomes, bool as_control) {
  StabilityReport report;
  report.config_json = experiment_config_to_json(cfg);
  report.rbo_p = cfg.rbo_p;
  report.top_k = cfg.top_k;
  report.is_control = as_control;

  struct UserAccum {
    std::int64_t n = 0;
    double rr = 0, rbo = 0, rbo_norm = 0, jac = 0;
  };
  std::map<std::int32_t, UserAccum> users;

  for (SeedOutcome& o : outcomes) {
    report.per_seed.push_back(o.stats);
    for (const PerTestRow& row : o.per_test) {
      UserAccum& acc = users[row.user];
      ++acc.n;
      acc.rr += row.rr_m;
      acc.rbo += row.rbo;
      acc.rbo_norm += row.rbo_norm;
      acc.jac += row.jaccard;
    }
    if (as_control && !o.control_pass && !report.mismatch_seed) {
      report.control_pass = false;
      report.mismatch_seed = o.stats.seed;
      report.mismatch_test_index = o.first_mismatch;
    }
    report.per_test.insert(report.per_test.end(), o.per_test.begin(), o.per_test.end());
  }

  report.rbo = across_seeds(report.per_seed, &SeedStats::rbo_mean);
  report.rbo_norm = across_seeds(report.per_seed, &SeedStats::rbo_norm_mean);
  report.jaccard = across_seeds(report.per_seed, &SeedStats::jaccard_mean);
  report.mrr_m = across_seeds(report.per_seed, &SeedStats::mrr_m);
  report.mrr_mprime = across_seeds(report.per_seed, &SeedStats::mrr_mprime);
  report.recall_m = across_seeds(report.per_seed, &SeedStats::recall_m);
  report.recall_mprime = across_seeds(report.per_seed, &SeedStats::recall_mprime);

  for (const auto& [user, acc] : users) {
    UserStats us;
    us.user = user;
    us.n_scores = acc.n;
    us.mrr = acc.rr / static_cast<double>(acc.n);
    us.rbo = acc.rbo / static_cast<double>(acc.n);
    us.rbo_norm = acc.rbo_norm / static_cast<double>(acc.n);
    us.jaccard = acc.jac / static_cast<double>(acc.n);
    report.per_user.push_back(us);
  }
  if (report.per_user.size() >= 5) {
    report.groups = user_group_breakdown(report);
    bool all_equal = true;
    for (const UserStats& us : report.per_user)
      if (us.mrr != report.per_user.front().mrr) all_equal = false;
    report.mrr_ties_fallback = all_equal;
  }
  return report;
}

// Runs one seed end to end (prepare + edit + score); used by both the plain
// runner and the multi-threaded seed loop.
SeedOutcome run_one_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                         const Dataset* file_data, bool as_control) {
  PreparedSeed ps = prepare_seed(cfg, seed, file_data);
  EditPlan plan = plan_edits(cfg, ps, cfg.perturb.strategy, cfg.perturb.k, nullptr, nullptr);
  return score_seed(cfg, ps, plan, as_control);
}

std::vector<SeedOutcome> run_seeds(const ExperimentConfig& cfg, bool as_control) {
  if (cfg.seeds.empty()) throw std::invalid_argument("experiment needs at least one seed");
  std::optional<Dataset> file_data;
  if (!cfg.data.synth) file_data = load_file_data(cfg);
  const Dataset* fd = file_data ? &*file_data : nullptr;

  std::vector<SeedOutcome> outcomes(cfg.seeds.size());
  const int jobs = std::max(1, cfg.jobs);
  if (jobs == 1 || cfg.seeds.size() == 1) {
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i)
      outcomes[i] = run_one_seed(cfg, cfg.seeds[i], fd, as_control);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= cfg.seeds.size()) return;
        try {
          outcomes[i] = run_one_seed(cfg, cfg.seeds[i], fd, as_control);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min<int>(jobs, static_cast<int>(cfg.seeds.size())); ++t)
      pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }
  return outcomes;
}

}  // namespace

ExperimentConfig standard_benchmark() {
  ExperimentConfig cfg;
  cfg.data.synth = SynthConfig{};  // 200 users x 100 items x 100 events
  cfg.min_activity = 10;
  cfg.split_frac = 0.9;
  cfg.model = ModelConfig{};
  cfg.perturb.kind = EditKind::loo;
  cfg.perturb.strategy = TargetVariant::random;
  cfg.perturb.k = 1;
  cfg.rbo_p = 0.9;
  cfg.top_k = 10;
  cfg.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  return cfg;
}

StabilityReport run_control(const ExperimentConfig& cfg) {
  ExperimentConfig control_cfg = cfg;
  control_cfg.perturb.kind.reset();  // no edit; M' retrains on the same data
  return assemble_report(control_cfg, run_seeds(control_cfg, true), true);
}

StabilityReport run_stability(const ExperimentConfig& cfg) {
  return assemble_report(cfg, run_seeds(cfg, false), false);
}

std::vector<GroupStats> user_group_breakdown(const StabilityReport& report) {
  const auto n_users = static_cast<std::int64_t>(report.per_user.size());
  if (n_users < 5) throw std::invalid_argument("user_group_breakdown: need at least 5 users");

  std::vector<std::size_t> idx(report.per_user.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (report.per_user[a].mrr != report.per_user[b].mrr)
      return report.per_user[a].mrr > report.per_user[b].mrr;
    return report.per_user[a].user < report.per_user[b].user;
  });

  const auto top = static_cast<std::int64_t>(std::ceil(0.2 * static_cast<double>(n_users)));
  auto group_of = [&](std::int64_t pos) {
    if (pos < top) return 0;            // high
    if (pos >= n_users - top) return 2;  // low
    return 1;                            // mid
  };

  std::vector<GroupStats> groups(3);
  groups[0].name = "high";
  groups[1].name = "mid";
  groups[2].name = "low";
  for (std::int64_t pos = 0; pos < n_users; ++pos) {
    const UserStats& us = report.per_user[idx[pos]];
    GroupStats& g = groups[group_of(pos)];
    ++g.n_users;
    g.mrr += us.mrr;
    g.rbo += us.rbo;
    g.rbo_norm += us.rbo_norm;
    g.jaccard += us.jaccard;
  }
  for (GroupStats& g : groups) {
    if (g.n_users > 0) {
      const auto d = static_cast<double>(g.n_users);
      g.mrr /= d;
      g.rbo /= d;
      g.rbo_norm /= d;
      g.jaccard /= d;
    }
  }
  return groups;
}

CompareResult compare_strategies(const ExperimentConfig& cfg,
                                 const std::vector<TargetVariant>& strategies) {
  if (strategies.size() < 2)
    throw std::invalid_argument("compare_strategies: need at least 2 strategies");
  if (cfg.seeds.empty()) throw std::invalid_argument("compare_strategies: need seeds");
  if (!cfg.perturb.kind)
    throw std::invalid_argument("compare_strategies: an edit kind is required");

  CompareResult result;
  result.strategies = strategies;
  if (cfg.seeds.size() < 10)
    result.warnings.push_back("fewer than 10 seeds; paired comparison will be weak");

  std::optional<Dataset> file_data;
  if (!cfg.data.synth) file_data = load_file_data(cfg);
  const Dataset* fd = file_data ? &*file_data : nullptr;

  // One prepared reference model per seed, shared by all strategies.
  std::vector<std::vector<SeedOutcome>> outcomes(strategies.size());
  for (std::uint64_t seed : cfg.seeds) {
    PreparedSeed ps = prepare_seed(cfg, seed, fd);
    std::optional<Idag> graph;
    std::optional<CascadeScores> scores;
    const bool want_casper = std::find(strategies.begin(), strategies.end(),
                                       TargetVariant::casper) != strategies.end();
    if (want_casper) {
      graph = build_idag(ps.split.train, cfg.model.max_seq_len);
      scores = cascading_scores(*graph);
    }
    for (std::size_t s = 0; s < strategies.size(); ++s) {
      EditPlan plan = plan_edits(cfg, ps, strategies[s], cfg.perturb.k,
                                 graph ? &*graph : nullptr, scores ? &*scores : nullptr);
      outcomes[s].push_back(score_seed(cfg, ps, plan, false));
    }
  }
  for (std::size_t s = 0; s < strategies.size(); ++s)
    result.reports.push_back(assemble_report(cfg, std::move(outcomes[s]), false));

  for (std::size_t i = 0; i < strategies.size(); ++i) {
    for (std::size_t j = i + 1; j < strategies.size(); ++j) {
      StrategyPairTest test;
      test.a = strategies[i];
      test.b = strategies[j];
      std::vector<double> x, y;
      for (std::size_t k = 0; k < cfg.seeds.size(); ++k) {
        x.push_back(result.reports[i].per_seed[k].rbo_mean);
        y.push_back(result.reports[j].per_seed[k].rbo_mean);
      }
      int usable = 0;
      for (std::size_t k = 0; k < x.size(); ++k)
        if (x[k] != y[k]) ++usable;
      if (usable == 0) {
        test.p_value = 1.0;  // identical distributions
      } else if (usable < 5) {
        test.skipped = true;
        test.note = "fewer than 5 usable pairs; test skipped";
        result.warnings.push_back("wilcoxon(" + to_string(test.a) + ", " + to_string(test.b) +
                                  "): " + test.note);
      } else {
        const WilcoxonResult w = wilcoxon_signed_rank(x, y);
        test.statistic = w.statistic;
        test.p_value = w.p_value;
      }
      result.tests.push_back(test);
    }
  }
  return result;
}

SweepResult sweep_k(const ExperimentConfig& cfg, const std::vector<int>& ks) {
  if (cfg.perturb.strategy != TargetVariant::casper)
    throw std::invalid_argument("sweep_k: casper strategy required");
  if (!cfg.perturb.kind) throw std::invalid_argument("sweep_k: an edit kind is required");
  if (ks.empty()) throw std::invalid_argument("sweep_k: empty k list");
  for (int k : ks)
    if (k < 1) throw std::invalid_argument("sweep_k: k must be >= 1");

  std::optional<Dataset> file_data;
  if (!cfg.data.synth) file_data = load_file_data(cfg);
  const Dataset* fd = file_data ? &*file_data : nullptr;

  SweepResult result;
  result.ks = ks;
  std::vector<std::vector<SeedOutcome>> outcomes(ks.size());
  for (std::uint64_t seed : cfg.seeds) {
    PreparedSeed ps = prepare_seed(cfg, seed, fd);
    Idag graph = build_idag(ps.split.train, cfg.model.max_seq_len);
    CascadeScores scores = cascading_scores(graph);
    for (std::size_t i = 0; i < ks.size(); ++i) {
      EditPlan plan = plan_edits(cfg, ps, TargetVariant::casper, ks[i], &graph, &scores);
      outcomes[i].push_back(score_seed(cfg, ps, plan, false));
    }
  }
  for (std::size_t i = 0; i < ks.size(); ++i)
    result.reports.push_back(assemble_report(cfg, std::move(outcomes[i]), false));
  return result;
}

std::vector<BenchRow> runtime_benchmark(const std::vector<std::int64_t>& sizes,
                                        const BenchConfig& bench) {
  if (sizes.empty()) throw std::invalid_argument("runtime_benchmark: empty size list");
  for (std::size_t i = 1; i < sizes.size(); ++i)
    if (sizes[i] <= sizes[i - 1])
      throw std::invalid_argument("runtime_benchmark: sizes must be ascending");
  if (bench.trials < 1) throw std::invalid_argument("runtime_benchmark: trials must be >= 1");

  using clock = std::chrono::steady_clock;
  auto ms_since = [](clock::time_point start) {
    return std::chrono::duration<double, std::milli>(clock::now() - start).count();
  };
  auto median_of = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };

  std::vector<BenchRow> rows;
  for (std::int64_t size : sizes) {
    BenchRow row;
    row.requested_size = size;
    row.n_users = bench.n_users;
    row.trials = bench.trials;

    SynthConfig synth;
    synth.n_users = bench.n_users;
    synth.n_items = bench.n_items;
    synth.concentration = bench.concentration;
    synth.events_per_user =
        std::max<std::int32_t>(10, static_cast<std::int32_t>(size / bench.n_users));
    row.actual_size = static_cast<std::int64_t>(synth.n_users) * synth.events_per_user;

    ExperimentConfig cfg;
    cfg.data.synth = synth;
    cfg.model = bench.model;
    cfg.perturb.kind = EditKind::loo;
    cfg.perturb.strategy = TargetVariant::casper;
    cfg.perturb.k = 1;

    std::vector<double> idag_ms, pipeline_ms;
    for (int trial = 1; trial <= bench.trials; ++trial) {
      const auto seed = static_cast<std::uint64_t>(trial);
      Dataset base = make_base_data(cfg, seed, nullptr);
      TemporalSplit split = temporal_split(base, cfg.split_frac);

      auto start = clock::now();
      Idag graph = build_idag(split.train, cfg.model.max_seq_len);
      CascadeScores scores = cascading_scores(graph);
      idag_ms.push_back(ms_since(start));
      if (scores.z() < 1) throw ValidationError("benchmark graph has no zero in-degree nodes");

      start = clock::now();
      PreparedSeed ps;
      ps.seed = seed;
      ps.split = std::move(split);
      ModelConfig mc = cfg.model;
      mc.seed = seed;
      ps.m = fit(init_model(base.n_users, base.n_items, mc), ps.split.train);
      ps.lists_m = rank_for_test(ps.m, ps.split);
      ps.rr_m.reserve(ps.lists_m.size());
      for (std::size_t t = 0; t < ps.lists_m.size(); ++t)
        ps.rr_m.push_back(reciprocal_rank(ps.lists_m[t], ps.split.test.interactions[t].item));
      EditPlan plan = plan_edits(cfg, ps, TargetVariant::casper, 1, &graph, &scores);
      score_seed(cfg, ps, plan, false);
      pipeline_ms.push_back(ms_since(start));
    }
    row.idag_ms_median = median_of(idag_ms);
    row.idag_ms_min = *std::min_element(idag_ms.begin(), idag_ms.end());
    row.idag_ms_max = *std::max_element(idag_ms.begin(), idag_ms.end());
    row.pipeline_ms_median = median_of(pipeline_ms);
    row.pipeline_ms_min = *std::min_element(pipeline_ms.begin(), pipeline_ms.end());
    row.pipeline_ms_max = *std::max_element(pipeline_ms.begin(), pipeline_ms.end());
    rows.push_back(row);
  }
  return rows;
}

}  // namespace ranksens
