#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ranksens/dataset.hpp"
#include "ranksens/errors.hpp"
#include "ranksens/harness.hpp"
#include "ranksens/idag.hpp"

namespace fs = std::filesystem;
using namespace ranksens;

namespace {

// Everything the experiment subcommands share. CLI flags override whatever
// the optional JSON config file set, field by field.
struct ExperimentCli {
  std::string config_path;
  bool use_synth = false;
  std::string input_path;
  std::string format = "csv";
  int user_col = 0, item_col = 1, time_col = 2;
  bool header = false;
  int synth_users = 200, synth_items = 100, synth_events = 100;
  double concentration = 4.0;
  int min_activity = 10;
  double frac = 0.9;
  int dim = 32, epochs = 5, negatives = 1;
  double lr = 0.05, drift = 0.3;
  std::int32_t max_seq_len = 0;  // 0 = unset
  std::string strategy = "random";
  std::string kind = "loo";
  std::string item_strategy = "random";
  int k = 1;
  int seeds = 3;
  std::string seed_list;
  double rbo_p = 0.9;
  int top_k = 10;
  int jobs = 1;
  std::string out_dir;

  CLI::App* attach(CLI::App* cmd, bool with_perturb) {
    cmd->add_option("--config", config_path, "JSON config file; flags override its fields");
    cmd->add_flag("--synth", use_synth, "use the synthetic generator");
    cmd->add_option("--input", input_path, "interaction log (CSV/TSV)");
    cmd->add_option("--format", format, "input format")->check(CLI::IsMember({"csv", "tsv"}));
    cmd->add_option("--user-col", user_col, "user column index (0-based)");
    cmd->add_option("--item-col", item_col, "item column index");
    cmd->add_option("--time-col", time_col, "timestamp column index");
    cmd->add_flag("--header", header, "skip a header row");
    cmd->add_option("--users", synth_users, "synthetic: number of users");
    cmd->add_option("--items", synth_items, "synthetic: number of items");
    cmd->add_option("--events", synth_events, "synthetic: events per user");
    cmd->add_option("--concentration", concentration, "synthetic: transition-row peakedness");
    cmd->add_option("--min-activity", min_activity, "drop users with fewer interactions");
    cmd->add_option("--frac", frac, "per-user train fraction");
    cmd->add_option("--dim", dim, "embedding dimension");
    cmd->add_option("--lr", lr, "learning rate");
    cmd->add_option("--alpha", drift, "recurrent drift weight");
    cmd->add_option("--epochs", epochs, "training epochs");
    cmd->add_option("--negatives", negatives, "negative samples per step");
    cmd->add_option("--max-seq-len", max_seq_len, "latest-L window per user (0 = all)");
    if (with_perturb) {
      cmd->add_option("--strategy", strategy, "target selection strategy")
          ->check(CLI::IsMember({"random", "earliest_random", "latest_random", "casper"}));
      cmd->add_option("--kind", kind, "edit kind")
          ->check(CLI::IsMember({"loo", "replace", "insert"}));
      cmd->add_option("--item-strategy", item_strategy, "replacement-item strategy")
          ->check(CLI::IsMember({"random", "popular", "unpopular"}));
      cmd->add_option("-k,--k", k, "number of perturbations");
    }
    cmd->add_option("--seeds", seeds, "number of seeds (1..N)");
    cmd->add_option("--seed-list", seed_list, "explicit comma-separated seeds");
    cmd->add_option("--rbo-p", rbo_p, "RBO persistence parameter");
    cmd->add_option("--topk", top_k, "K for jaccard/recall");
    cmd->add_option("--jobs", jobs, "seed-level parallelism");
    cmd->add_option("--out", out_dir, "output directory (default $RANKSENS_OUTDIR or ./ranksens_out)");
    return cmd;
  }

  ExperimentConfig build(const CLI::App* cmd) const {
    ExperimentConfig cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ValidationError("cannot open config file: " + config_path);
      std::stringstream buf;
      buf << in.rdbuf();
      cfg = experiment_config_from_json(buf.str());
    }
    auto passed = [&](const std::string& name) { return cmd->count(name) > 0; };

    if (passed("--input")) {
      cfg.data.file = input_path;
      cfg.data.synth.reset();
      cfg.data.format = format == "tsv" ? TextFormat::tsv : TextFormat::csv;
      cfg.data.columns = ColumnMap::indices(user_col, item_col, time_col, header);
    } else if (passed("--synth") || (!cfg.data.file && !cfg.data.synth)) {
      SynthConfig synth = cfg.data.synth.value_or(SynthConfig{});
      if (passed("--users")) synth.n_users = synth_users;
      if (passed("--items")) synth.n_items = synth_items;
      if (passed("--events")) synth.events_per_user = synth_events;
      if (passed("--concentration")) synth.concentration = concentration;
      cfg.data.synth = synth;
      cfg.data.file.reset();
    } else if (cfg.data.synth) {
      SynthConfig synth = *cfg.data.synth;
      if (passed("--users")) synth.n_users = synth_users;
      if (passed("--items")) synth.n_items = synth_items;
      if (passed("--events")) synth.events_per_user = synth_events;
      if (passed("--concentration")) synth.concentration = concentration;
      cfg.data.synth = synth;
    }
    if (passed("--min-activity")) cfg.min_activity = min_activity;
    if (passed("--frac")) cfg.split_frac = frac;
    if (passed("--dim")) cfg.model.dim = dim;
    if (passed("--lr")) cfg.model.learning_rate = lr;
    if (passed("--alpha")) cfg.model.drift = drift;
    if (passed("--epochs")) cfg.model.epochs = epochs;
    if (passed("--negatives")) cfg.model.negatives = negatives;
    if (passed("--max-seq-len")) {
      if (max_seq_len > 0)
        cfg.model.max_seq_len = max_seq_len;
      else
        cfg.model.max_seq_len.reset();
    }
    if (cmd->count("--strategy")) cfg.perturb.strategy = target_variant_from_string(strategy);
    if (cmd->count("--kind")) cfg.perturb.kind = edit_kind_from_string(kind);
    if (cmd->count("--item-strategy"))
      cfg.perturb.item_strategy = item_strategy_from_string(item_strategy);
    if (cmd->count("--k")) cfg.perturb.k = k;
    if (passed("--seed-list")) {
      cfg.seeds.clear();
      std::stringstream ss(seed_list);
      std::string tok;
      while (std::getline(ss, tok, ','))
        if (!tok.empty()) cfg.seeds.push_back(std::stoull(tok));
      if (cfg.seeds.empty()) throw ValidationError("--seed-list produced no seeds");
    } else if (passed("--seeds")) {
      if (seeds < 1) throw ValidationError("--seeds must be >= 1");
      cfg.seeds.clear();
      for (int s = 1; s <= seeds; ++s) cfg.seeds.push_back(static_cast<std::uint64_t>(s));
    }
    if (passed("--rbo-p")) cfg.rbo_p = rbo_p;
    if (passed("--topk")) cfg.top_k = top_k;
    if (passed("--jobs")) cfg.jobs = jobs;
    if (cfg.perturb.kind && *cfg.perturb.kind != EditKind::loo && !cfg.perturb.item_strategy)
      cfg.perturb.item_strategy = ItemStrategy::random;
    return cfg;
  }

  std::string resolve_out_dir() const {
    if (!out_dir.empty()) return out_dir;
    if (const char* env = std::getenv("RANKSENS_OUTDIR"); env && *env) return env;
    return "ranksens_out";
  }
};

// Loads --input directly (early validation) and drops the id-mapping
// sidecars next to the reports.
void emit_id_sidecars(const ExperimentConfig& cfg, const std::string& dir) {
  if (!cfg.data.file) return;
  std::ifstream in(*cfg.data.file);
  if (!in) throw ValidationError("cannot open input file: " + *cfg.data.file);
  Dataset ds = load_interactions(in, cfg.data.format, cfg.data.columns);
  fs::create_directories(dir);
  std::ofstream users(fs::path(dir) / "user_ids.csv");
  write_id_map_csv(ds.user_labels, users);
  std::ofstream items(fs::path(dir) / "item_ids.csv");
  write_id_map_csv(ds.item_labels, items);
}

Dataset load_cli_dataset(const ExperimentCli& opts, const CLI::App* cmd) {
  if (cmd->count("--input")) {
    std::ifstream in(opts.input_path);
    if (!in) throw ValidationError("cannot open input file: " + opts.input_path);
    return load_interactions(in, opts.format == "tsv" ? TextFormat::tsv : TextFormat::csv,
                             ColumnMap::indices(opts.user_col, opts.item_col, opts.time_col,
                                                opts.header));
  }
  SynthConfig synth;
  synth.n_users = opts.synth_users;
  synth.n_items = opts.synth_items;
  synth.events_per_user = opts.synth_events;
  synth.concentration = opts.concentration;
  std::uint64_t seed = 1;
  if (cmd->count("--seed-list")) {
    std::stringstream ss(opts.seed_list);
    std::string tok;
    if (std::getline(ss, tok, ',')) seed = std::stoull(tok);
  }
  return synth_generate(synth, seed);
}

int cmd_stability(const ExperimentCli& opts, const CLI::App* cmd, bool control) {
  ExperimentConfig cfg = opts.build(cmd);
  const std::string dir = opts.resolve_out_dir();
  emit_id_sidecars(cfg, dir);
  StabilityReport report = control ? run_control(cfg) : run_stability(cfg);
  write_report_files(report, dir);
  std::cout << (control ? "control" : "stability") << ": rbo=" << report.rbo.mean
            << " rbo_norm=" << report.rbo_norm.mean << " jaccard@" << report.top_k << "="
            << report.jaccard.mean << " mrr_m=" << report.mrr_m.mean
            << " mrr_mprime=" << report.mrr_mprime.mean << "\n";
  std::cout << "reports written to " << dir << "\n";
  if (control && !report.control_pass) {
    std::cerr << "determinism failure: seed " << *report.mismatch_seed << ", test interaction "
              << *report.mismatch_test_index << " differs between the two runs\n";
    return 2;
  }
  return 0;
}

int cmd_compare(const ExperimentCli& opts, const CLI::App* cmd, const std::string& strategies) {
  ExperimentConfig cfg = opts.build(cmd);
  if (!cfg.perturb.kind) cfg.perturb.kind = EditKind::loo;
  std::vector<TargetVariant> variants;
  std::stringstream ss(strategies);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) variants.push_back(target_variant_from_string(tok));
  const std::string dir = opts.resolve_out_dir();
  emit_id_sidecars(cfg, dir);
  CompareResult result = compare_strategies(cfg, variants);

  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "compare.json");
    out << compare_to_json(result) << '\n';
  }
  {
    std::ofstream out(fs::path(dir) / "compare.csv");
    write_compare_csv(result, out);
  }
  for (std::size_t s = 0; s < result.strategies.size(); ++s)
    std::cout << to_string(result.strategies[s]) << ": rbo=" << result.reports[s].rbo.mean
              << " jaccard=" << result.reports[s].jaccard.mean << "\n";
  for (const StrategyPairTest& t : result.tests) {
    std::cout << "wilcoxon " << to_string(t.a) << " vs " << to_string(t.b);
    if (t.skipped)
      std::cout << ": skipped (" << t.note << ")\n";
    else
      std::cout << ": W=" << t.statistic << " p=" << t.p_value << "\n";
  }
  for (const std::string& w : result.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "reports written to " << dir << "\n";
  return 0;
}

int cmd_sweep(const ExperimentCli& opts, const CLI::App* cmd, const std::string& ks_text) {
  ExperimentConfig cfg = opts.build(cmd);
  cfg.perturb.strategy = TargetVariant::casper;
  if (!cfg.perturb.kind) cfg.perturb.kind = EditKind::loo;
  std::vector<int> ks;
  std::stringstream ss(ks_text);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) ks.push_back(std::stoi(tok));
  const std::string dir = opts.resolve_out_dir();
  emit_id_sidecars(cfg, dir);
  SweepResult result = sweep_k(cfg, ks);
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "sweep.json");
    out << sweep_to_json(result) << '\n';
  }
  {
    std::ofstream out(fs::path(dir) / "sweep.csv");
    write_sweep_csv(result, out);
  }
  for (std::size_t i = 0; i < result.ks.size(); ++i)
    std::cout << "k=" << result.ks[i] << ": jaccard=" << result.reports[i].jaccard.mean
              << " rbo=" << result.reports[i].rbo.mean << "\n";
  std::cout << "reports written to " << dir << "\n";
  return 0;
}

int cmd_idag(const ExperimentCli& opts, const CLI::App* cmd, int top,
             const std::string& edges_out, const std::string& scores_out,
             const std::string& nodes_out) {
  Dataset ds = load_cli_dataset(opts, cmd);
  std::optional<std::int32_t> L;
  if (cmd->count("--max-seq-len") && opts.max_seq_len > 0) L = opts.max_seq_len;
  Idag g = build_idag(ds, L);
  CascadeScores scores = cascading_scores(g);
  std::cout << "nodes=" << g.size() << " edges=" << g.edge_count() << " zero_in_degree="
            << scores.z() << "\n";
  const int n = static_cast<int>(std::min<std::int64_t>(top, scores.z()));
  auto targets = select_targets(g, ds, scores, n);
  for (int i = 0; i < n; ++i) {
    const std::int32_t node = targets[i];
    const Interaction& x = ds.interactions[g.node_interaction[node]];
    std::int64_t score = 0;
    for (std::size_t z = 0; z < scores.zero_nodes.size(); ++z)
      if (scores.zero_nodes[z] == node) score = scores.scores[z];
    std::cout << "top" << (i + 1) << ": node=" << node << " score=" << score << " user=" << x.user
              << " item=" << x.item << " t=" << x.timestamp << "\n";
  }
  if (!edges_out.empty()) {
    std::ofstream out(edges_out);
    if (!out) throw ValidationError("cannot write " + edges_out);
    write_edge_list(g, out);
  }
  if (!scores_out.empty()) {
    std::ofstream out(scores_out);
    if (!out) throw ValidationError("cannot write " + scores_out);
    write_scores_csv(scores, out);
  }
  if (!nodes_out.empty()) {
    std::ofstream out(nodes_out);
    if (!out) throw ValidationError("cannot write " + nodes_out);
    write_nodes_csv(g, ds, out);
  }
  return 0;
}

int cmd_bench(const std::string& sizes_text, BenchConfig bench, const std::string& out_dir) {
  std::vector<std::int64_t> sizes;
  std::stringstream ss(sizes_text);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) sizes.push_back(std::stoll(tok));
  if (sizes.empty()) throw ValidationError("--sizes produced no sizes");
  std::vector<BenchRow> rows = runtime_benchmark(sizes, bench);
  fs::create_directories(out_dir);
  const fs::path csv = fs::path(out_dir) / "bench.csv";
  {
    std::ofstream out(csv);
    if (!out) throw ValidationError("cannot write " + csv.string());
    write_bench_csv(rows, out);
  }
  for (const BenchRow& r : rows)
    std::cout << "n=" << r.actual_size << " idag_ms=" << r.idag_ms_median
              << " pipeline_ms=" << r.pipeline_ms_median << "\n";
  std::cout << "timings written to " << csv.string() << "\n";
  return 0;
}

int cmd_synth(const SynthConfig& synth, std::uint64_t seed, std::string out_file,
              const std::string& out_dir) {
  Dataset ds = synth_generate(synth, seed);
  if (out_file.empty()) {
    fs::create_directories(out_dir);
    out_file = (fs::path(out_dir) / "synth.csv").string();
  }
  std::ofstream out(out_file);
  if (!out) throw ValidationError("cannot write " + out_file);
  write_dataset_csv(ds, out);
  std::cout << "wrote " << ds.size() << " interactions (" << ds.n_users << " users, " << ds.n_items
            << " items) to " << out_file << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rank-list sensitivity auditing for sequential recommenders"};
  app.require_subcommand(1);

  ExperimentCli stab_opts, cmp_opts, sweep_opts, idag_opts;
  bool control = false;
  CLI::App* stab = stab_opts.attach(app.add_subcommand("stability", "measure rank-list sensitivity"),
                                    true);
  stab->add_flag("--control", control, "train twice with no edit and verify determinism");

  std::string strategies = "random,casper";
  CLI::App* cmp = cmp_opts.attach(
      app.add_subcommand("compare", "compare target-selection strategies"), true);
  cmp->add_option("--strategies", strategies, "comma-separated strategy list");

  std::string ks_text = "1,2,4,8";
  CLI::App* sweep = sweep_opts.attach(
      app.add_subcommand("sweep-k", "casper sweep over perturbation counts"), true);
  sweep->add_option("--ks", ks_text, "comma-separated perturbation counts");

  int idag_top = 5;
  std::string edges_out, scores_out, nodes_out;
  CLI::App* idag = idag_opts.attach(
      app.add_subcommand("idag", "build the dependency graph and rank cascading scores"), false);
  idag->add_option("--top", idag_top, "print the top-N cascading scores");
  idag->add_option("--edges-out", edges_out, "write 'src dst kind' edge list");
  idag->add_option("--scores-out", scores_out, "write node,score CSV");
  idag->add_option("--nodes-out", nodes_out, "write node description CSV");

  std::string sizes_text;
  BenchConfig bench;
  std::string bench_out;
  CLI::App* bench_cmd = app.add_subcommand("bench", "time graph construction and the full pipeline");
  bench_cmd->add_option("--sizes", sizes_text, "comma-separated interaction counts")->required();
  bench_cmd->add_option("--trials", bench.trials, "trials per size");
  bench_cmd->add_option("--users", bench.n_users, "users held fixed while sizes scale");
  bench_cmd->add_option("--items", bench.n_items, "item universe");
  bench_cmd->add_option("--out", bench_out, "output directory");

  SynthConfig synth_cfg;
  std::uint64_t synth_seed = 1;
  std::string synth_out_file, synth_out_dir;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic interaction log");
  synth_cmd->add_option("--users", synth_cfg.n_users, "number of users");
  synth_cmd->add_option("--items", synth_cfg.n_items, "number of items");
  synth_cmd->add_option("--events", synth_cfg.events_per_user, "events per user");
  synth_cmd->add_option("--concentration", synth_cfg.concentration, "transition-row peakedness");
  synth_cmd->add_option("--seed", synth_seed, "generator seed");
  synth_cmd->add_option("--out-file", synth_out_file, "output CSV path");
  synth_cmd->add_option("--out", synth_out_dir, "output directory");

  auto env_out = [] {
    const char* env = std::getenv("RANKSENS_OUTDIR");
    return std::string(env && *env ? env : "ranksens_out");
  };

  try {
    app.parse(argc, argv);
    if (stab->parsed()) return cmd_stability(stab_opts, stab, control);
    if (cmp->parsed()) return cmd_compare(cmp_opts, cmp, strategies);
    if (sweep->parsed()) return cmd_sweep(sweep_opts, sweep, ks_text);
    if (idag->parsed()) return cmd_idag(idag_opts, idag, idag_top, edges_out, scores_out, nodes_out);
    if (bench_cmd->parsed())
      return cmd_bench(sizes_text, bench, !bench_out.empty() ? bench_out : env_out());
    if (synth_cmd->parsed())
      return cmd_synth(synth_cfg, synth_seed, synth_out_file,
                       !synth_out_dir.empty() ? synth_out_dir : env_out());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // bad flags -> validation failure
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
