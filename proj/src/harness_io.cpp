#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

#include <nlohmann/json.hpp>

#include "ranksens/errors.hpp"
#include "ranksens/harness.hpp"

namespace ranksens {

namespace {

using nlohmann::json;

json mean_std_json(const MeanStd& m) { return json{{"mean", m.mean}, {"std", m.stddev}}; }

MeanStd mean_std_from(const json& j) { return MeanStd{j.at("mean"), j.at("std")}; }

json target_json(const TargetInfo& t) {
  json j{{"user", t.user},
         {"item", t.item},
         {"timestamp", t.timestamp},
         {"seq_index", t.seq_index},
         {"kind", t.kind}};
  j["new_item"] = t.new_item ? json(*t.new_item) : json(nullptr);
  return j;
}

TargetInfo target_from(const json& j) {
  TargetInfo t;
  t.user = j.at("user");
  t.item = j.at("item");
  t.timestamp = j.at("timestamp");
  t.seq_index = j.at("seq_index");
  t.kind = j.at("kind");
  if (!j.at("new_item").is_null()) t.new_item = j.at("new_item").get<std::int32_t>();
  return t;
}

}  // namespace

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  json j;
  if (cfg.data.synth) {
    j["data"]["synth"] = {{"n_users", cfg.data.synth->n_users},
                          {"n_items", cfg.data.synth->n_items},
                          {"events_per_user", cfg.data.synth->events_per_user},
                          {"markov_order", cfg.data.synth->markov_order},
                          {"concentration", cfg.data.synth->concentration}};
  }
  if (cfg.data.file) {
    j["data"]["file"] = *cfg.data.file;
    j["data"]["format"] = cfg.data.format == TextFormat::csv ? "csv" : "tsv";
    json cols;
    if (cfg.data.columns.user_name) {
      cols["user"] = *cfg.data.columns.user_name;
      cols["item"] = *cfg.data.columns.item_name;
      cols["timestamp"] = *cfg.data.columns.time_name;
    } else {
      cols["user"] = cfg.data.columns.user_col.value_or(0);
      cols["item"] = cfg.data.columns.item_col.value_or(1);
      cols["timestamp"] = cfg.data.columns.time_col.value_or(2);
    }
    cols["header"] = cfg.data.columns.has_header;
    j["data"]["columns"] = cols;
  }
  j["min_activity"] = cfg.min_activity;
  j["split_frac"] = cfg.split_frac;
  j["model"] = {{"dim", cfg.model.dim},
                {"learning_rate", cfg.model.learning_rate},
                {"drift", cfg.model.drift},
                {"epochs", cfg.model.epochs},
                {"negatives", cfg.model.negatives},
                {"max_seq_len",
                 cfg.model.max_seq_len ? json(*cfg.model.max_seq_len) : json(nullptr)},
                {"seed", cfg.model.seed}};
  j["perturbation"] = json::parse(perturbation_spec_to_json(cfg.perturb));
  j["rbo_p"] = cfg.rbo_p;
  j["top_k"] = cfg.top_k;
  j["seeds"] = cfg.seeds;
  j["jobs"] = cfg.jobs;
  if (cfg.mprime_seed_override) j["mprime_seed_override"] = *cfg.mprime_seed_override;
  return j.dump(2);
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ValidationError("config: invalid JSON");
  ExperimentConfig cfg;
  if (j.contains("data")) {
    const json& d = j["data"];
    if (d.contains("synth")) {
      SynthConfig s;
      const json& sj = d["synth"];
      s.n_users = sj.value("n_users", s.n_users);
      s.n_items = sj.value("n_items", s.n_items);
      s.events_per_user = sj.value("events_per_user", s.events_per_user);
      s.markov_order = sj.value("markov_order", s.markov_order);
      s.concentration = sj.value("concentration", s.concentration);
      cfg.data.synth = s;
    }
    if (d.contains("file")) {
      cfg.data.file = d["file"].get<std::string>();
      cfg.data.format = d.value("format", "csv") == std::string("tsv") ? TextFormat::tsv
                                                                       : TextFormat::csv;
      if (d.contains("columns")) {
        const json& c = d["columns"];
        if (c.contains("user") && c["user"].is_string()) {
          cfg.data.columns = ColumnMap::names(c["user"], c["item"], c["timestamp"]);
        } else {
          cfg.data.columns = ColumnMap::indices(c.value("user", 0), c.value("item", 1),
                                                c.value("timestamp", 2), c.value("header", false));
        }
      }
    }
  }
  cfg.min_activity = j.value("min_activity", cfg.min_activity);
  cfg.split_frac = j.value("split_frac", cfg.split_frac);
  if (j.contains("model")) {
    const json& m = j["model"];
    cfg.model.dim = m.value("dim", cfg.model.dim);
    cfg.model.learning_rate = m.value("learning_rate", cfg.model.learning_rate);
    cfg.model.drift = m.value("drift", cfg.model.drift);
    cfg.model.epochs = m.value("epochs", cfg.model.epochs);
    cfg.model.negatives = m.value("negatives", cfg.model.negatives);
    if (m.contains("max_seq_len") && !m["max_seq_len"].is_null())
      cfg.model.max_seq_len = m["max_seq_len"].get<std::int32_t>();
    cfg.model.seed = m.value("seed", cfg.model.seed);
  }
  if (j.contains("perturbation")) cfg.perturb = perturbation_spec_from_json(j["perturbation"].dump());
  cfg.rbo_p = j.value("rbo_p", cfg.rbo_p);
  cfg.top_k = j.value("top_k", cfg.top_k);
  if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  cfg.jobs = j.value("jobs", cfg.jobs);
  if (j.contains("mprime_seed_override"))
    cfg.mprime_seed_override = j["mprime_seed_override"].get<std::uint64_t>();
  return cfg;
}

std::string report_to_json(const StabilityReport& report) {
  json j;
  j["config"] = json::parse(report.config_json);
  j["metric_meta"] = {{"rbo_p", report.rbo_p}, {"top_k", report.top_k}, {"std", "population"}};
  j["is_control"] = report.is_control;
  j["control_pass"] = report.control_pass;
  j["mismatch_seed"] = report.mismatch_seed ? json(*report.mismatch_seed) : json(nullptr);
  j["mismatch_test_index"] =
      report.mismatch_test_index ? json(*report.mismatch_test_index) : json(nullptr);
  j["mrr_ties_fallback"] = report.mrr_ties_fallback;

  json seeds = json::array();
  for (const SeedStats& s : report.per_seed) {
    json targets = json::array();
    for (const TargetInfo& t : s.targets) targets.push_back(target_json(t));
    seeds.push_back({{"seed", s.seed},
                     {"rbo_mean", s.rbo_mean},
                     {"rbo_norm_mean", s.rbo_norm_mean},
                     {"jaccard_mean", s.jaccard_mean},
                     {"mrr_m", s.mrr_m},
                     {"mrr_mprime", s.mrr_mprime},
                     {"recall_m", s.recall_m},
                     {"recall_mprime", s.recall_mprime},
                     {"targets", targets}});
  }
  j["per_seed"] = seeds;
  j["cross_seed"] = {{"rbo", mean_std_json(report.rbo)},
                     {"rbo_norm", mean_std_json(report.rbo_norm)},
                     {"jaccard", mean_std_json(report.jaccard)},
                     {"mrr_m", mean_std_json(report.mrr_m)},
                     {"mrr_mprime", mean_std_json(report.mrr_mprime)},
                     {"recall_m", mean_std_json(report.recall_m)},
                     {"recall_mprime", mean_std_json(report.recall_mprime)}};

  json per_test = json::array();
  for (const PerTestRow& r : report.per_test)
    per_test.push_back({{"seed", r.seed},
                        {"test_index", r.test_index},
                        {"user", r.user},
                        {"item", r.item},
                        {"rbo", r.rbo},
                        {"rbo_norm", r.rbo_norm},
                        {"jaccard", r.jaccard},
                        {"rr_m", r.rr_m},
                        {"rr_mprime", r.rr_mprime}});
  j["per_test"] = per_test;

  json per_user = json::array();
  for (const UserStats& u : report.per_user)
    per_user.push_back({{"user", u.user},
                        {"n_scores", u.n_scores},
                        {"mrr", u.mrr},
                        {"rbo", u.rbo},
                        {"rbo_norm", u.rbo_norm},
                        {"jaccard", u.jaccard}});
  j["per_user"] = per_user;

  json groups = json::array();
  for (const GroupStats& g : report.groups)
    groups.push_back({{"name", g.name},
                      {"n_users", g.n_users},
                      {"mrr", g.mrr},
                      {"rbo", g.rbo},
                      {"rbo_norm", g.rbo_norm},
                      {"jaccard", g.jaccard}});
  j["groups"] = groups;
  return j.dump(2);
}

StabilityReport report_from_json(const std::string& text) {
  json j = json::parse(text);
  StabilityReport report;
  report.config_json = j.at("config").dump(2);
  report.rbo_p = j.at("metric_meta").at("rbo_p");
  report.top_k = j.at("metric_meta").at("top_k");
  report.is_control = j.at("is_control");
  report.control_pass = j.at("control_pass");
  if (!j.at("mismatch_seed").is_null())
    report.mismatch_seed = j.at("mismatch_seed").get<std::uint64_t>();
  if (!j.at("mismatch_test_index").is_null())
    report.mismatch_test_index = j.at("mismatch_test_index").get<std::int64_t>();
  report.mrr_ties_fallback = j.at("mrr_ties_fallback");
  for (const json& s : j.at("per_seed")) {
    SeedStats stats;
    stats.seed = s.at("seed");
    stats.rbo_mean = s.at("rbo_mean");
    stats.rbo_norm_mean = s.at("rbo_norm_mean");
    stats.jaccard_mean = s.at("jaccard_mean");
    stats.mrr_m = s.at("mrr_m");
    stats.mrr_mprime = s.at("mrr_mprime");
    stats.recall_m = s.at("recall_m");
    stats.recall_mprime = s.at("recall_mprime");
    for (const json& t : s.at("targets")) stats.targets.push_back(target_from(t));
    report.per_seed.push_back(std::move(stats));
  }
  const json& cs = j.at("cross_seed");
  report.rbo = mean_std_from(cs.at("rbo"));
  report.rbo_norm = mean_std_from(cs.at("rbo_norm"));
  report.jaccard = mean_std_from(cs.at("jaccard"));
  report.mrr_m = mean_std_from(cs.at("mrr_m"));
  report.mrr_mprime = mean_std_from(cs.at("mrr_mprime"));
  report.recall_m = mean_std_from(cs.at("recall_m"));
  report.recall_mprime = mean_std_from(cs.at("recall_mprime"));
  for (const json& r : j.at("per_test")) {
    PerTestRow row;
    row.seed = r.at("seed");
    row.test_index = r.at("test_index");
    row.user = r.at("user");
    row.item = r.at("item");
    row.rbo = r.at("rbo");
    row.rbo_norm = r.at("rbo_norm");
    row.jaccard = r.at("jaccard");
    row.rr_m = r.at("rr_m");
    row.rr_mprime = r.at("rr_mprime");
    report.per_test.push_back(row);
  }
  for (const json& u : j.at("per_user")) {
    UserStats us;
    us.user = u.at("user");
    us.n_scores = u.at("n_scores");
    us.mrr = u.at("mrr");
    us.rbo = u.at("rbo");
    us.rbo_norm = u.at("rbo_norm");
    us.jaccard = u.at("jaccard");
    report.per_user.push_back(us);
  }
  for (const json& g : j.at("groups")) {
    GroupStats gs;
    gs.name = g.at("name");
    gs.n_users = g.at("n_users");
    gs.mrr = g.at("mrr");
    gs.rbo = g.at("rbo");
    gs.rbo_norm = g.at("rbo_norm");
    gs.jaccard = g.at("jaccard");
    report.groups.push_back(gs);
  }
  return report;
}

std::string compare_to_json(const CompareResult& result) {
  json j;
  json names = json::array();
  for (TargetVariant v : result.strategies) names.push_back(to_string(v));
  j["strategies"] = names;
  json reports = json::array();
  for (const StabilityReport& r : result.reports) reports.push_back(json::parse(report_to_json(r)));
  j["reports"] = reports;
  json tests = json::array();
  for (const StrategyPairTest& t : result.tests)
    tests.push_back({{"a", to_string(t.a)},
                     {"b", to_string(t.b)},
                     {"statistic", t.statistic},
                     {"p_value", t.p_value},
                     {"skipped", t.skipped},
                     {"note", t.note}});
  j["wilcoxon"] = tests;
  j["warnings"] = result.warnings;
  return j.dump(2);
}

std::string sweep_to_json(const SweepResult& result) {
  json j;
  j["ks"] = result.ks;
  json reports = json::array();
  for (const StabilityReport& r : result.reports) reports.push_back(json::parse(report_to_json(r)));
  j["reports"] = reports;
  return j.dump(2);
}

void write_per_seed_csv(const StabilityReport& report, std::ostream& out) {
  out << std::setprecision(12);
  out << "seed,rbo_mean,rbo_norm_mean,jaccard_mean,mrr_m,mrr_mprime,recall_m,recall_mprime\n";
  for (const SeedStats& s : report.per_seed)
    out << s.seed << ',' << s.rbo_mean << ',' << s.rbo_norm_mean << ',' << s.jaccard_mean << ','
        << s.mrr_m << ',' << s.mrr_mprime << ',' << s.recall_m << ',' << s.recall_mprime << '\n';
}

void write_per_test_csv(const StabilityReport& report, std::ostream& out) {
  out << std::setprecision(12);
  out << "seed,test_index,user,item,rbo,rbo_norm,jaccard,rr_m,rr_mprime\n";
  for (const PerTestRow& r : report.per_test)
    out << r.seed << ',' << r.test_index << ',' << r.user << ',' << r.item << ',' << r.rbo << ','
        << r.rbo_norm << ',' << r.jaccard << ',' << r.rr_m << ',' << r.rr_mprime << '\n';
}

void write_per_user_csv(const StabilityReport& report, std::ostream& out) {
  out << std::setprecision(12);
  out << "user,n_scores,mrr,rbo,rbo_norm,jaccard\n";
  for (const UserStats& u : report.per_user)
    out << u.user << ',' << u.n_scores << ',' << u.mrr << ',' << u.rbo << ',' << u.rbo_norm << ','
        << u.jaccard << '\n';
}

void write_per_group_csv(const StabilityReport& report, std::ostream& out) {
  out << std::setprecision(12);
  out << "group,n_users,mrr,rbo,rbo_norm,jaccard\n";
  for (const GroupStats& g : report.groups)
    out << g.name << ',' << g.n_users << ',' << g.mrr << ',' << g.rbo << ',' << g.rbo_norm << ','
        << g.jaccard << '\n';
}

void write_compare_csv(const CompareResult& result, std::ostream& out) {
  out << std::setprecision(12);
  out << "strategy,seed,rbo_mean,rbo_norm_mean,jaccard_mean,mrr_m,mrr_mprime\n";
  for (std::size_t s = 0; s < result.strategies.size(); ++s)
    for (const SeedStats& st : result.reports[s].per_seed)
      out << to_string(result.strategies[s]) << ',' << st.seed << ',' << st.rbo_mean << ','
          << st.rbo_norm_mean << ',' << st.jaccard_mean << ',' << st.mrr_m << ',' << st.mrr_mprime
          << '\n';
}

void write_sweep_csv(const SweepResult& result, std::ostream& out) {
  out << std::setprecision(12);
  out << "k,seed,rbo_mean,rbo_norm_mean,jaccard_mean,mrr_m,mrr_mprime\n";
  for (std::size_t i = 0; i < result.ks.size(); ++i)
    for (const SeedStats& st : result.reports[i].per_seed)
      out << result.ks[i] << ',' << st.seed << ',' << st.rbo_mean << ',' << st.rbo_norm_mean << ','
          << st.jaccard_mean << ',' << st.mrr_m << ',' << st.mrr_mprime << '\n';
}

void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out) {
  out << std::setprecision(12);
  out << "requested_size,actual_size,n_users,trials,idag_ms_median,idag_ms_min,idag_ms_max,"
         "pipeline_ms_median,pipeline_ms_min,pipeline_ms_max\n";
  for (const BenchRow& r : rows)
    out << r.requested_size << ',' << r.actual_size << ',' << r.n_users << ',' << r.trials << ','
        << r.idag_ms_median << ',' << r.idag_ms_min << ',' << r.idag_ms_max << ','
        << r.pipeline_ms_median << ',' << r.pipeline_ms_min << ',' << r.pipeline_ms_max << '\n';
}

void write_report_files(const StabilityReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream out(fs::path(dir) / name);
    if (!out) throw ValidationError("cannot write " + (fs::path(dir) / name).string());
    return out;
  };
  {
    auto out = open("report.json");
    out << report_to_json(report) << '\n';
  }
  {
    auto out = open("per_seed.csv");
    write_per_seed_csv(report, out);
  }
  {
    auto out = open("per_test.csv");
    write_per_test_csv(report, out);
  }
  {
    auto out = open("per_user.csv");
    write_per_user_csv(report, out);
  }
  {
    auto out = open("per_group.csv");
    write_per_group_csv(report, out);
  }
}

}  // namespace ranksens
