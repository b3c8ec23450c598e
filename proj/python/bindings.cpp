#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>

#include "ranksens/dataset.hpp"
#include "ranksens/errors.hpp"
#include "ranksens/harness.hpp"
#include "ranksens/idag.hpp"
#include "ranksens/metrics.hpp"
#include "ranksens/model.hpp"
#include "ranksens/perturb.hpp"
#include "ranksens/wilcoxon.hpp"

namespace py = pybind11;
using namespace ranksens;

namespace {

RankList make_list(std::vector<std::int32_t> items, std::int32_t universe) {
  return RankList{std::move(items), universe};
}

Dataset load_path(const std::string& path, const std::string& format, int user_col, int item_col,
                  int time_col, bool header) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open input file: " + path);
  return load_interactions(in, format == "tsv" ? TextFormat::tsv : TextFormat::csv,
                           ColumnMap::indices(user_col, item_col, time_col, header));
}

}  // namespace

PYBIND11_MODULE(_ranksens, m) {
  m.doc() = "rank-list sensitivity auditing for sequential recommenders";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);

  py::class_<Interaction>(m, "Interaction")
      .def_readonly("user", &Interaction::user)
      .def_readonly("item", &Interaction::item)
      .def_readonly("timestamp", &Interaction::timestamp)
      .def_readonly("seq_index", &Interaction::seq_index)
      .def("__repr__", [](const Interaction& x) {
        std::ostringstream ss;
        ss << "Interaction(user=" << x.user << ", item=" << x.item << ", t=" << x.timestamp << ")";
        return ss.str();
      });

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("interactions", &Dataset::interactions)
      .def_readonly("n_users", &Dataset::n_users)
      .def_readonly("n_items", &Dataset::n_items)
      .def_readonly("user_sequences", &Dataset::user_sequences)
      .def_readonly("item_sequences", &Dataset::item_sequences)
      .def_readonly("user_labels", &Dataset::user_labels)
      .def_readonly("item_labels", &Dataset::item_labels)
      .def("__len__", &Dataset::size);

  py::class_<TemporalSplit>(m, "TemporalSplit")
      .def_readonly("train", &TemporalSplit::train)
      .def_readonly("test", &TemporalSplit::test)
      .def_readonly("frac", &TemporalSplit::frac);

  py::class_<PopularityIndex>(m, "PopularityIndex")
      .def_readonly("counts", &PopularityIndex::counts)
      .def_readonly("order", &PopularityIndex::order);

  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("n_users", &SynthConfig::n_users)
      .def_readwrite("n_items", &SynthConfig::n_items)
      .def_readwrite("events_per_user", &SynthConfig::events_per_user)
      .def_readwrite("markov_order", &SynthConfig::markov_order)
      .def_readwrite("concentration", &SynthConfig::concentration);

  m.def("load_interactions", &load_path, py::arg("path"), py::arg("format") = "csv",
        py::arg("user_col") = 0, py::arg("item_col") = 1, py::arg("time_col") = 2,
        py::arg("header") = false);
  m.def("filter_min_activity", &filter_min_activity, py::arg("dataset"), py::arg("min_count") = 10);
  m.def("temporal_split", &temporal_split, py::arg("dataset"), py::arg("frac") = 0.9);
  m.def("item_popularity", &item_popularity, py::arg("train"));
  m.def("synth_generate", &synth_generate, py::arg("config"), py::arg("seed"));
  m.def("synth_transition_row", &synth_transition_row, py::arg("config"), py::arg("seed"),
        py::arg("user"), py::arg("item"));

  // metrics on plain item-id lists
  m.def(
      "rbo",
      [](const std::vector<std::int32_t>& a, const std::vector<std::int32_t>& b,
         std::int32_t universe, double p) {
        return rbo(make_list(a, universe), make_list(b, universe), {p});
      },
      py::arg("a"), py::arg("b"), py::arg("universe"), py::arg("p") = 0.9);
  m.def(
      "rbo_normalized",
      [](const std::vector<std::int32_t>& a, const std::vector<std::int32_t>& b,
         std::int32_t universe, double p) {
        return rbo_normalized(make_list(a, universe), make_list(b, universe), {p});
      },
      py::arg("a"), py::arg("b"), py::arg("universe"), py::arg("p") = 0.9);
  m.def(
      "jaccard_top_k",
      [](const std::vector<std::int32_t>& a, const std::vector<std::int32_t>& b, int k) {
        std::int32_t universe = 0;
        for (std::int32_t x : a) universe = std::max(universe, x + 1);
        for (std::int32_t x : b) universe = std::max(universe, x + 1);
        return jaccard_top_k(make_list(a, universe), make_list(b, universe), k);
      },
      py::arg("a"), py::arg("b"), py::arg("k") = 10);
  m.def(
      "reciprocal_rank",
      [](const std::vector<std::int32_t>& list, std::int32_t truth) {
        return reciprocal_rank(make_list(list, static_cast<std::int32_t>(list.size())), truth);
      },
      py::arg("list"), py::arg("truth"));
  m.def(
      "recall_at_k",
      [](const std::vector<std::int32_t>& list, std::int32_t truth, int k) {
        return recall_at_k(make_list(list, static_cast<std::int32_t>(list.size())), truth, k);
      },
      py::arg("list"), py::arg("truth"), py::arg("k") = 10);

  m.def(
      "wilcoxon_signed_rank",
      [](const std::vector<double>& x, const std::vector<double>& y) {
        const WilcoxonResult r = wilcoxon_signed_rank(x, y);
        return py::make_tuple(r.statistic, r.p_value);
      },
      py::arg("x"), py::arg("y"));

  py::class_<Idag>(m, "Idag")
      .def_readonly("node_interaction", &Idag::node_interaction)
      .def_readonly("out_user", &Idag::out_user)
      .def_readonly("out_item", &Idag::out_item)
      .def_readonly("in_degree", &Idag::in_degree)
      .def_property_readonly("n_nodes", &Idag::size)
      .def("edge_count", &Idag::edge_count);

  py::class_<CascadeScores>(m, "CascadeScores")
      .def_readonly("zero_nodes", &CascadeScores::zero_nodes)
      .def_readonly("scores", &CascadeScores::scores)
      .def_property_readonly("z", &CascadeScores::z);

  m.def(
      "build_idag",
      [](const Dataset& train, std::optional<std::int32_t> max_seq_len) {
        return build_idag(train, max_seq_len);
      },
      py::arg("train"), py::arg("max_seq_len") = py::none());
  m.def("descendant_count", &descendant_count, py::arg("graph"), py::arg("node"));
  m.def("cascading_scores", &cascading_scores, py::arg("graph"));
  m.def("select_targets", &select_targets, py::arg("graph"), py::arg("train"), py::arg("scores"),
        py::arg("k") = 1);

  py::enum_<EditKind>(m, "EditKind")
      .value("loo", EditKind::loo)
      .value("replace", EditKind::replace)
      .value("insert", EditKind::insert);
  py::enum_<ItemStrategy>(m, "ItemStrategy")
      .value("random", ItemStrategy::random)
      .value("popular", ItemStrategy::popular)
      .value("unpopular", ItemStrategy::unpopular);
  py::enum_<TargetVariant>(m, "TargetVariant")
      .value("random", TargetVariant::random)
      .value("earliest_random", TargetVariant::earliest_random)
      .value("latest_random", TargetVariant::latest_random)
      .value("casper", TargetVariant::casper);

  py::class_<TargetStrategy>(m, "TargetStrategy")
      .def(py::init<>())
      .def_readwrite("variant", &TargetStrategy::variant)
      .def_readwrite("k", &TargetStrategy::k)
      .def_readwrite("seed", &TargetStrategy::seed);

  py::class_<Perturbation>(m, "Perturbation")
      .def(py::init<>())
      .def_readwrite("kind", &Perturbation::kind)
      .def_readwrite("target", &Perturbation::target)
      .def_readwrite("new_item", &Perturbation::new_item)
      .def_readwrite("item_strategy", &Perturbation::item_strategy);

  m.def(
      "choose_targets",
      [](const Dataset& train, const TargetStrategy& strategy, const Idag* graph,
         const CascadeScores* scores) { return choose_targets(train, strategy, graph, scores); },
      py::arg("train"), py::arg("strategy"), py::arg("graph") = nullptr,
      py::arg("scores") = nullptr);
  m.def("choose_item", &choose_item, py::arg("popularity"), py::arg("strategy"),
        py::arg("exclude"), py::arg("seed"));
  m.def("apply_perturbation", &apply, py::arg("train"), py::arg("perturbation"));

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("dim", &ModelConfig::dim)
      .def_readwrite("learning_rate", &ModelConfig::learning_rate)
      .def_readwrite("drift", &ModelConfig::drift)
      .def_readwrite("epochs", &ModelConfig::epochs)
      .def_readwrite("negatives", &ModelConfig::negatives)
      .def_readwrite("max_seq_len", &ModelConfig::max_seq_len)
      .def_readwrite("seed", &ModelConfig::seed);

  py::class_<SeqEmbModel>(m, "SeqEmbModel")
      .def_readonly("n_users", &SeqEmbModel::n_users)
      .def_readonly("n_items", &SeqEmbModel::n_items)
      .def_readonly("config", &SeqEmbModel::config)
      .def_readonly("user_emb", &SeqEmbModel::user_emb)
      .def_readonly("item_emb", &SeqEmbModel::item_emb);

  m.def("init_model", &init_model, py::arg("n_users"), py::arg("n_items"), py::arg("config"));
  m.def("fit", &fit, py::arg("model"), py::arg("train"));
  m.def(
      "rank_for_test",
      [](const SeqEmbModel& model, const TemporalSplit& split) {
        std::vector<std::vector<std::int32_t>> lists;
        for (RankList& list : rank_for_test(model, split)) lists.push_back(std::move(list.items));
        return lists;
      },
      py::arg("model"), py::arg("split"));
  m.def(
      "save_model",
      [](const SeqEmbModel& model, const std::string& path) {
        std::ofstream out(path);
        if (!out) throw ValidationError("cannot write " + path);
        save_model(model, out);
      },
      py::arg("model"), py::arg("path"));
  m.def(
      "load_model",
      [](const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ValidationError("cannot open " + path);
        return load_model(in);
      },
      py::arg("path"));

  // harness entry points bridge configs and reports as JSON strings; the
  // python package wraps them with dict interfaces
  m.def("standard_benchmark_json",
        [] { return experiment_config_to_json(standard_benchmark()); });
  m.def(
      "run_control_json",
      [](const std::string& config_json) {
        return report_to_json(run_control(experiment_config_from_json(config_json)));
      },
      py::arg("config_json"));
  m.def(
      "run_stability_json",
      [](const std::string& config_json) {
        return report_to_json(run_stability(experiment_config_from_json(config_json)));
      },
      py::arg("config_json"));
  m.def(
      "compare_strategies_json",
      [](const std::string& config_json, const std::vector<std::string>& strategies) {
        std::vector<TargetVariant> variants;
        for (const std::string& s : strategies) variants.push_back(target_variant_from_string(s));
        return compare_to_json(compare_strategies(experiment_config_from_json(config_json), variants));
      },
      py::arg("config_json"), py::arg("strategies"));
  m.def(
      "sweep_k_json",
      [](const std::string& config_json, const std::vector<int>& ks) {
        return sweep_to_json(sweep_k(experiment_config_from_json(config_json), ks));
      },
      py::arg("config_json"), py::arg("ks"));
  m.def(
      "runtime_benchmark_csv",
      [](const std::vector<std::int64_t>& sizes, int trials, std::int32_t n_users,
         std::int32_t n_items) {
        BenchConfig bench;
        bench.trials = trials;
        bench.n_users = n_users;
        bench.n_items = n_items;
        std::ostringstream out;
        write_bench_csv(runtime_benchmark(sizes, bench), out);
        return out.str();
      },
      py::arg("sizes"), py::arg("trials") = 3, py::arg("n_users") = 200, py::arg("n_items") = 100);

  m.attr("__version__") = "0.1.0";
}
