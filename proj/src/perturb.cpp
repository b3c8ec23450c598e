#include "ranksens/perturb.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "ranksens/errors.hpp"
#include "ranksens/rng.hpp"

namespace ranksens {

namespace {

enum StreamTag : std::uint64_t {
  kTargetDraw = 11,
  kItemDraw = 12,
};

}  // namespace

std::string to_string(EditKind k) {
  switch (k) {
    case EditKind::loo: return "loo";
    case EditKind::replace: return "replace";
    case EditKind::insert: return "insert";
  }
  return "?";
}

std::string to_string(ItemStrategy s) {
  switch (s) {
    case ItemStrategy::random: return "random";
    case ItemStrategy::popular: return "popular";
    case ItemStrategy::unpopular: return "unpopular";
  }
  return "?";
}

std::string to_string(TargetVariant v) {
  switch (v) {
    case TargetVariant::random: return "random";
    case TargetVariant::earliest_random: return "earliest_random";
    case TargetVariant::latest_random: return "latest_random";
    case TargetVariant::casper: return "casper";
  }
  return "?";
}

EditKind edit_kind_from_string(const std::string& s) {
  if (s == "loo") return EditKind::loo;
  if (s == "replace") return EditKind::replace;
  if (s == "insert") return EditKind::insert;
  throw ValidationError("unknown edit kind \"" + s + "\" (expected loo|replace|insert)");
}

ItemStrategy item_strategy_from_string(const std::string& s) {
  if (s == "random") return ItemStrategy::random;
  if (s == "popular") return ItemStrategy::popular;
  if (s == "unpopular") return ItemStrategy::unpopular;
  throw ValidationError("unknown item strategy \"" + s + "\" (expected random|popular|unpopular)");
}

TargetVariant target_variant_from_string(const std::string& s) {
  if (s == "random") return TargetVariant::random;
  if (s == "earliest_random") return TargetVariant::earliest_random;
  if (s == "latest_random") return TargetVariant::latest_random;
  if (s == "casper") return TargetVariant::casper;
  throw ValidationError("unknown target strategy \"" + s +
                        "\" (expected random|earliest_random|latest_random|casper)");
}

std::string perturbation_spec_to_json(const PerturbationSpec& spec) {
  nlohmann::json j;
  j["kind"] = spec.kind ? nlohmann::json(to_string(*spec.kind)) : nlohmann::json(nullptr);
  j["strategy"] = to_string(spec.strategy);
  j["item_strategy"] =
      spec.item_strategy ? nlohmann::json(to_string(*spec.item_strategy)) : nlohmann::json(nullptr);
  j["k"] = spec.k;
  j["seed"] = spec.seed;
  return j.dump();
}

PerturbationSpec perturbation_spec_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  PerturbationSpec spec;
  if (j.contains("kind") && !j["kind"].is_null())
    spec.kind = edit_kind_from_string(j["kind"].get<std::string>());
  if (j.contains("strategy")) spec.strategy = target_variant_from_string(j["strategy"].get<std::string>());
  if (j.contains("item_strategy") && !j["item_strategy"].is_null())
    spec.item_strategy = item_strategy_from_string(j["item_strategy"].get<std::string>());
  if (j.contains("k")) spec.k = j["k"].get<int>();
  if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
  if (spec.k < 1) throw ValidationError("perturbation spec: k must be >= 1");
  return spec;
}

std::vector<std::int32_t> choose_targets(const Dataset& train, const TargetStrategy& strategy,
                                         const Idag* graph, const CascadeScores* scores) {
  if (strategy.k < 1) throw std::invalid_argument("choose_targets: k must be >= 1");

  if (strategy.variant == TargetVariant::casper) {
    if (!graph || !scores)
      throw std::invalid_argument("choose_targets: casper needs the dependency graph and scores");
    auto nodes = select_targets(*graph, train, *scores, strategy.k);
    std::vector<std::int32_t> refs;
    refs.reserve(nodes.size());
    for (std::int32_t node : nodes) refs.push_back(graph->node_interaction[node]);
    return refs;
  }

  std::vector<std::int32_t> pool;
  switch (strategy.variant) {
    case TargetVariant::random:
      pool.resize(train.interactions.size());
      std::iota(pool.begin(), pool.end(), 0);
      break;
    case TargetVariant::earliest_random:
      for (const auto& seq : train.user_sequences)
        if (!seq.empty()) pool.push_back(seq.front());
      break;
    case TargetVariant::latest_random:
      for (const auto& seq : train.user_sequences)
        if (!seq.empty()) pool.push_back(seq.back());
      break;
    case TargetVariant::casper: break;  // handled above
  }
  if (static_cast<std::size_t>(strategy.k) > pool.size())
    throw std::invalid_argument("choose_targets: pool smaller than k");

  // Partial Fisher-Yates: the first k slots are a uniform sample without
  // replacement.
  Rng rng = Rng::keyed(strategy.seed, 0, kTargetDraw);
  const std::size_t n = pool.size();
  for (int i = 0; i < strategy.k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n - static_cast<std::size_t>(i)));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(strategy.k);
  return pool;
}

std::int32_t choose_item(const PopularityIndex& pop, ItemStrategy strategy,
                         const std::vector<std::int32_t>& exclude, std::uint64_t seed) {
  const auto n_items = static_cast<std::int32_t>(pop.counts.size());
  std::vector<std::uint8_t> excluded(n_items, 0);
  for (std::int32_t e : exclude)
    if (e >= 0 && e < n_items) excluded[e] = 1;

  switch (strategy) {
    case ItemStrategy::popular:
      for (std::int32_t id : pop.order)
        if (!excluded[id]) return id;
      break;
    case ItemStrategy::unpopular:
      for (auto it = pop.order.rbegin(); it != pop.order.rend(); ++it) {
        // reversed (count desc, id asc) gives (count asc, id desc); walk the
        // equal-count run to its lowest non-excluded id.
        if (excluded[*it]) continue;
        std::int32_t best = *it;
        auto jt = it;
        for (++jt; jt != pop.order.rend() && pop.counts[*jt] == pop.counts[*it]; ++jt)
          if (!excluded[*jt]) best = *jt;
        return best;
      }
      break;
    case ItemStrategy::random: {
      std::vector<std::int32_t> candidates;
      for (std::int32_t id = 0; id < n_items; ++id)
        if (!excluded[id]) candidates.push_back(id);
      if (candidates.empty()) break;
      Rng rng = Rng::keyed(seed, 0, kItemDraw);
      return candidates[rng.below(candidates.size())];
    }
  }
  throw std::invalid_argument("choose_item: every item is excluded");
}

Dataset apply(const Dataset& train, const Perturbation& p) {
  if (p.target < 0 || static_cast<std::size_t>(p.target) >= train.interactions.size())
    throw std::invalid_argument("apply: unknown target interaction");
  const Interaction target = train.interactions[p.target];

  std::vector<Interaction> rows;
  switch (p.kind) {
    case EditKind::loo:
      rows.reserve(train.interactions.size() - 1);
      for (std::size_t i = 0; i < train.interactions.size(); ++i)
        if (static_cast<std::int32_t>(i) != p.target) rows.push_back(train.interactions[i]);
      break;
    case EditKind::replace: {
      if (!p.new_item) throw std::invalid_argument("apply: replace needs new_item");
      if (*p.new_item == target.item)
        throw std::invalid_argument("apply: replacement item equals the original item");
      if (*p.new_item < 0 || *p.new_item >= train.n_items)
        throw std::invalid_argument("apply: new_item out of range");
      rows = train.interactions;
      rows[p.target].item = *p.new_item;
      break;
    }
    case EditKind::insert: {
      if (!p.new_item) throw std::invalid_argument("apply: insert needs new_item");
      if (*p.new_item < 0 || *p.new_item >= train.n_items)
        throw std::invalid_argument("apply: new_item out of range");
      rows.reserve(train.interactions.size() + 1);
      Interaction added;
      added.user = target.user;
      added.item = *p.new_item;
      added.timestamp = target.timestamp;
      for (std::size_t i = 0; i < train.interactions.size(); ++i) {
        rows.push_back(train.interactions[i]);
        if (static_cast<std::int32_t>(i) == p.target) rows.push_back(added);
      }
      // Renumbering keeps seq_index unique and the inserted row immediately
      // after its target even inside an equal-timestamp run.
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i].seq_index = static_cast<std::int64_t>(i);
      break;
    }
  }
  return Dataset::assemble(std::move(rows), train.n_users, train.n_items, train.user_labels,
                           train.item_labels);
}

}  // namespace ranksens
