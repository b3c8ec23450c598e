#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ranksens/dataset.hpp"
#include "ranksens/idag.hpp"

namespace ranksens {

enum class EditKind { loo, replace, insert };
enum class ItemStrategy { random, popular, unpopular };
enum class TargetVariant { random, earliest_random, latest_random, casper };

std::string to_string(EditKind k);
std::string to_string(ItemStrategy s);
std::string to_string(TargetVariant v);
EditKind edit_kind_from_string(const std::string& s);
ItemStrategy item_strategy_from_string(const std::string& s);
TargetVariant target_variant_from_string(const std::string& s);

/// One minimal edit. `target` is a position in train.interactions.
struct Perturbation {
  EditKind kind = EditKind::loo;
  std::int32_t target = 0;
  std::optional<std::int32_t> new_item;          // replace / insert
  std::optional<ItemStrategy> item_strategy;     // provenance only
};

struct TargetStrategy {
  TargetVariant variant = TargetVariant::random;
  int k = 1;
  std::uint64_t seed = 1;
};

/// JSON round-trip of a perturbation spec: {kind, strategy, item_strategy, k,
/// seed}. Used in experiment configs and report provenance.
struct PerturbationSpec {
  std::optional<EditKind> kind;                // absent = no edit (control)
  TargetVariant strategy = TargetVariant::random;
  std::optional<ItemStrategy> item_strategy;   // replace / insert only
  int k = 1;
  std::uint64_t seed = 1;
};

std::string perturbation_spec_to_json(const PerturbationSpec& spec);
PerturbationSpec perturbation_spec_from_json(const std::string& text);

/// Picks the interactions to edit. Random variants draw uniformly without
/// replacement from their pool (all interactions / per-user first / per-user
/// last); casper needs the prebuilt graph and scores and returns the top-k
/// cascading-score nodes mapped back to train positions.
std::vector<std::int32_t> choose_targets(const Dataset& train, const TargetStrategy& strategy,
                                         const Idag* graph = nullptr,
                                         const CascadeScores* scores = nullptr);

/// Replacement/insertion item. popular/unpopular pick by train count with
/// ties to the lowest id; random draws uniformly over the non-excluded items.
std::int32_t choose_item(const PopularityIndex& pop, ItemStrategy strategy,
                         const std::vector<std::int32_t>& exclude, std::uint64_t seed);

/// Applies one edit and returns the new dataset.
///   loo:     the target row is removed; every other row is untouched.
///   replace: the target's item becomes new_item (timestamp, seq unchanged).
///   insert:  a new (target user, new_item, target timestamp) row lands
///            immediately after the target; seq indices are renumbered to
///            keep the order total.
Dataset apply(const Dataset& train, const Perturbation& p);

}  // namespace ranksens
