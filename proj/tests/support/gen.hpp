#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hypereyes/eval.hpp"
#include "hypereyes/synth.hpp"
#include "hypereyes/world.hpp"

namespace hypereyes::testing {

std::string data_path(const std::string& name);
WorldFixture demo_world();

/// Random knowledge graph: a few film-like pivots, each with 3-14 linked people carrying
/// whitelisted, blacklisted and neutral attributes.
WorldFixture random_kg(std::uint64_t seed);
/// Ids of the pivot entities random_kg creates.
std::vector<std::string> random_kg_pivots(const WorldFixture& world);

/// Mosaic-ready world: `classes` classes of `per_class` entities, each with a numeric
/// size_cm literal and a colour literal that its snippets mention.
WorldFixture creature_world(std::uint64_t seed, std::size_t classes = 8, std::size_t per_class = 3);

/// Multi-entity QA over random layouts with at most `max_cells` cells.
std::vector<QAItem> mosaic_corpus(const WorldFixture& world, std::size_t n, std::uint64_t seed,
                                  std::size_t max_cells = 4);

/// One text-search round whose single request returned two results naming `gold` (tagged with
/// their source entity), followed by an answer turn. Distractors come from the "birds" topic.
RobustnessCase two_evidence_case(const WorldFixture& world, const std::string& entity_id);


}  // namespace hypereyes::testing
