#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hypereyes/expected.hpp"
#include "hypereyes/schema.hpp"
#include "hypereyes/world.hpp"

namespace hypereyes {

// Admissibility bounds for pivots and constraint chains.
inline constexpr std::size_t kMinPivotNeighbors = 4;
inline constexpr std::size_t kMaxPivotNeighbors = 12;
inline constexpr std::size_t kMaxValueOutDegree = 300;
inline constexpr std::size_t kMinAnswerSet = 1;
inline constexpr std::size_t kMaxAnswerSet = 8;
inline constexpr std::size_t kMinConstraints = 2;

enum class RejectReason {
  neighborhood_too_small,
  neighborhood_too_large,
  dead_end,
  no_admissible_predicate,
  cannot_reach_target,
};

std::string_view to_string(RejectReason r) noexcept;

struct Rejected {
  RejectReason reason;
};

struct PivotWalk {
  std::string pivot_id;
  std::vector<std::string> path;  // seed first, pivot last
};

/// 2- or 3-hop (uniform) random walk over the undirected graph; the endpoint must have
/// a first-order neighborhood of size in [4, 12].
Expected<PivotWalk, Rejected> random_walk_pivot(const WorldFixture& world, std::string_view seed_entity_id,
                                                std::uint64_t rng_seed);

/// Admissible (predicate, value) pairs among the candidates' attributes, sorted and unique.
std::vector<Attribute> filter_predicates(const WorldFixture& world, const std::set<std::string>& candidate_ids);

struct ConstraintChain {
  std::string pivot_id;
  std::vector<Attribute> constraints;
  std::set<std::string> answer_set;
  std::vector<std::size_t> candidate_sizes;  // |candidates| before the first and after each constraint
};

/// Greedy chain construction. Each step must strictly shrink the candidate set without emptying
/// it; preference order is family diversity, then the gentlest shrink, then predicate/value id.
Expected<ConstraintChain, Rejected> build_constraint_chain(const WorldFixture& world, std::string_view pivot_id,
                                                           std::uint64_t rng_seed);

/// Intersection over constraints, recomputed directly from the neighborhood.
std::set<std::string> chain_answer_set(const WorldFixture& world, std::string_view pivot_id,
                                       const std::vector<Attribute>& constraints);

/// Grid shape. Cells are indexed row-major.
struct Layout {
  std::size_t rows = 1;
  std::size_t cols = 2;

  [[nodiscard]] std::size_t cells() const noexcept { return rows * cols; }
  friend bool operator==(const Layout&, const Layout&) = default;
};

/// The layouts that satisfy 2 <= rows * cols <= 8.
std::vector<Layout> supported_layouts();

struct MosaicCell {
  std::size_t index = 0;
  Region region;
  std::string entity_id;
  std::string position_label;

  friend bool operator==(const MosaicCell&, const MosaicCell&) = default;
};

struct MosaicSpec {
  std::string image_id = "img_0";
  Layout layout;
  std::vector<MosaicCell> cells;

  friend bool operator==(const MosaicSpec&, const MosaicSpec&) = default;
};

class LayoutError : public std::invalid_argument {
 public:
  enum class Kind { cell_count_mismatch, unsupported_layout, empty_class };
  LayoutError(Kind kind, const std::string& what) : std::invalid_argument(what), kind_(kind) {}
  [[nodiscard]] Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

class SynthError : public std::runtime_error {
 public:
  enum class Kind { untemplatable_entity };
  SynthError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Position phrase for a grid cell ("left", "top-right", "second in the first row", ...).
std::string position_label(const Layout& layout, std::size_t index);

/// Regular-grid cell geometry.
Region grid_cell(const Layout& layout, std::size_t index);

/// Places every class at least once, fills the remaining cells with classes drawn uniformly
/// (repetition allowed), then draws one entity of the cell's class per cell.
MosaicSpec compose_mosaic(const WorldFixture& world, const std::vector<std::string>& class_names,
                          const Layout& layout, std::uint64_t rng_seed);

enum class QAKind { multi_entity, multi_constraint, imported };
enum class AggregateKind { sum, list };

std::string_view to_string(QAKind k) noexcept;
std::string_view to_string(AggregateKind k) noexcept;

struct Aggregate {
  AggregateKind kind = AggregateKind::sum;
  std::string attribute;  // literal key
};

struct QAItem {
  std::string id;
  QAKind kind = QAKind::imported;
  std::string question;
  std::string gold_answer;
  std::optional<MosaicSpec> scene;
  std::set<std::string> required_entities;
  std::string template_id;
  std::optional<Aggregate> aggregate;         // multi_entity items
  std::string pivot_id;                       // multi_constraint items
  std::vector<Attribute> constraints;         // multi_constraint items

  [[nodiscard]] bool valid() const noexcept;
};

/// Looks up a literal attribute value of an entity.
using LiteralLookup = std::function<std::optional<std::string>(const std::string& entity_id, const std::string& key)>;
LiteralLookup world_literals(const WorldFixture& world);

/// Recomputes a multi-entity gold answer from cell entities and the aggregate.
std::optional<std::string> recompute_multientity_gold(const MosaicSpec& scene, const Aggregate& agg,
                                                      const LiteralLookup& lookup);

/// Literal keys shared by every cell entity whose value also appears in one of that entity's snippets.
std::vector<std::string> templatable_attributes(const WorldFixture& world, const MosaicSpec& scene);

QAItem synth_multientity_question(const WorldFixture& world, const MosaicSpec& mosaic, std::uint64_t rng_seed);

/// Renders a constraint chain as a question; gold is the sorted answer-set names.
QAItem synth_constraint_question(const WorldFixture& world, const ConstraintChain& chain, std::uint64_t rng_seed);

/// Answers from parametric knowledge only; nullopt = abstain.
class ClosedBookOracle {
 public:
  virtual ~ClosedBookOracle() = default;
  virtual std::optional<std::string> answer(std::string_view question) const = 0;
};

/// Answers with the first famous fact whose key occurs in the question (case-insensitive).
class FamousFactsOracle final : public ClosedBookOracle {
 public:
  explicit FamousFactsOracle(std::vector<FamousFact> facts) : facts_(std::move(facts)) {}
  std::optional<std::string> answer(std::string_view question) const override;

 private:
  std::vector<FamousFact> facts_;
};

/// Keeps exactly the items the oracle answers incorrectly or abstains on.
std::vector<QAItem> tool_necessity_filter(const std::vector<QAItem>& items, const ClosedBookOracle& oracle);

nlohmann::json to_json(const QAItem& item);
QAItem qa_item_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MosaicSpec& scene);
MosaicSpec mosaic_from_json(const nlohmann::json& j);

}  // namespace hypereyes
