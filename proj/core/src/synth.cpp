#include "hypereyes/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <tuple>

#include "hypereyes/rng.hpp"
#include "hypereyes/text.hpp"

namespace hypereyes {

namespace {

using json = nlohmann::json;

std::string ordinal(std::size_t n) {
  static constexpr std::array<const char*, 8> kWords = {"first", "second", "third", "fourth",
                                                        "fifth", "sixth",  "seventh", "eighth"};
  return n < kWords.size() ? kWords[n] : std::to_string(n + 1) + "th";
}

std::string humanize(std::string_view key) {
  std::string out(key);
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

bool snippet_mentions(const Entity& e, std::string_view value) {
  const auto needle = collapse_whitespace_lower(value);
  return std::any_of(e.snippets.begin(), e.snippets.end(), [&](const std::string& s) {
    return collapse_whitespace_lower(s).find(needle) != std::string::npos;
  });
}

}  // namespace

std::string_view to_string(RejectReason r) noexcept {
  switch (r) {
    case RejectReason::neighborhood_too_small: return "neighborhood_too_small";
    case RejectReason::neighborhood_too_large: return "neighborhood_too_large";
    case RejectReason::dead_end: return "dead_end";
    case RejectReason::no_admissible_predicate: return "no_admissible_predicate";
    case RejectReason::cannot_reach_target: return "cannot_reach_target";
  }
  return "dead_end";
}

std::string_view to_string(QAKind k) noexcept {
  switch (k) {
    case QAKind::multi_entity: return "multi_entity";
    case QAKind::multi_constraint: return "multi_constraint";
    case QAKind::imported: return "imported";
  }
  return "imported";
}

std::string_view to_string(AggregateKind k) noexcept { return k == AggregateKind::sum ? "sum" : "list"; }

Expected<PivotWalk, Rejected> random_walk_pivot(const WorldFixture& world, std::string_view seed_entity_id,
                                                std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  PivotWalk walk;
  walk.path.emplace_back(world.entity(seed_entity_id).id);
  const auto hops = 2 + rng.below(2);
  for (std::uint64_t h = 0; h < hops; ++h) {
    const auto nb = world.neighbors(walk.path.back());
    if (nb.empty()) return Rejected{RejectReason::dead_end};
    const std::vector<std::string> choices(nb.begin(), nb.end());
    walk.path.push_back(choices[rng.below(choices.size())]);
  }
  const auto n = world.neighbors(walk.path.back()).size();
  if (n < kMinPivotNeighbors) return Rejected{RejectReason::neighborhood_too_small};
  if (n > kMaxPivotNeighbors) return Rejected{RejectReason::neighborhood_too_large};
  walk.pivot_id = walk.path.back();
  return walk;
}

std::vector<Attribute> filter_predicates(const WorldFixture& world, const std::set<std::string>& candidate_ids) {
  const auto blacklisted = world.blacklisted_families();
  std::set<Attribute> out;
  for (const auto& id : candidate_ids) {
    for (const auto& attr : world.entity(id).attributes) {
      const auto* pred = world.find_predicate(attr.predicate_id);
      if (!pred || pred->listed != Listing::whitelist) continue;
      if (blacklisted.count(pred->family)) continue;
      if (world.abstract_values().count(attr.value_id)) continue;
      if (world.out_degree(attr.value_id) > kMaxValueOutDegree) continue;
      if (world.bias_prone_types().count(world.entity(attr.value_id).class_name)) continue;
      out.insert(attr);
    }
  }
  return {out.begin(), out.end()};
}

std::set<std::string> chain_answer_set(const WorldFixture& world, std::string_view pivot_id,
                                       const std::vector<Attribute>& constraints) {
  std::set<std::string> out;
  for (const auto& b : world.neighbors(pivot_id)) {
    bool all = true;
    for (const auto& c : constraints) all = all && world.has_attribute(b, c);
    if (all) out.insert(b);
  }
  return out;
}

Expected<ConstraintChain, Rejected> build_constraint_chain(const WorldFixture& world, std::string_view pivot_id,
                                                           std::uint64_t /*rng_seed*/) {
  ConstraintChain chain;
  chain.pivot_id = world.entity(pivot_id).id;
  auto candidates = world.neighbors(pivot_id);
  chain.candidate_sizes.push_back(candidates.size());

  const auto admissible = filter_predicates(world, candidates);
  if (admissible.empty()) return Rejected{RejectReason::no_admissible_predicate};

  std::set<std::string> families;
  auto in_target = [](std::size_t n) { return n >= kMinAnswerSet && n <= kMaxAnswerSet; };

  while (!(chain.constraints.size() >= kMinConstraints && in_target(candidates.size()))) {
    struct Option {
      const Attribute* attr;
      int diversity;
      std::set<std::string> next;
    };
    std::vector<Option> options;
    bool any_nonempty = false;
    for (const auto& attr : admissible) {
      if (std::find(chain.constraints.begin(), chain.constraints.end(), attr) != chain.constraints.end()) continue;
      std::set<std::string> next;
      for (const auto& b : candidates)
        if (world.has_attribute(b, attr)) next.insert(b);
      if (next.empty()) continue;
      any_nonempty = true;
      if (next.size() >= candidates.size()) continue;
      const int diversity = families.count(world.find_predicate(attr.predicate_id)->family) ? 0 : 1;
      options.push_back({&attr, diversity, std::move(next)});
    }
    if (!any_nonempty) return Rejected{RejectReason::no_admissible_predicate};
    if (options.empty()) return Rejected{RejectReason::cannot_reach_target};

    const auto best = std::min_element(options.begin(), options.end(), [](const Option& a, const Option& b) {
      // Higher diversity first, then the larger surviving set, then ids.
      return std::forward_as_tuple(-a.diversity, b.next.size(), a.attr->predicate_id, a.attr->value_id) <
             std::forward_as_tuple(-b.diversity, a.next.size(), b.attr->predicate_id, b.attr->value_id);
    });
    chain.constraints.push_back(*best->attr);
    families.insert(world.find_predicate(best->attr->predicate_id)->family);
    candidates = std::move(best->next);
    chain.candidate_sizes.push_back(candidates.size());
  }
  chain.answer_set = std::move(candidates);
  return chain;
}

std::vector<Layout> supported_layouts() {
  std::vector<Layout> out;
  for (std::size_t r = 1; r <= 8; ++r)
    for (std::size_t c = 1; c <= 8; ++c)
      if (r * c >= 2 && r * c <= 8) out.push_back({r, c});
  return out;
}

Region grid_cell(const Layout& layout, std::size_t index) {
  const auto r = index / layout.cols;
  const auto c = index % layout.cols;
  const auto cols = static_cast<double>(layout.cols);
  const auto rows = static_cast<double>(layout.rows);
  return Region{static_cast<double>(c) / cols, static_cast<double>(r) / rows, static_cast<double>(c + 1) / cols,
                static_cast<double>(r + 1) / rows};
}

std::string position_label(const Layout& layout, std::size_t index) {
  const auto r = index / layout.cols;
  const auto c = index % layout.cols;
  if (layout.rows == 1 && layout.cols == 2) return c == 0 ? "left" : "right";
  if (layout.rows == 2 && layout.cols == 1) return r == 0 ? "top" : "bottom";
  if (layout.rows == 2 && layout.cols == 2)
    return std::string(r == 0 ? "top" : "bottom") + "-" + (c == 0 ? "left" : "right");
  if (layout.rows == 1) return ordinal(c) + " from the left";
  if (layout.cols == 1) return ordinal(r) + " from the top";
  return ordinal(c) + " in the " + ordinal(r) + " row";
}

MosaicSpec compose_mosaic(const WorldFixture& world, const std::vector<std::string>& class_names, const Layout& layout,
                          std::uint64_t rng_seed) {
  const auto n_cells = layout.cells();
  if (layout.rows == 0 || layout.cols == 0 || n_cells < 2 || n_cells > 8)
    throw LayoutError(LayoutError::Kind::unsupported_layout, "layout must have 2..8 cells");
  if (class_names.size() < 2 || class_names.size() > 8)
    throw LayoutError(LayoutError::Kind::cell_count_mismatch, "a mosaic draws from 2..8 classes");
  if (class_names.size() > n_cells)
    throw LayoutError(LayoutError::Kind::cell_count_mismatch, "more classes than layout cells");

  std::vector<std::vector<std::string>> members;
  for (const auto& cls : class_names) {
    members.push_back(world.entities_of_class(cls));
    if (members.back().empty()) throw LayoutError(LayoutError::Kind::empty_class, "class has no entities: " + cls);
  }

  Rng rng(rng_seed);
  std::vector<std::size_t> placement(class_names.size());
  for (std::size_t i = 0; i < placement.size(); ++i) placement[i] = i;
  while (placement.size() < n_cells) placement.push_back(rng.below(class_names.size()));
  rng.shuffle(placement);

  MosaicSpec spec;
  spec.layout = layout;
  for (std::size_t i = 0; i < n_cells; ++i) {
    const auto& pool = members[placement[i]];
    spec.cells.push_back({i, grid_cell(layout, i), pool[rng.below(pool.size())], position_label(layout, i)});
  }
  return spec;
}

bool QAItem::valid() const noexcept {
  if (trim(gold_answer).empty()) return false;
  if (kind == QAKind::multi_entity) return scene.has_value() && required_entities.size() >= 2;
  return true;
}

LiteralLookup world_literals(const WorldFixture& world) {
  return [&world](const std::string& id, const std::string& key) -> std::optional<std::string> {
    if (!world.has_entity(id)) return std::nullopt;
    const auto& lit = world.entity(id).literals;
    auto it = lit.find(key);
    if (it == lit.end()) return std::nullopt;
    return it->second;
  };
}

std::optional<std::string> recompute_multientity_gold(const MosaicSpec& scene, const Aggregate& agg,
                                                      const LiteralLookup& lookup) {
  std::vector<std::string> values;
  for (const auto& cell : scene.cells) {
    auto v = lookup(cell.entity_id, agg.attribute);
    if (!v) return std::nullopt;
    values.push_back(*v);
  }
  if (agg.kind == AggregateKind::list) return join(values, ", ");
  double sum = 0.0;
  for (const auto& v : values) {
    double x = 0.0;
    if (!parse_number(v, x)) return std::nullopt;
    sum += x;
  }
  return format_number(sum);
}

std::vector<std::string> templatable_attributes(const WorldFixture& world, const MosaicSpec& scene) {
  std::vector<std::string> keys;
  if (scene.cells.empty()) return keys;
  for (const auto& [key, _] : world.entity(scene.cells.front().entity_id).literals) {
    bool everywhere = true;
    for (const auto& cell : scene.cells) {
      const auto& e = world.entity(cell.entity_id);
      auto it = e.literals.find(key);
      everywhere = everywhere && it != e.literals.end() && snippet_mentions(e, it->second);
    }
    if (everywhere) keys.push_back(key);
  }
  return keys;
}

QAItem synth_multientity_question(const WorldFixture& world, const MosaicSpec& mosaic, std::uint64_t rng_seed) {
  const auto keys = templatable_attributes(world, mosaic);
  if (keys.empty())
    throw SynthError(SynthError::Kind::untemplatable_entity, "no attribute is templatable for every cell entity");

  Rng rng(rng_seed);
  const auto& key = keys[rng.below(keys.size())];
  bool numeric = true;
  for (const auto& cell : mosaic.cells) {
    double x = 0.0;
    numeric = numeric && parse_number(world.entity(cell.entity_id).literals.at(key), x);
  }
  Aggregate agg{numeric ? AggregateKind::sum : AggregateKind::list, key};

  std::vector<std::string> refs;
  for (const auto& cell : mosaic.cells)
    refs.push_back("the " + humanize(world.entity(cell.entity_id).class_name) + " at the " + cell.position_label);
  std::string refs_text;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (i) refs_text += (i + 1 == refs.size()) ? " and " : ", ";
    refs_text += refs[i];
  }

  QAItem item;
  item.kind = QAKind::multi_entity;
  item.scene = mosaic;
  item.aggregate = agg;
  if (agg.kind == AggregateKind::sum) {
    item.template_id = "mosaic_sum_v1";
    item.question = "In image " + mosaic.image_id + ", what is the total " + humanize(key) + " of " + refs_text + "?";
  } else {
    item.template_id = "mosaic_list_v1";
    item.question = "In image " + mosaic.image_id + ", list the " + humanize(key) + " of " + refs_text +
                    ", in that order, separated by commas.";
  }
  item.gold_answer = recompute_multientity_gold(mosaic, agg, world_literals(world)).value();
  for (const auto& cell : mosaic.cells) item.required_entities.insert(cell.entity_id);
  item.id = "me-" + std::to_string(fnv1a64(item.question) & 0xffffffffffffULL);
  return item;
}

QAItem synth_constraint_question(const WorldFixture& world, const ConstraintChain& chain, std::uint64_t rng_seed) {
  static constexpr std::array<std::string_view, 2> kLeads = {"Among the entities directly linked to ",
                                                             "Considering everything connected to "};
  Rng rng(rng_seed);
  const auto lead_index = rng.below(kLeads.size());
  std::string q(kLeads[lead_index]);
  q += world.entity(chain.pivot_id).name + ", which ones have ";
  for (std::size_t i = 0; i < chain.constraints.size(); ++i) {
    const auto& c = chain.constraints[i];
    if (i) q += (i + 1 == chain.constraints.size()) ? " and " : ", ";
    q += humanize(c.predicate_id) + " " + world.entity(c.value_id).name;
  }
  q += "?";

  std::vector<std::string> names;
  for (const auto& id : chain.answer_set) names.push_back(world.entity(id).name);
  std::sort(names.begin(), names.end());

  QAItem item;
  item.kind = QAKind::multi_constraint;
  item.question = std::move(q);
  item.gold_answer = join(names, ", ");
  item.required_entities = chain.answer_set;
  item.template_id = "chain_v1." + std::to_string(lead_index);
  item.pivot_id = chain.pivot_id;
  item.constraints = chain.constraints;
  item.id = "mc-" + std::to_string(fnv1a64(item.question) & 0xffffffffffffULL);
  return item;
}

std::optional<std::string> FamousFactsOracle::answer(std::string_view question) const {
  const auto q = collapse_whitespace_lower(question);
  for (const auto& f : facts_)
    if (q.find(collapse_whitespace_lower(f.key)) != std::string::npos) return f.answer;
  return std::nullopt;
}

std::vector<QAItem> tool_necessity_filter(const std::vector<QAItem>& items, const ClosedBookOracle& oracle) {
  std::vector<QAItem> kept;
  for (const auto& item : items) {
    const auto guess = oracle.answer(item.question);
    if (!guess || !answers_equivalent(*guess, item.gold_answer)) kept.push_back(item);
  }
  return kept;
}

json to_json(const MosaicSpec& scene) {
  json cells = json::array();
  for (const auto& c : scene.cells)
    cells.push_back({{"index", c.index},
                     {"region", {c.region.x1, c.region.y1, c.region.x2, c.region.y2}},
                     {"entity", c.entity_id},
                     {"label", c.position_label}});
  return {{"image_id", scene.image_id}, {"layout", {scene.layout.rows, scene.layout.cols}}, {"cells", cells}};
}

MosaicSpec mosaic_from_json(const json& j) {
  MosaicSpec s;
  s.image_id = j.at("image_id").get<std::string>();
  s.layout = {j.at("layout").at(0).get<std::size_t>(), j.at("layout").at(1).get<std::size_t>()};
  for (const auto& c : j.at("cells")) {
    const auto& r = c.at("region");
    s.cells.push_back({c.at("index").get<std::size_t>(),
                       Region{r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>(), r.at(3).get<double>()},
                       c.at("entity").get<std::string>(), c.at("label").get<std::string>()});
  }
  return s;
}

json to_json(const QAItem& item) {
  json j{{"id", item.id},
         {"kind", to_string(item.kind)},
         {"question", item.question},
         {"gold_answer", item.gold_answer},
         {"scene", item.scene ? to_json(*item.scene) : json(nullptr)},
         {"required_entities", item.required_entities},
         {"template_id", item.template_id}};
  if (item.aggregate) j["aggregate"] = {{"kind", to_string(item.aggregate->kind)}, {"attribute", item.aggregate->attribute}};
  if (!item.pivot_id.empty()) j["pivot"] = item.pivot_id;
  if (!item.constraints.empty()) {
    json cs = json::array();
    for (const auto& c : item.constraints) cs.push_back({c.predicate_id, c.value_id});
    j["constraints"] = cs;
  }
  return j;
}

QAItem qa_item_from_json(const json& j) {
  QAItem item;
  item.id = j.at("id").get<std::string>();
  const auto kind = j.at("kind").get<std::string>();
  item.kind = kind == "multi_entity"       ? QAKind::multi_entity
              : kind == "multi_constraint" ? QAKind::multi_constraint
                                           : QAKind::imported;
  item.question = j.at("question").get<std::string>();
  item.gold_answer = j.at("gold_answer").get<std::string>();
  if (j.contains("scene") && !j["scene"].is_null()) item.scene = mosaic_from_json(j["scene"]);
  item.required_entities = j.value("required_entities", std::set<std::string>{});
  item.template_id = j.value("template_id", std::string());
  if (j.contains("aggregate")) {
    const auto& a = j["aggregate"];
    item.aggregate = Aggregate{a.at("kind").get<std::string>() == "list" ? AggregateKind::list : AggregateKind::sum,
                               a.at("attribute").get<std::string>()};
  }
  item.pivot_id = j.value("pivot", std::string());
  if (j.contains("constraints"))
    for (const auto& c : j["constraints"]) item.constraints.push_back({c.at(0).get<std::string>(), c.at(1).get<std::string>()});
  return item;
}

}  // namespace hypereyes
