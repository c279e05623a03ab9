#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "hypereyes/agent.hpp"
#include "hypereyes/text.hpp"

namespace hypereyes {
namespace {

std::string humanize(std::string_view key) {
  std::string out(key);
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

std::string render(std::string reason, Action action) { return render_turn(TurnBlock{std::move(reason), std::move(action)}); }

std::size_t nearest_cell(const MosaicSpec& scene, const Region& r) {
  std::size_t best = 0;
  double best_iou = -1.0;
  for (std::size_t i = 0; i < scene.cells.size(); ++i) {
    const double v = iou(r, scene.cells[i].region);
    if (v > best_iou) {
      best_iou = v;
      best = i;
    }
  }
  return best;
}

// What the history has established so far. Derived afresh each turn so policies stay stateless.
struct Progress {
  std::set<std::size_t> attempted_cells;
  std::map<std::size_t, std::string> identified;  // cell -> entity named by the image result
  std::set<std::string> issued_queries;
  std::vector<const SearchResult*> evidence;
};

Progress read_history(const PolicyContext& ctx) {
  Progress p;
  for (const auto& t : ctx.history) {
    if (!t.executed_call()) continue;
    const auto& obs = *t.observation;
    for (const auto& req : obs.per_call_results)
      for (const auto& r : req.results) p.evidence.push_back(&r);
    if (const auto* img = std::get_if<ImageSearch>(t.parsed->call())) {
      if (!img->regions || !ctx.qa.scene) continue;
      for (std::size_t i = 0; i < img->regions->size(); ++i) {
        const auto cell = nearest_cell(*ctx.qa.scene, (*img->regions)[i]);
        p.attempted_cells.insert(cell);
        if (i < obs.per_call_results.size()) {
          const auto& req = obs.per_call_results[i];
          if (req.status == RequestStatus::ok && !req.results.empty() && req.results.front().source_entity)
            p.identified[cell] = *req.results.front().source_entity;
        }
      }
    } else {
      for (const auto& q : std::get<TextSearch>(*t.parsed->call()).queries) p.issued_queries.insert(q);
    }
  }
  return p;
}

// The search plan every scripted policy follows; they differ only in how they batch it.
struct Plan {
  std::vector<std::size_t> cells_to_ground;
  std::vector<std::string> queries_to_issue;
  std::string answer;  // what the evidence gathered so far supports
};

std::string answer_from_identified(const WorldFixture& world, const QAItem& qa, const Progress& p) {
  const auto& agg = *qa.aggregate;
  std::vector<std::string> values;
  for (std::size_t c = 0; c < qa.scene->cells.size(); ++c) {
    auto it = p.identified.find(c);
    if (it == p.identified.end() || !world.has_entity(it->second)) {
      values.emplace_back("unknown");
      continue;
    }
    const auto& lit = world.entity(it->second).literals;
    auto v = lit.find(agg.attribute);
    values.push_back(v == lit.end() ? "unknown" : v->second);
  }
  if (agg.kind == AggregateKind::list) return join(values, ", ");
  double sum = 0.0;
  for (const auto& v : values) {
    double x = 0.0;
    if (!parse_number(v, x)) return "unknown";
    sum += x;
  }
  return format_number(sum);
}

Plan make_plan(const WorldFixture& world, const PolicyContext& ctx, const Progress& p) {
  Plan plan;
  const auto& qa = ctx.qa;
  auto want_query = [&](std::string q) {
    if (!p.issued_queries.count(q) &&
        std::find(plan.queries_to_issue.begin(), plan.queries_to_issue.end(), q) == plan.queries_to_issue.end())
      plan.queries_to_issue.push_back(std::move(q));
  };
  if (qa.kind == QAKind::multi_entity && qa.scene && qa.aggregate) {
    for (std::size_t c = 0; c < qa.scene->cells.size(); ++c)
      if (!p.attempted_cells.count(c)) plan.cells_to_ground.push_back(c);
    for (const auto& [cell, id] : p.identified)
      if (world.has_entity(id)) want_query(world.entity(id).name + " " + humanize(qa.aggregate->attribute));
    plan.answer = answer_from_identified(world, qa, p);
  } else if (qa.kind == QAKind::multi_constraint && world.has_entity(qa.pivot_id)) {
    const auto& pivot = world.entity(qa.pivot_id).name;
    for (const auto& c : qa.constraints) {
      const auto value = world.has_entity(c.value_id) ? world.entity(c.value_id).name : c.value_id;
      want_query(pivot + " " + humanize(c.predicate_id) + " " + value);
    }
    std::vector<std::string> names;
    for (const auto& id : chain_answer_set(world, qa.pivot_id, qa.constraints)) names.push_back(world.entity(id).name);
    std::sort(names.begin(), names.end());
    plan.answer = join(names, ", ");
  } else {
    want_query(qa.question);
    plan.answer = qa.gold_answer;
  }
  return plan;
}

Action ground(const PolicyContext& ctx, const std::vector<std::size_t>& cells) {
  std::vector<Region> regions;
  for (auto c : cells) regions.push_back(ctx.qa.scene->cells[c].region);
  return ToolInvocation{ImageSearch{ctx.qa.scene->image_id, std::move(regions)}};
}

Action search(std::vector<std::string> queries) { return ToolInvocation{TextSearch{std::move(queries)}}; }

std::string wrong_answer(const std::string& right) {
  double x = 0.0;
  if (parse_number(right, x)) return format_number(x + 1.0);
  return "unknown";
}

}  // namespace

std::string ParallelOracle::next_turn(const PolicyContext& ctx, Rng& /*rng*/) const {
  const auto p = read_history(ctx);
  const auto plan = make_plan(world_, ctx, p);
  if (!plan.cells_to_ground.empty())
    return render("Locate every pictured entity at once.", ground(ctx, plan.cells_to_ground));
  if (!plan.queries_to_issue.empty())
    return render("Look up all the needed facts in one batch.", search(plan.queries_to_issue));
  return render("The evidence covers every entity.", Answer{plan.answer});
}

std::string SerialOracle::next_turn(const PolicyContext& ctx, Rng& /*rng*/) const {
  const auto p = read_history(ctx);
  const auto plan = make_plan(world_, ctx, p);
  if (!plan.cells_to_ground.empty())
    return render("Locate the next entity.", ground(ctx, {plan.cells_to_ground.front()}));
  if (!plan.queries_to_issue.empty())
    return render("Look up the next fact.", search({plan.queries_to_issue.front()}));
  return render("The evidence covers every entity.", Answer{plan.answer});
}

std::string Spammer::next_turn(const PolicyContext& ctx, Rng& /*rng*/) const {
  const auto p = read_history(ctx);
  const auto plan = make_plan(world_, ctx, p);
  if (!plan.cells_to_ground.empty())
    return render("Locate every pictured entity at once.", ground(ctx, plan.cells_to_ground));
  if (!plan.queries_to_issue.empty()) {
    std::vector<std::string> repeated;
    for (const auto& q : plan.queries_to_issue)
      for (std::size_t k = 0; k < std::max<std::size_t>(1, duplicates_); ++k) repeated.push_back(q);
    return render("Search everything several times to be sure.", search(std::move(repeated)));
  }
  return render("The evidence covers every entity.", Answer{plan.answer});
}

std::string Guesser::next_turn(const PolicyContext& /*ctx*/, Rng& /*rng*/) const {
  return render("Answer from memory.", Answer{guess_});
}

double Stochastic::success_probability(double coverage) const {
  return 1.0 / (1.0 + std::exp(-params_.steepness * (coverage - params_.midpoint)));
}

double Stochastic::coverage(const PolicyContext& ctx) const {
  const auto p = read_history(ctx);
  const auto& qa = ctx.qa;
  if (qa.required_entities.empty()) return p.evidence.empty() ? 0.0 : 1.0;
  std::size_t covered = 0;
  for (const auto& id : qa.required_entities) {
    if (!world_.has_entity(id)) continue;
    const auto& e = world_.entity(id);
    // Multi-entity items need the attribute fact, which the identity snippet alone does not carry.
    std::optional<std::string> needle;
    if (qa.aggregate) {
      auto it = e.literals.find(qa.aggregate->attribute);
      if (it != e.literals.end()) needle = collapse_whitespace_lower(it->second);
    }
    const bool seen = std::any_of(p.evidence.begin(), p.evidence.end(), [&](const SearchResult* r) {
      if (r->source_entity != id) return false;
      return !needle || collapse_whitespace_lower(r->snippet).find(*needle) != std::string::npos;
    });
    covered += seen ? 1 : 0;
  }
  return static_cast<double>(covered) / static_cast<double>(qa.required_entities.size());
}

std::string Stochastic::next_turn(const PolicyContext& ctx, Rng& rng) const {
  const auto p = read_history(ctx);
  const auto plan = make_plan(world_, ctx, p);
  const double early = 0.15 * (1.0 - params_.p_skill);
  const bool pending = !plan.cells_to_ground.empty() || !plan.queries_to_issue.empty();
  if (pending && !rng.bernoulli(early)) {
    const bool batch = rng.bernoulli(params_.p_skill);
    if (!plan.cells_to_ground.empty()) {
      auto cells = plan.cells_to_ground;
      if (!batch) cells.resize(1);
      return render("Locate entities in the image.", ground(ctx, cells));
    }
    auto queries = plan.queries_to_issue;
    if (!batch) queries.resize(1);
    return render("Look up facts about them.", search(std::move(queries)));
  }
  const bool right = rng.bernoulli(success_probability(coverage(ctx)));
  return render("Answer with what I have.", Answer{right ? plan.answer : wrong_answer(plan.answer)});
}

std::unique_ptr<Policy> make_policy(std::string_view spec, const WorldFixture& world) {
  const auto colon = spec.find(':');
  const std::string name(trim(spec.substr(0, colon)));
  std::map<std::string, std::string> params;
  if (colon != std::string_view::npos) {
    auto rest = spec.substr(colon + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto item = rest.substr(0, comma);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos) throw std::invalid_argument("policy parameter without '=': " + std::string(item));
      params[std::string(trim(item.substr(0, eq)))] = std::string(trim(item.substr(eq + 1)));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
  }
  auto number = [&](const std::string& key, double fallback) {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    double v = 0.0;
    if (!parse_number(it->second, v)) throw std::invalid_argument("policy parameter " + key + " is not a number");
    params.erase(it);
    return v;
  };

  std::unique_ptr<Policy> out;
  if (name == "parallel_oracle") {
    out = std::make_unique<ParallelOracle>(world);
  } else if (name == "serial_oracle") {
    out = std::make_unique<SerialOracle>(world);
  } else if (name == "spammer") {
    out = std::make_unique<Spammer>(world, static_cast<std::size_t>(number("dup", 3)));
  } else if (name == "guesser") {
    std::string guess = "unknown";
    if (auto it = params.find("guess"); it != params.end()) {
      guess = it->second;
      params.erase(it);
    }
    out = std::make_unique<Guesser>(guess);
  } else if (name == "stochastic") {
    StochasticParams sp;
    sp.p_skill = number("p_skill", sp.p_skill);
    sp.steepness = number("steepness", sp.steepness);
    sp.midpoint = number("midpoint", sp.midpoint);
    if (sp.p_skill < 0.0 || sp.p_skill > 1.0) throw std::invalid_argument("p_skill must lie in [0, 1]");
    out = std::make_unique<Stochastic>(world, sp);
  } else {
    throw std::invalid_argument("unknown policy: " + name);
  }
  if (!params.empty()) throw std::invalid_argument("unknown parameter for " + name + ": " + params.begin()->first);
  return out;
}

}  // namespace hypereyes
