#include "hypereyes/env.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <stdexcept>
#include <tuple>

#include "hypereyes/text.hpp"

namespace hypereyes {

namespace {

using json = nlohmann::json;

SearchResult snippet_result(const Entity& e, std::size_t snippet_index) {
  return {e.name, e.snippets.at(snippet_index), "fixture://entity/" + e.id + "#" + std::to_string(snippet_index), e.id};
}

std::vector<double> draw_latencies(std::size_t n, const EnvConfig& config, Rng& rng) {
  std::vector<double> out(n, config.per_request_latency_ms);
  if (config.latency_jitter_ms > 0.0)
    for (auto& l : out) l += rng.unit() * config.latency_jitter_ms;
  return out;
}

// Runs the backend calls in request order, then overlays the simulated schedule.
template <typename Fn>
BatchResult dispatch_batch(std::size_t n, const EnvConfig& config, Rng& rng, Fn&& request) {
  BatchResult out;
  const auto latencies = draw_latencies(n, config, rng);
  out.trace = simulate_dispatch(latencies, config.concurrency_limit, config.request_timeout_ms);
  out.results.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = request(i);
    r.index = i;
    if (out.trace.requests[i].timed_out) {
      r.status = RequestStatus::timeout;
      r.results.clear();
    }
    out.results.push_back(std::move(r));
  }
  return out;
}

}  // namespace

EnvConfig EnvConfig::training() { return EnvConfig{}; }

EnvConfig EnvConfig::evaluation() {
  EnvConfig c;
  c.max_tool_calls = 18;
  c.max_turns = 19;
  return c;
}

void EnvConfig::validate() const {
  if (max_tool_calls < 1) throw std::invalid_argument("max_tool_calls must be >= 1");
  if (max_turns < 1) throw std::invalid_argument("max_turns must be >= 1");
  if (concurrency_limit < 1) throw std::invalid_argument("concurrency_limit must be >= 1");
  if (!(misidentify_prob >= 0.0 && misidentify_prob <= 1.0)) throw std::invalid_argument("misidentify_prob must be in [0,1]");
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) throw std::invalid_argument("iou_threshold must be in (0,1]");
  if (!(request_timeout_ms >= 0.0) || !(per_request_latency_ms >= 0.0) || !(latency_jitter_ms >= 0.0))
    throw std::invalid_argument("latencies and timeouts must be non-negative");
}

json to_json(const EnvConfig& c) {
  return {{"max_tool_calls", c.max_tool_calls},
          {"max_turns", c.max_turns},
          {"concurrency_limit", c.concurrency_limit},
          {"request_timeout_ms", c.request_timeout_ms},
          {"per_request_latency_ms", c.per_request_latency_ms},
          {"latency_jitter_ms", c.latency_jitter_ms},
          {"misidentify_prob", c.misidentify_prob},
          {"iou_threshold", c.iou_threshold},
          {"rng_seed", c.rng_seed}};
}

EnvConfig env_config_from_json(const json& j, EnvConfig c) {
  c.max_tool_calls = j.value("max_tool_calls", c.max_tool_calls);
  c.max_turns = j.value("max_turns", c.max_turns);
  c.concurrency_limit = j.value("concurrency_limit", c.concurrency_limit);
  c.request_timeout_ms = j.value("request_timeout_ms", c.request_timeout_ms);
  c.per_request_latency_ms = j.value("per_request_latency_ms", c.per_request_latency_ms);
  c.latency_jitter_ms = j.value("latency_jitter_ms", c.latency_jitter_ms);
  c.misidentify_prob = j.value("misidentify_prob", c.misidentify_prob);
  c.iou_threshold = j.value("iou_threshold", c.iou_threshold);
  c.rng_seed = j.value("rng_seed", c.rng_seed);
  return c;
}

std::string_view to_string(RequestStatus s) noexcept {
  switch (s) {
    case RequestStatus::ok: return "ok";
    case RequestStatus::no_match: return "no_match";
    case RequestStatus::timeout: return "timeout";
  }
  return "ok";
}

std::string_view to_string(TerminalReason r) noexcept {
  switch (r) {
    case TerminalReason::answer: return "answer";
    case TerminalReason::budget_exhausted: return "budget_exhausted";
    case TerminalReason::max_turns: return "max_turns";
    case TerminalReason::format_abort: return "format_abort";
  }
  return "answer";
}

std::optional<TerminalReason> terminal_reason_from_string(std::string_view s) noexcept {
  for (auto r : {TerminalReason::answer, TerminalReason::budget_exhausted, TerminalReason::max_turns,
                 TerminalReason::format_abort})
    if (to_string(r) == s) return r;
  return std::nullopt;
}

std::string render_observation(const Observation& obs) {
  std::string out = "<tool_response>\n";
  if (obs.format_error) {
    out += "error: " + *obs.format_error + "\n";
  }
  for (const auto& req : obs.per_call_results) {
    out += fmt::format("[{}] {}\n", req.index, to_string(req.status));
    for (const auto& r : req.results) out += fmt::format("- {}: {} ({})\n", r.title, r.snippet, r.link);
  }
  out += "</tool_response>";
  return out;
}

json to_json(const Observation& obs) {
  json calls = json::array();
  for (const auto& req : obs.per_call_results) {
    json results = json::array();
    for (const auto& r : req.results) {
      json jr{{"title", r.title}, {"snippet", r.snippet}, {"link", r.link}};
      jr["source_entity"] = r.source_entity ? json(*r.source_entity) : json(nullptr);
      results.push_back(std::move(jr));
    }
    calls.push_back({{"index", req.index}, {"status", to_string(req.status)}, {"results", std::move(results)}});
  }
  json j{{"per_call_results", std::move(calls)}, {"tokens_consumed", obs.tokens_consumed}, {"elapsed_ms", obs.elapsed_ms}};
  if (obs.format_error) j["format_error"] = *obs.format_error;
  return j;
}

Observation observation_from_json(const json& j) {
  Observation obs;
  for (const auto& c : j.at("per_call_results")) {
    RequestResult req;
    req.index = c.at("index").get<std::size_t>();
    const auto status = c.at("status").get<std::string>();
    req.status = status == "timeout" ? RequestStatus::timeout : status == "no_match" ? RequestStatus::no_match : RequestStatus::ok;
    for (const auto& r : c.at("results")) {
      SearchResult sr{r.at("title").get<std::string>(), r.at("snippet").get<std::string>(), r.at("link").get<std::string>(),
                      std::nullopt};
      if (r.contains("source_entity") && !r["source_entity"].is_null()) sr.source_entity = r["source_entity"].get<std::string>();
      req.results.push_back(std::move(sr));
    }
    obs.per_call_results.push_back(std::move(req));
  }
  obs.tokens_consumed = j.value("tokens_consumed", std::size_t{0});
  obs.elapsed_ms = j.value("elapsed_ms", 0.0);
  if (j.contains("format_error")) obs.format_error = j["format_error"].get<std::string>();
  return obs;
}

RequestResult FixtureBackend::image_request(const MosaicSpec* scene, std::string_view image_id,
                                            const std::optional<Region>& region, Rng& rng) const {
  RequestResult out;
  if (!scene || scene->image_id != image_id || scene->cells.empty()) {
    out.status = RequestStatus::no_match;
    return out;
  }
  if (!region) {
    // Whole-image search only reveals what kinds of things are pictured.
    std::vector<std::string> classes;
    for (const auto& cell : scene->cells) classes.push_back(world_.entity(cell.entity_id).class_name);
    out.results.push_back({"Visually similar images", "Scene shows: " + join(classes, ", "),
                           "fixture://scene/" + std::string(image_id), std::nullopt});
    return out;
  }
  std::size_t best = 0;
  double best_iou = -1.0;
  for (std::size_t i = 0; i < scene->cells.size(); ++i) {
    const double v = iou(*region, scene->cells[i].region);
    if (v > best_iou) {
      best_iou = v;
      best = i;
    }
  }
  if (best_iou < iou_threshold_) {
    out.status = RequestStatus::no_match;
    return out;
  }
  const Entity* match = &world_.entity(scene->cells[best].entity_id);
  if (misidentify_prob_ > 0.0 && rng.bernoulli(misidentify_prob_) && world_.entities().size() > 1) {
    auto pick = rng.below(world_.entities().size() - 1);
    const auto& all = world_.entities();
    const auto true_pos = static_cast<std::size_t>(match - all.data());
    if (pick >= true_pos) ++pick;
    match = &all[pick];
  }
  if (match->snippets.empty()) {
    out.status = RequestStatus::no_match;
    return out;
  }
  out.results.push_back(snippet_result(*match, 0));
  return out;
}

RequestResult FixtureBackend::text_request(std::string_view query, Rng& /*rng*/) const {
  RequestResult out;
  const auto q = content_tokens(query);
  struct Hit {
    std::size_t score, entity, snippet;
  };
  std::vector<Hit> hits;
  const auto& entities = world_.entities();
  for (std::size_t e = 0; e < entities.size(); ++e) {
    for (std::size_t s = 0; s < entities[e].snippets.size(); ++s) {
      const auto toks = content_tokens(entities[e].snippets[s]);
      std::size_t score = 0;
      for (const auto& t : q) score += toks.count(t);
      if (score > 0) hits.push_back({score, e, s});
    }
  }
  std::stable_sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.score > b.score; });
  if (hits.size() > kTextTopK) hits.resize(kTextTopK);
  for (const auto& h : hits) out.results.push_back(snippet_result(entities[h.entity], h.snippet));
  return out;
}

BatchResult image_search(const WorldFixture& world, const MosaicSpec& scene,
                         const std::optional<std::vector<Region>>& regions, const EnvConfig& config, Rng& rng) {
  FixtureBackend backend(world, config.misidentify_prob, config.iou_threshold);
  const std::size_t n = regions ? regions->size() : 1;
  return dispatch_batch(n, config, rng, [&](std::size_t i) {
    return backend.image_request(&scene, scene.image_id, regions ? std::optional<Region>((*regions)[i]) : std::nullopt, rng);
  });
}

BatchResult text_search(const WorldFixture& world, const std::vector<std::string>& queries, const EnvConfig& config,
                        Rng& rng) {
  FixtureBackend backend(world, config.misidentify_prob, config.iou_threshold);
  return dispatch_batch(queries.size(), config, rng, [&](std::size_t i) { return backend.text_request(queries[i], rng); });
}

Environment::Environment(const WorldFixture& world, EnvConfig config)
    : Environment(world, config,
                  std::make_shared<FixtureBackend>(world, config.misidentify_prob, config.iou_threshold)) {}

Environment::Environment(const WorldFixture& world, EnvConfig config, std::shared_ptr<const SearchBackend> backend)
    : world_(world), config_(config), backend_(std::move(backend)) {
  config_.validate();
}

Environment Environment::with_config(EnvConfig config) const { return Environment(world_, config, backend_); }

RolloutState Environment::start(const QAItem& qa, std::uint64_t seed) const {
  RolloutState s;
  s.qa = &qa;
  s.rng = Rng(derive_seed(config_.rng_seed, seed));
  return s;
}

Observation Environment::execute(const ToolInvocation& call, const QAItem* qa, Rng& rng) const {
  BatchResult batch;
  if (const auto* img = std::get_if<ImageSearch>(&call)) {
    const MosaicSpec* scene = (qa && qa->scene) ? &*qa->scene : nullptr;
    const std::size_t n = img->regions ? img->regions->size() : 1;
    batch = dispatch_batch(n, config_, rng, [&](std::size_t i) {
      return backend_->image_request(scene, img->image_id,
                                     img->regions ? std::optional<Region>((*img->regions)[i]) : std::nullopt, rng);
    });
  } else {
    const auto& text = std::get<TextSearch>(call);
    batch = dispatch_batch(text.queries.size(), config_, rng,
                           [&](std::size_t i) { return backend_->text_request(text.queries[i], rng); });
  }
  Observation obs;
  obs.per_call_results = std::move(batch.results);
  obs.elapsed_ms = batch.trace.makespan_ms;
  obs.tokens_consumed = whitespace_token_count(render_observation(obs));
  return obs;
}

StepOutcome Environment::step(RolloutState& state, const TurnBlock& turn) const {
  if (state.terminal) throw std::logic_error("step on a terminal rollout");
  ++state.model_turns;
  if (const auto* ans = turn.answer()) {
    state.terminal = Terminal{TerminalReason::answer, ans->text};
    return {std::nullopt, state.terminal};
  }
  const auto& call = *turn.call();
  const auto n = request_count(call);
  // A call needs a later turn left for the answer and must fit the invocation budget.
  if (state.model_turns >= config_.max_turns || state.t_s + n > config_.max_tool_calls) {
    state.terminal = Terminal{TerminalReason::budget_exhausted, std::nullopt};
    return {std::nullopt, state.terminal};
  }
  auto obs = execute(call, state.qa, state.rng);
  state.t_c += 1;
  state.t_s += n;
  return {std::move(obs), std::nullopt};
}

StepOutcome Environment::step_invalid(RolloutState& state, const FormatError& error) const {
  if (state.terminal) throw std::logic_error("step on a terminal rollout");
  ++state.model_turns;
  ++state.invalid_turns;
  Observation obs;
  obs.format_error = std::string(to_string(error.kind)) + ": " + error.detail;
  obs.tokens_consumed = whitespace_token_count(render_observation(obs));
  if (state.model_turns >= config_.max_turns) {
    const auto reason =
        state.invalid_turns == state.model_turns ? TerminalReason::format_abort : TerminalReason::max_turns;
    state.terminal = Terminal{reason, std::nullopt};
  }
  return {std::move(obs), state.terminal};
}

Observation inject_distractors(const Observation& obs, const std::vector<SearchResult>& distractors, std::size_t k,
                               std::uint64_t rng_seed) {
  if (k > distractors.size()) throw InsufficientDistractors();
  Observation out = obs;
  if (k == 0) return out;
  if (out.per_call_results.empty()) throw std::invalid_argument("observation has no request to inject into");
  auto& last = out.per_call_results.back().results;
  last.insert(last.end(), distractors.begin(), distractors.begin() + static_cast<std::ptrdiff_t>(k));
  Rng rng(rng_seed);
  rng.shuffle(last);
  out.per_call_results.back().status = RequestStatus::ok;
  return out;
}

}  // namespace hypereyes
