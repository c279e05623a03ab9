#include "hypereyes/trajectory.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace hypereyes {

namespace {

using json = nlohmann::json;

std::size_t policy_tokens(const TurnRecord& t, const Tokenizer& tokenizer) {
  return tokenizer(t.parsed ? render_turn(*t.parsed) : t.raw);
}

std::string observation_evidence(const Observation& obs) {
  std::string out;
  for (const auto& req : obs.per_call_results)
    for (const auto& r : req.results) {
      out += r.title;
      out += '\n';
      out += r.snippet;
      out += '\n';
    }
  return out;
}

bool numeric_equal(double a, double b) { return a == b; }

json turn_to_json(const TurnBlock& t) {
  json action;
  if (const auto* ans = t.answer()) {
    action = {{"type", "answer"}, {"text", ans->text}};
  } else {
    action = {{"type", "call"}, {"tool_call", json::parse(render_tool_call_json(*t.call()))}};
  }
  return {{"reason", t.reason}, {"action", std::move(action)}};
}

TurnBlock turn_from_json(const json& j) {
  const auto reason = j.at("reason").get<std::string>();
  const auto& action = j.at("action");
  if (action.at("type").get<std::string>() == "answer") return TurnBlock{reason, Answer{action.at("text").get<std::string>()}};
  auto parsed = parse_turn("<reason>" + reason + "</reason><tool_call>" + action.at("tool_call").dump() + "</tool_call>");
  if (!parsed) throw std::invalid_argument("stored tool_call does not parse: " + parsed.error().detail);
  return parsed.turn();
}

}  // namespace

Accounting account(std::span<const TurnRecord> turns, const Tokenizer& tokenizer) {
  Accounting a;
  for (const auto& t : turns) {
    if (t.executed_call()) {
      a.t_c += 1;
      a.t_s += request_count(*t.parsed->call());
    }
    a.n_tok += policy_tokens(t, tokenizer);
    if (t.observation) a.n_tok += tokenizer(render_observation(*t.observation));
  }
  return a;
}

Accounting account(std::span<const TurnRecord> turns, std::span<const std::optional<Observation>> observations,
                   const Tokenizer& tokenizer) {
  if (turns.size() != observations.size()) throw MisalignedRecords();
  std::vector<TurnRecord> merged(turns.begin(), turns.end());
  for (std::size_t i = 0; i < merged.size(); ++i) merged[i].observation = observations[i];
  return account(merged, tokenizer);
}

bool accounting_consistent(const Trajectory& traj, const Tokenizer& tokenizer) {
  const auto a = account(traj.turns, tokenizer);
  if (a.t_c != traj.t_c || a.t_s != traj.t_s || a.n_tok != traj.n_tok) return false;
  if ((traj.t_c == 0) != (traj.t_s == 0)) return false;
  if (traj.t_c > 0 && traj.t_s < traj.t_c) return false;
  return traj.final_answer.has_value() == (traj.terminal_reason == TerminalReason::answer);
}

FilterVerdict check_format(const Trajectory& traj) {
  for (const auto& t : traj.turns) {
    if (t.format_error) return FilterVerdict::fail(std::string(to_string(t.format_error->kind)));
    auto parsed = parse_turn(t.raw);
    if (!parsed) return FilterVerdict::fail(std::string(to_string(parsed.error().kind)));
  }
  return FilterVerdict::ok();
}

FilterVerdict check_info_gain(const Trajectory& traj) {
  // A request gains nothing when every snippet it returned came back in an earlier call.
  std::set<std::string> seen;  // normalized snippets from previous calls
  for (const auto& t : traj.turns) {
    if (!t.executed_call()) continue;
    std::set<std::string> this_call;
    for (const auto& req : t.observation->per_call_results) {
      if (req.results.empty()) continue;
      bool fresh = false;
      for (const auto& r : req.results) {
        auto key = collapse_whitespace_lower(r.snippet);
        fresh = fresh || !seen.count(key);
        this_call.insert(std::move(key));
      }
      if (!fresh) return FilterVerdict::fail(std::string(kDuplicateEvidence));
    }
    seen.insert(this_call.begin(), this_call.end());
  }
  return FilterVerdict::ok();
}

std::string evidence_text(const Trajectory& traj) {
  std::string out;
  for (const auto& t : traj.turns)
    if (t.observation) out += observation_evidence(*t.observation);
  return out;
}

FilterVerdict check_grounded(const Trajectory& traj, const WorldFixture& world) {
  const auto ungrounded = FilterVerdict::fail(std::string(kUngroundedAnswer));
  if (traj.terminal_reason != TerminalReason::answer || !traj.final_answer) return ungrounded;
  const auto answer = normalize_answer(*traj.final_answer);
  if (answer.empty()) return ungrounded;

  const auto evidence = normalize_answer(evidence_text(traj));
  auto supported = [&](const std::string& piece) {
    return !piece.empty() && (" " + evidence + " ").find(" " + piece + " ") != std::string::npos;
  };
  if (supported(answer)) return FilterVerdict::ok();

  // List answers: every comma-separated part must be supported.
  {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : *traj.final_answer) {
      if (c == ',' || c == ';') {
        parts.push_back(normalize_answer(cur));
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    parts.push_back(normalize_answer(cur));
    if (parts.size() > 1 && std::all_of(parts.begin(), parts.end(), supported)) return FilterVerdict::ok();
  }

  // Aggregate path: a sum over a literal attribute of the observed entities.
  double target = 0.0;
  if (!parse_number(*traj.final_answer, target)) return ungrounded;
  std::vector<std::string> positional;  // one per grounded region, in order
  std::set<std::string> distinct;
  for (const auto& t : traj.turns) {
    if (!t.observation) continue;
    const bool region_search = t.parsed && t.parsed->is_call() && std::holds_alternative<ImageSearch>(*t.parsed->call());
    for (const auto& req : t.observation->per_call_results) {
      for (const auto& r : req.results) {
        if (!r.source_entity || !world.has_entity(*r.source_entity)) continue;
        distinct.insert(*r.source_entity);
      }
      if (region_search && !req.results.empty() && req.results.front().source_entity)
        positional.push_back(*req.results.front().source_entity);
    }
  }
  auto sum_matches = [&](const auto& ids) {
    if (ids.empty()) return false;
    std::set<std::string> keys;
    for (const auto& [k, _] : world.entity(*ids.begin()).literals) keys.insert(k);
    for (const auto& key : keys) {
      double sum = 0.0;
      bool complete = true;
      for (const auto& id : ids) {
        const auto& lit = world.entity(id).literals;
        auto it = lit.find(key);
        double x = 0.0;
        if (it == lit.end() || !parse_number(it->second, x)) {
          complete = false;
          break;
        }
        sum += x;
      }
      if (complete && numeric_equal(sum, target)) return true;
    }
    return false;
  };
  if (sum_matches(positional) || sum_matches(distinct)) return FilterVerdict::ok();
  return ungrounded;
}

FilterVerdict check_sequential_shortcut(const Trajectory& traj) {
  const auto known = content_tokens(traj.question);
  std::set<std::string> revealed;
  std::size_t round = 0;
  for (const auto& t : traj.turns) {
    if (!t.executed_call()) continue;
    ++round;
    if (round >= 2) {
      if (const auto* text = std::get_if<TextSearch>(t.parsed->call())) {
        for (const auto& q : text->queries) {
          const auto toks = content_tokens(q);
          const bool depends = std::any_of(toks.begin(), toks.end(), [&](const std::string& tok) { return revealed.count(tok) > 0; });
          if (!depends) return FilterVerdict::fail(std::string(kAvoidableSerialization));
        }
      }
    }
    for (const auto& tok : content_tokens(observation_evidence(*t.observation)))
      if (!known.count(tok)) revealed.insert(tok);
  }
  return FilterVerdict::ok();
}

FilterVerdict check_image_only(const Trajectory& traj, const WorldFixture& world) {
  bool any_call = false;
  for (const auto& t : traj.turns) {
    if (!t.executed_call()) continue;
    any_call = true;
    if (!std::holds_alternative<ImageSearch>(*t.parsed->call())) return FilterVerdict::ok();
  }
  if (any_call && check_grounded(traj, world).pass) return FilterVerdict::fail(std::string(kImageOnly));
  return FilterVerdict::ok();
}

json to_json(const Trajectory& traj) {
  json turns = json::array();
  for (const auto& t : traj.turns) {
    json jt{{"raw", t.raw}};
    jt["parsed"] = t.parsed ? turn_to_json(*t.parsed) : json(nullptr);
    jt["format_error"] =
        t.format_error ? json{{"kind", to_string(t.format_error->kind)}, {"detail", t.format_error->detail}} : json(nullptr);
    jt["observation"] = t.observation ? to_json(*t.observation) : json(nullptr);
    turns.push_back(std::move(jt));
  }
  return {{"qa_id", traj.qa_id},
          {"question", traj.question},
          {"seed", traj.rng_seed},
          {"turns", std::move(turns)},
          {"final_answer", traj.final_answer ? json(*traj.final_answer) : json(nullptr)},
          {"terminal_reason", to_string(traj.terminal_reason)},
          {"t_c", traj.t_c},
          {"t_s", traj.t_s},
          {"n_tok", traj.n_tok}};
}

Trajectory trajectory_from_json(const json& j) {
  Trajectory traj;
  traj.qa_id = j.at("qa_id").get<std::string>();
  traj.question = j.value("question", std::string());
  traj.rng_seed = j.value("seed", std::uint64_t{0});
  for (const auto& jt : j.at("turns")) {
    TurnRecord t;
    t.raw = jt.at("raw").get<std::string>();
    if (jt.contains("parsed") && !jt["parsed"].is_null()) t.parsed = turn_from_json(jt["parsed"]);
    if (jt.contains("format_error") && !jt["format_error"].is_null()) {
      const auto kind = format_error_kind_from_string(jt["format_error"].at("kind").get<std::string>());
      t.format_error = FormatError{kind.value_or(FormatErrorKind::malformed_json), jt["format_error"].value("detail", std::string())};
    }
    if (jt.contains("observation") && !jt["observation"].is_null()) t.observation = observation_from_json(jt["observation"]);
    traj.turns.push_back(std::move(t));
  }
  if (j.contains("final_answer") && !j["final_answer"].is_null()) traj.final_answer = j["final_answer"].get<std::string>();
  traj.terminal_reason =
      terminal_reason_from_string(j.at("terminal_reason").get<std::string>()).value_or(TerminalReason::format_abort);
  traj.t_c = j.at("t_c").get<std::size_t>();
  traj.t_s = j.at("t_s").get<std::size_t>();
  traj.n_tok = j.at("n_tok").get<std::size_t>();
  return traj;
}

}  // namespace hypereyes
