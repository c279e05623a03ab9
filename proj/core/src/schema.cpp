#include "hypereyes/schema.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <nlohmann/json.hpp>

#include "hypereyes/text.hpp"

namespace hypereyes {

namespace {

constexpr std::string_view kReasonOpen = "<reason>";
constexpr std::string_view kReasonClose = "</reason>";
constexpr std::string_view kCallOpen = "<tool_call>";
constexpr std::string_view kCallClose = "</tool_call>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";
constexpr std::array<std::string_view, 6> kDelimiters = {kReasonOpen, kReasonClose, kCallOpen,
                                                         kCallClose,  kAnswerOpen, kAnswerClose};

constexpr auto npos = std::string_view::npos;

FormatError fail(FormatErrorKind kind, std::string detail) { return {kind, std::move(detail)}; }

bool contains_delimiter(std::string_view s) {
  return std::any_of(kDelimiters.begin(), kDelimiters.end(),
                     [&](std::string_view d) { return s.find(d) != npos; });
}

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    if (c < 0x80) len = 1;
    else if ((c >> 5) == 0x6) len = 2;
    else if ((c >> 4) == 0xe) len = 3;
    else if ((c >> 3) == 0x1e) len = 4;
    else return false;
    if (i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k)
      if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2) return false;
    i += len;
  }
  return true;
}

std::optional<FormatError> parse_region(const nlohmann::json& box, Region& out) {
  if (!box.is_array() || box.size() != 4)
    return fail(FormatErrorKind::bad_region, "region must be [x1, y1, x2, y2]");
  std::array<double, 4> v{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!box[i].is_number()) return fail(FormatErrorKind::bad_region, "region coordinate is not a number");
    v[i] = box[i].get<double>();
  }
  out = Region{v[0], v[1], v[2], v[3]};
  if (!out.valid()) return fail(FormatErrorKind::bad_region, "region violates 0 <= x1 < x2 <= 1, 0 <= y1 < y2 <= 1");
  return std::nullopt;
}

ParsedTurn parse_call(std::string reason, std::string_view body) {
  auto j = nlohmann::json::parse(body.begin(), body.end(), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) return fail(FormatErrorKind::malformed_json, "tool_call body is not a JSON object");
  auto name = j.find("name");
  auto args = j.find("arguments");
  if (name == j.end() || !name->is_string()) return fail(FormatErrorKind::malformed_json, "missing string \"name\"");
  if (args == j.end() || !args->is_object()) return fail(FormatErrorKind::malformed_json, "missing object \"arguments\"");

  const auto& tool = name->get_ref<const std::string&>();
  if (tool == "image_search") {
    auto id = args->find("image_id");
    if (id == args->end() || !id->is_string() || id->get_ref<const std::string&>().empty())
      return fail(FormatErrorKind::malformed_json, "image_search needs a string \"image_id\"");
    ImageSearch call{id->get<std::string>(), std::nullopt};
    auto area = args->find("area");
    if (area != args->end() && !area->is_null()) {
      if (!area->is_array()) return fail(FormatErrorKind::malformed_json, "\"area\" must be a list of boxes");
      if (area->empty()) return fail(FormatErrorKind::bad_region, "\"area\" is present but empty");
      std::vector<Region> regions;
      regions.reserve(area->size());
      for (const auto& box : *area) {
        Region r;
        if (auto err = parse_region(box, r)) return *err;
        regions.push_back(r);
      }
      call.regions = std::move(regions);
    }
    return TurnBlock{std::move(reason), ToolInvocation{std::move(call)}};
  }
  if (tool == "text_search") {
    auto input = args->find("input");
    if (input == args->end() || !input->is_array())
      return fail(FormatErrorKind::malformed_json, "text_search needs a list \"input\"");
    if (input->empty()) return fail(FormatErrorKind::empty_query, "\"input\" is empty");
    TextSearch call;
    for (const auto& q : *input) {
      if (!q.is_string()) return fail(FormatErrorKind::malformed_json, "query is not a string");
      if (trim(q.get_ref<const std::string&>()).empty()) return fail(FormatErrorKind::empty_query, "blank query");
      call.queries.push_back(q.get<std::string>());
    }
    return TurnBlock{std::move(reason), ToolInvocation{std::move(call)}};
  }
  return fail(FormatErrorKind::malformed_json, "unknown tool \"" + tool + "\"");
}

ParsedTurn parse_turn_impl(std::string_view raw) {
  const auto reason_at = raw.find(kReasonOpen);
  const auto first_action = std::min(raw.find(kCallOpen), raw.find(kAnswerOpen));
  if (reason_at == npos) return fail(FormatErrorKind::missing_reason, "no <reason> block");
  if (first_action < reason_at) return fail(FormatErrorKind::missing_reason, "action precedes <reason>");

  const auto reason_begin = reason_at + kReasonOpen.size();
  const auto reason_end = raw.find(kReasonClose, reason_begin);
  if (reason_end == npos) return fail(FormatErrorKind::missing_reason, "unterminated <reason> block");
  std::string reason(raw.substr(reason_begin, reason_end - reason_begin));
  if (trim(reason).empty()) return fail(FormatErrorKind::missing_reason, "empty <reason> block");

  const auto rest = raw.substr(reason_end + kReasonClose.size());
  std::size_t actions = 0;
  for (auto tag : {kCallOpen, kAnswerOpen})
    for (auto pos = rest.find(tag); pos != npos; pos = rest.find(tag, pos + tag.size())) ++actions;
  if (actions == 0) return fail(FormatErrorKind::malformed_json, "no <tool_call> or <answer> block");
  if (actions > 1) return fail(FormatErrorKind::multiple_actions, "only one action per turn is allowed");

  if (const auto at = rest.find(kAnswerOpen); at != npos) {
    const auto begin = at + kAnswerOpen.size();
    const auto end = rest.find(kAnswerClose, begin);
    if (end == npos) return fail(FormatErrorKind::malformed_json, "unterminated <answer> block");
    return TurnBlock{std::move(reason), Answer{std::string(rest.substr(begin, end - begin))}};
  }
  const auto at = rest.find(kCallOpen);
  const auto begin = at + kCallOpen.size();
  const auto end = rest.find(kCallClose, begin);
  if (end == npos) return fail(FormatErrorKind::malformed_json, "unterminated <tool_call> block");
  return parse_call(std::move(reason), rest.substr(begin, end - begin));
}

}  // namespace

bool Region::valid() const noexcept {
  return 0.0 <= x1 && x1 < x2 && x2 <= 1.0 && 0.0 <= y1 && y1 < y2 && y2 <= 1.0;
}

double intersection_area(const Region& a, const Region& b) noexcept {
  const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  return (w > 0.0 && h > 0.0) ? w * h : 0.0;
}

double iou(const Region& a, const Region& b) noexcept {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

std::size_t request_count(const ToolInvocation& call) noexcept {
  if (const auto* img = std::get_if<ImageSearch>(&call)) return img->regions ? img->regions->size() : 1;
  return std::get<TextSearch>(call).queries.size();
}

std::string_view to_string(FormatErrorKind kind) noexcept {
  switch (kind) {
    case FormatErrorKind::missing_reason: return "missing_reason";
    case FormatErrorKind::malformed_json: return "malformed_json";
    case FormatErrorKind::multiple_actions: return "multiple_actions";
    case FormatErrorKind::bad_region: return "bad_region";
    case FormatErrorKind::empty_query: return "empty_query";
  }
  return "malformed_json";
}

std::optional<FormatErrorKind> format_error_kind_from_string(std::string_view s) noexcept {
  for (auto k : {FormatErrorKind::missing_reason, FormatErrorKind::malformed_json, FormatErrorKind::multiple_actions,
                 FormatErrorKind::bad_region, FormatErrorKind::empty_query})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

ParsedTurn parse_turn(std::string_view raw_text) {
  try {
    return parse_turn_impl(raw_text);
  } catch (const std::exception& e) {
    return fail(FormatErrorKind::malformed_json, e.what());
  }
}

std::optional<FormatError> validate_turn(const TurnBlock& turn) {
  if (trim(turn.reason).empty()) return fail(FormatErrorKind::missing_reason, "empty reason");
  if (contains_delimiter(turn.reason)) return fail(FormatErrorKind::missing_reason, "reason contains a block delimiter");
  if (const auto* ans = turn.answer()) {
    if (contains_delimiter(ans->text)) return fail(FormatErrorKind::malformed_json, "answer contains a block delimiter");
    return std::nullopt;
  }
  const auto& call = *turn.call();
  if (const auto* img = std::get_if<ImageSearch>(&call)) {
    if (img->image_id.empty() || contains_delimiter(img->image_id) || !valid_utf8(img->image_id))
      return fail(FormatErrorKind::malformed_json, "bad image_id");
    if (img->regions) {
      if (img->regions->empty()) return fail(FormatErrorKind::bad_region, "empty region list");
      for (const auto& r : *img->regions)
        if (!r.valid()) return fail(FormatErrorKind::bad_region, "invalid region");
    }
    return std::nullopt;
  }
  const auto& text = std::get<TextSearch>(call);
  if (text.queries.empty()) return fail(FormatErrorKind::empty_query, "no queries");
  for (const auto& q : text.queries) {
    if (trim(q).empty()) return fail(FormatErrorKind::empty_query, "blank query");
    if (contains_delimiter(q) || !valid_utf8(q)) return fail(FormatErrorKind::malformed_json, "bad query text");
  }
  return std::nullopt;
}

std::string render_tool_call_json(const ToolInvocation& call) {
  nlohmann::ordered_json j;
  if (const auto* img = std::get_if<ImageSearch>(&call)) {
    j["name"] = "image_search";
    j["arguments"]["image_id"] = img->image_id;
    if (img->regions) {
      auto area = nlohmann::ordered_json::array();
      for (const auto& r : *img->regions) area.push_back({r.x1, r.y1, r.x2, r.y2});
      j["arguments"]["area"] = std::move(area);
    }
  } else {
    j["name"] = "text_search";
    j["arguments"]["input"] = std::get<TextSearch>(call).queries;
  }
  return j.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
}

std::string render_turn(const TurnBlock& turn) {
  std::string out;
  out.reserve(turn.reason.size() + 64);
  out.append(kReasonOpen).append(turn.reason).append(kReasonClose).push_back('\n');
  if (const auto* ans = turn.answer()) {
    out.append(kAnswerOpen).append(ans->text).append(kAnswerClose);
  } else {
    out.append(kCallOpen).append(render_tool_call_json(*turn.call())).append(kCallClose);
  }
  return out;
}

}  // namespace hypereyes
