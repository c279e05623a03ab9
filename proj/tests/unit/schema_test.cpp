#include <gtest/gtest.h>

#include "hypereyes/rng.hpp"
#include "hypereyes/schema.hpp"

namespace hypereyes {
namespace {

FormatErrorKind kind_of(std::string_view raw) {
  const auto p = parse_turn(raw);
  EXPECT_FALSE(p.ok()) << raw;
  return p.ok() ? FormatErrorKind::malformed_json : p.error().kind;
}

TEST(Region, GeometryAndValidity) {
  const Region a{0, 0, 0.5, 1};
  const Region b{0.25, 0, 0.75, 1};
  EXPECT_TRUE(a.valid());
  EXPECT_FALSE((Region{0.5, 0, 0.5, 1}).valid());
  EXPECT_FALSE((Region{-0.1, 0, 0.5, 1}).valid());
  EXPECT_DOUBLE_EQ(intersection_area(a, b), 0.25);
  EXPECT_DOUBLE_EQ(iou(a, b), 0.25 / 0.75);
  EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
}

TEST(ParseTurn, MultiRegionImageSearch) {
  const auto p = parse_turn(
      R"(<reason>find both</reason><tool_call>{"name": "image_search", "arguments": {"image_id": "img_0", "area": [[0,0,0.5,1],[0.5,0,1,1]]}}</tool_call>)");
  ASSERT_TRUE(p.ok());
  const auto& img = std::get<ImageSearch>(*p.turn().call());
  EXPECT_EQ(img.image_id, "img_0");
  ASSERT_TRUE(img.regions);
  EXPECT_EQ(img.regions->size(), 2u);
  EXPECT_EQ(request_count(*p.turn().call()), 2u);
}

TEST(ParseTurn, WholeImageAndTextAndAnswer) {
  auto p = parse_turn(R"(<reason>r</reason><tool_call>{"name":"image_search","arguments":{"image_id":"img_0"}}</tool_call>)");
  ASSERT_TRUE(p.ok());
  EXPECT_FALSE(std::get<ImageSearch>(*p.turn().call()).regions);
  EXPECT_EQ(request_count(*p.turn().call()), 1u);

  p = parse_turn(R"(<reason>r</reason><tool_call>{"name":"text_search","arguments":{"input":["a","b","c"]}}</tool_call>)");
  ASSERT_TRUE(p.ok());
  EXPECT_EQ(request_count(*p.turn().call()), 3u);

  p = parse_turn("<reason>done</reason>\n<answer>120</answer>");
  ASSERT_TRUE(p.ok());
  EXPECT_EQ(p.turn().answer()->text, "120");
}

TEST(ParseTurn, ClassifiesErrors) {
  EXPECT_EQ(kind_of("<answer>x</answer>"), FormatErrorKind::missing_reason);
  EXPECT_EQ(kind_of("<reason>  </reason><answer>x</answer>"), FormatErrorKind::missing_reason);
  EXPECT_EQ(kind_of("<answer>x</answer><reason>late</reason>"), FormatErrorKind::missing_reason);
  EXPECT_EQ(kind_of("<reason>r</reason><tool_call>{not json}</tool_call>"), FormatErrorKind::malformed_json);
  EXPECT_EQ(kind_of("<reason>r</reason>"), FormatErrorKind::malformed_json);
  EXPECT_EQ(kind_of(R"(<reason>r</reason><tool_call>{"name":"web_fetch","arguments":{}}</tool_call>)"),
            FormatErrorKind::malformed_json);
  EXPECT_EQ(kind_of("<reason>r</reason><answer>a</answer><answer>b</answer>"), FormatErrorKind::multiple_actions);
  EXPECT_EQ(kind_of(R"(<reason>r</reason><tool_call>{"name":"text_search","arguments":{"input":["a"]}}</tool_call><answer>b</answer>)"),
            FormatErrorKind::multiple_actions);
  EXPECT_EQ(kind_of(R"(<reason>r</reason><tool_call>{"name":"image_search","arguments":{"image_id":"img_0","area":[[0.6,0,0.5,1]]}}</tool_call>)"),
            FormatErrorKind::bad_region);
  EXPECT_EQ(kind_of(R"(<reason>r</reason><tool_call>{"name":"image_search","arguments":{"image_id":"img_0","area":[]}}</tool_call>)"),
            FormatErrorKind::bad_region);
  EXPECT_EQ(kind_of(R"(<reason>r</reason><tool_call>{"name":"text_search","arguments":{"input":[]}}</tool_call>)"),
            FormatErrorKind::empty_query);
  EXPECT_EQ(kind_of(R"(<reason>r</reason><tool_call>{"name":"text_search","arguments":{"input":["  "]}}</tool_call>)"),
            FormatErrorKind::empty_query);
}

TEST(ParseTurn, TotalOnArbitraryBytes) {
  Rng rng(5);
  const std::string alphabet = "<>/reasontl_cawd{}[]\":,0.1 \xff\n";
  for (int i = 0; i < 5000; ++i) {
    std::string s;
    const auto n = rng.below(60);
    for (std::uint64_t k = 0; k < n; ++k) s += alphabet[rng.below(alphabet.size())];
    EXPECT_NO_THROW((void)parse_turn(s));
  }
}

TEST(RenderTurn, KeyOrderMatchesPrompt) {
  const TurnBlock t{"r", ToolInvocation{ImageSearch{"img_0", std::vector<Region>{{0, 0, 0.5, 1}}}}};
  EXPECT_EQ(render_tool_call_json(*t.call()),
            R"({"name":"image_search","arguments":{"image_id":"img_0","area":[[0.0,0.0,0.5,1.0]]}})");
  EXPECT_EQ(render_turn(TurnBlock{"why", Answer{"42"}}), "<reason>why</reason>\n<answer>42</answer>");
}

TurnBlock random_turn(Rng& rng) {
  auto word = [&] {
    static const char* words[] = {"owl", "left cell", "wingspan", "Größe", "a \"quoted\" term", "x/y", "90"};
    return std::string(words[rng.below(7)]);
  };
  TurnBlock t;
  t.reason = word() + " " + word();
  switch (rng.below(4)) {
    case 0: t.action = Answer{word()}; break;
    case 1: t.action = ToolInvocation{ImageSearch{"img_" + std::to_string(rng.below(3)), std::nullopt}}; break;
    case 2: {
      std::vector<Region> rs;
      for (std::uint64_t i = 0, n = 1 + rng.below(4); i < n; ++i) {
        const double x1 = rng.unit() * 0.5, y1 = rng.unit() * 0.5;
        rs.push_back({x1, y1, x1 + 0.01 + rng.unit() * 0.49, y1 + 0.01 + rng.unit() * 0.49});
      }
      t.action = ToolInvocation{ImageSearch{"img_0", rs}};
      break;
    }
    default: {
      std::vector<std::string> qs;
      for (std::uint64_t i = 0, n = 1 + rng.below(5); i < n; ++i) qs.push_back(word());
      t.action = ToolInvocation{TextSearch{qs}};
    }
  }
  return t;
}

TEST(RenderTurn, RoundTripsRandomTurns) {
  Rng rng(17);
  for (int i = 0; i < 2000; ++i) {
    const auto t = random_turn(rng);
    ASSERT_FALSE(validate_turn(t));
    const auto p = parse_turn(render_turn(t));
    ASSERT_TRUE(p.ok()) << render_turn(t);
    ASSERT_EQ(p.turn(), t) << render_turn(t);
  }
}

TEST(ValidateTurn, RejectsDelimitersInFreeText) {
  EXPECT_TRUE(validate_turn(TurnBlock{"see </reason> here", Answer{"a"}}));
  EXPECT_TRUE(validate_turn(TurnBlock{"r", Answer{"<tool_call>"}}));
  EXPECT_FALSE(validate_turn(TurnBlock{"r", Answer{"a"}}));
}

TEST(FormatErrorKind, StringRoundTrip) {
  for (auto k : {FormatErrorKind::missing_reason, FormatErrorKind::malformed_json, FormatErrorKind::multiple_actions,
                 FormatErrorKind::bad_region, FormatErrorKind::empty_query})
    EXPECT_EQ(format_error_kind_from_string(to_string(k)), k);
  EXPECT_FALSE(format_error_kind_from_string("nope"));
}

}  // namespace
}  // namespace hypereyes
