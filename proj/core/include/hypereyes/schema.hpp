#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

// Unified grounded search turn grammar:
//
//   <reason>...</reason>
//   <tool_call>{"name": "image_search", "arguments": {"image_id": "img_0", "area": [[x1,y1,x2,y2], ...]}}</tool_call>
//   <tool_call>{"name": "text_search", "arguments": {"input": ["q1", "q2"]}}</tool_call>
//   <answer>...</answer>
//
// A turn is one reason block followed by exactly one tool_call or answer block.

namespace hypereyes {

/// Normalized box, fractions of image width (x) and height (y).
struct Region {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 1.0;
  double y2 = 1.0;

  [[nodiscard]] bool valid() const noexcept;
  [[nodiscard]] double area() const noexcept { return (x2 - x1) * (y2 - y1); }

  friend bool operator==(const Region&, const Region&) = default;
};

double intersection_area(const Region& a, const Region& b) noexcept;
double iou(const Region& a, const Region& b) noexcept;

struct ImageSearch {
  std::string image_id;
  std::optional<std::vector<Region>> regions;  // absent = whole image

  friend bool operator==(const ImageSearch&, const ImageSearch&) = default;
};

struct TextSearch {
  std::vector<std::string> queries;

  friend bool operator==(const TextSearch&, const TextSearch&) = default;
};

using ToolInvocation = std::variant<ImageSearch, TextSearch>;

/// Number of backend requests an invocation issues (regions or queries; whole-image search is 1).
std::size_t request_count(const ToolInvocation& call) noexcept;

struct Answer {
  std::string text;

  friend bool operator==(const Answer&, const Answer&) = default;
};

using Action = std::variant<ToolInvocation, Answer>;

struct TurnBlock {
  std::string reason;
  Action action;

  [[nodiscard]] bool is_call() const noexcept { return std::holds_alternative<ToolInvocation>(action); }
  [[nodiscard]] const ToolInvocation* call() const noexcept { return std::get_if<ToolInvocation>(&action); }
  [[nodiscard]] const Answer* answer() const noexcept { return std::get_if<Answer>(&action); }

  friend bool operator==(const TurnBlock&, const TurnBlock&) = default;
};

enum class FormatErrorKind { missing_reason, malformed_json, multiple_actions, bad_region, empty_query };

std::string_view to_string(FormatErrorKind kind) noexcept;
std::optional<FormatErrorKind> format_error_kind_from_string(std::string_view s) noexcept;

struct FormatError {
  FormatErrorKind kind;
  std::string detail;
};

/// Result of parse_turn: exactly one of turn / error is set.
class ParsedTurn {
 public:
  ParsedTurn(TurnBlock turn) : value_(std::move(turn)) {}   // NOLINT(google-explicit-constructor)
  ParsedTurn(FormatError err) : value_(std::move(err)) {}   // NOLINT(google-explicit-constructor)

  [[nodiscard]] bool ok() const noexcept { return std::holds_alternative<TurnBlock>(value_); }
  explicit operator bool() const noexcept { return ok(); }

  [[nodiscard]] const TurnBlock& turn() const { return std::get<TurnBlock>(value_); }
  [[nodiscard]] TurnBlock& turn() { return std::get<TurnBlock>(value_); }
  [[nodiscard]] const FormatError& error() const { return std::get<FormatError>(value_); }

 private:
  std::variant<TurnBlock, FormatError> value_;
};

/// Total: never throws on any input; non-conforming text yields a classified FormatError.
ParsedTurn parse_turn(std::string_view raw_text);

/// Checks every TurnBlock invariant, including that free text cannot be confused with a delimiter.
std::optional<FormatError> validate_turn(const TurnBlock& turn);

/// Inverse of parse_turn for valid turns: parse_turn(render_turn(t)) == t.
std::string render_turn(const TurnBlock& turn);

/// The tool_call JSON object alone, with keys in the order the system prompt shows them.
std::string render_tool_call_json(const ToolInvocation& call);

}  // namespace hypereyes
