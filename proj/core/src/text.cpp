#include "hypereyes/text.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace hypereyes {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

constexpr std::array<std::string_view, 32> kStopWords = {
    "a",  "an",  "and", "are", "as",   "at",   "be",   "by",   "for",  "from", "has",
    "in", "is",  "it",  "its", "of",   "on",   "or",   "that", "the",  "this", "to",
    "was", "were", "what", "which", "who", "with", "how", "many", "much", "does"};

}  // namespace

std::string_view trim(std::string_view s) noexcept {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string collapse_whitespace_lower(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : trim(s)) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::vector<std::string> word_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (is_alnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bool is_stop_word(std::string_view token) {
  for (auto w : kStopWords)
    if (w == token) return true;
  return false;
}

std::set<std::string> content_tokens(std::string_view s) {
  std::set<std::string> out;
  for (auto& t : word_tokens(s))
    if (!is_stop_word(t)) out.insert(std::move(t));
  return out;
}

std::size_t whitespace_token_count(std::string_view s) {
  std::size_t n = 0;
  bool in_token = false;
  for (char c : s) {
    if (is_space(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++n;
    }
  }
  return n;
}

Tokenizer whitespace_tokenizer() { return &whitespace_token_count; }

bool parse_number(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return false;
  out = v;
  return true;
}

std::string format_number(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(v));
    return buf;
  }
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace hypereyes

namespace hypereyes {

std::string normalize_answer(std::string_view s) {
  s = trim(s);
  std::string spaced;
  spaced.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    const bool digit_before = i > 0 && std::isdigit(static_cast<unsigned char>(s[i - 1]));
    const bool digit_after = i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1]));
    if (std::isalnum(static_cast<unsigned char>(c)) || std::isspace(static_cast<unsigned char>(c)) ||
        (c == '.' && digit_before && digit_after) || static_cast<unsigned char>(c) >= 0x80) {
      spaced.push_back(c);
    } else {
      spaced.push_back(' ');
    }
  }
  return collapse_whitespace_lower(spaced);
}

bool answers_equivalent(std::string_view predicted, std::string_view gold) {
  double a = 0.0, b = 0.0;
  if (parse_number(predicted, a) && parse_number(gold, b)) return a == b;
  const auto np = normalize_answer(predicted);
  return !np.empty() && np == normalize_answer(gold);
}

}  // namespace hypereyes
