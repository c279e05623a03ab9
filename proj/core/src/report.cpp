#include "hypereyes/report.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace hypereyes {

std::string fixed(double v, int decimals) {
  if (v == 0.0) v = 0.0;  // no "-0.000"
  auto s = fmt::format("{:.{}f}", v, decimals);
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

std::string Table::to_csv() const {
  auto line = [](const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
      if (!quote) {
        out += cells[i];
        continue;
      }
      out += '"';
      for (char c : cells[i]) {
        if (c == '"') out += '"';
        out += c;
      }
      out += '"';
    }
    return out + '\n';
  };
  std::string out = line(header);
  for (const auto& r : rows) out += line(r);
  return out;
}

std::string Table::to_plain() const {
  std::vector<std::size_t> width(header.size(), 0);
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size() && c < width.size(); ++c) width[c] = std::max(width[c], r[c].size());
  auto line = [&](const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t c = 0; c < width.size(); ++c) {
      const std::string& cell = c < cells.size() ? cells[c] : std::string();
      if (c) out += "  ";
      // First column left-aligned, numbers right-aligned.
      out += c == 0 ? fmt::format("{:<{}}", cell, width[c]) : fmt::format("{:>{}}", cell, width[c]);
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out + '\n';
  };
  std::string out = line(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out += std::string(total + 2 * (width.empty() ? 0 : width.size() - 1), '-') + '\n';
  for (const auto& r : rows) out += line(r);
  return out;
}

Table cas_table(const std::vector<CasRow>& rows) {
  Table t{{"method", "acc", "tok_k", "tool", "cas"}, {}};
  for (const auto& r : rows)
    t.rows.push_back({r.method, fixed(r.acc, 3), fixed(r.tok_k, 1), fixed(r.tool, 2), fixed(cas(r.acc, r.tok_k, r.tool), 3)});
  return t;
}

Table bench_table(const std::vector<BenchRow>& rows) {
  Table t{{"method", "items", "acc", "turns", "t_s", "tok_k", "cas"}, {}};
  for (const auto& r : rows) {
    const auto& a = r.aggregate;
    t.rows.push_back({r.method, std::to_string(a.items), fixed(a.acc, 3), fixed(a.turns, 2), fixed(a.mean_t_s, 2),
                      fixed(a.mean_n_tok / 1000.0, 3), fixed(a.cas, 3)});
  }
  return t;
}

Table records_table(const std::vector<BenchRecord>& records) {
  Table t{{"qa_id", "correct", "t_c", "t_s", "n_tok", "terminal", "cas"}, {}};
  for (const auto& r : records)
    t.rows.push_back({r.qa_id, r.correct ? "1" : "0", std::to_string(r.t_c), std::to_string(r.t_s),
                      std::to_string(r.n_tok), std::string(to_string(r.terminal_reason)), fixed(r.cas, 3)});
  return t;
}

Table epoch_table(const std::vector<EpochReport>& reports) {
  Table t{{"epoch", "rollouts", "acc", "mean_total", "mean_r_tool", "pos_frac", "pos_frac_initial", "tc_positive"}, {}};
  for (const auto& r : reports)
    t.rows.push_back({std::to_string(r.epoch), std::to_string(r.rollouts), fixed(r.acc, 3), fixed(r.mean_total, 4),
                      fixed(r.mean_r_tool, 4), fixed(r.positive_fraction, 3), fixed(r.positive_fraction_initial, 3),
                      fixed(r.mean_tc_positive, 2)});
  return t;
}

Table robustness_table(const std::map<std::size_t, double>& accuracy_by_k) {
  Table t{{"k", "acc"}, {}};
  for (const auto& [k, acc] : accuracy_by_k) t.rows.push_back({std::to_string(k), fixed(acc, 4)});
  return t;
}

}  // namespace hypereyes
