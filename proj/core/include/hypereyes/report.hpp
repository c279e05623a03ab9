#pragma once

#include <string>
#include <vector>

#include "hypereyes/eval.hpp"
#include "hypereyes/trainer.hpp"

namespace hypereyes {

/// A rectangular table of pre-formatted cells.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Comma-separated, one line per row, header first.
  [[nodiscard]] std::string to_csv() const;
  /// Space-padded columns with a rule under the header.
  [[nodiscard]] std::string to_plain() const;
};

/// Published-style cost row: accuracy as a fraction, mean tokens in thousands, mean tool rounds.
struct CasRow {
  std::string method;
  double acc = 0.0;
  double tok_k = 0.0;
  double tool = 0.0;
};

Table cas_table(const std::vector<CasRow>& rows);

struct BenchRow {
  std::string method;
  BenchAggregate aggregate;
};

Table bench_table(const std::vector<BenchRow>& rows);
Table records_table(const std::vector<BenchRecord>& records);
Table epoch_table(const std::vector<EpochReport>& reports);
Table robustness_table(const std::map<std::size_t, double>& accuracy_by_k);

/// Fixed-point formatting used by every table.
std::string fixed(double v, int decimals);

}  // namespace hypereyes
