#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hypereyes::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kValidation = 3, kRuntime = 4 };

/// Bad input data or configuration; maps to kValidation.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temporary and renames over the target.
void write_atomic(const std::filesystem::path& path, const std::string& bytes);

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
std::string to_jsonl(const std::vector<nlohmann::json>& rows);

/// Inputs and outputs of one run, with content digests.
class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> argv, std::uint64_t seed);

  void config(const std::string& key, nlohmann::json value) { config_[key] = std::move(value); }
  void input(const std::filesystem::path& path);
  /// Writes `bytes` atomically and records its digest.
  void output(const std::filesystem::path& path, const std::string& bytes);
  /// Written next to `primary` as <primary>.manifest.json.
  void write(const std::filesystem::path& primary) const;

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::uint64_t seed_;
  nlohmann::json config_ = nlohmann::json::object();
  nlohmann::json inputs_ = nlohmann::json::array();
  nlohmann::json outputs_ = nlohmann::json::array();
};

}  // namespace hypereyes::cli
