#include "io.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <unistd.h>

#include "hypereyes/rng.hpp"

namespace hypereyes::cli {

using json = nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += fmt::format(".tmp.{}", ::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << bytes;
    out.flush();
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<json> rows;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw ValidationError(fmt::format("{}:{}: {}", path.string(), n, e.what()));
    }
  }
  return rows;
}

std::string to_jsonl(const std::vector<json>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

namespace {

std::string digest(const std::string& bytes) { return fmt::format("{:016x}", fnv1a64(bytes)); }

}  // namespace

Manifest::Manifest(std::string command, std::vector<std::string> argv, std::uint64_t seed)
    : command_(std::move(command)), argv_(std::move(argv)), seed_(seed) {}

void Manifest::input(const std::filesystem::path& path) {
  inputs_.push_back({{"path", path.string()}, {"fnv1a64", digest(read_file(path))}});
}

void Manifest::output(const std::filesystem::path& path, const std::string& bytes) {
  write_atomic(path, bytes);
  outputs_.push_back({{"path", path.string()}, {"fnv1a64", digest(bytes)}});
}

void Manifest::write(const std::filesystem::path& primary) const {
  json m{{"command", command_}, {"argv", argv_},     {"seed", seed_},
         {"config", config_},   {"inputs", inputs_}, {"outputs", outputs_}};
  auto path = primary;
  path += ".manifest.json";
  write_atomic(path, m.dump(2) + "\n");
}

}  // namespace hypereyes::cli
