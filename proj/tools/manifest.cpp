#include "manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include <json.hpp>

#include "meandim/common.hpp"
#include "meandim/csv.hpp"
#include "meandim/rng.hpp"

namespace meandim::cli {
namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string() + " for hashing");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

RunManifest::RunManifest(std::string command, std::vector<std::string> args, std::size_t threads)
    : command_(std::move(command)), args_(std::move(args)), threads_(threads), started_at_(utc_now()) {}

void RunManifest::add_seed(std::string name, std::uint64_t seed) { seeds_.emplace_back(std::move(name), seed); }

void RunManifest::add_input(const std::filesystem::path& path) {
  inputs_.emplace_back(path.string(), file_digest(path));
}

void RunManifest::add_output(const std::filesystem::path& path) { outputs_.push_back(path.string()); }

void RunManifest::add_setting(std::string name, std::string value) {
  settings_.emplace_back(std::move(name), std::move(value));
}

std::filesystem::path RunManifest::write(const std::filesystem::path& dir) const {
  nlohmann::ordered_json j;
  j["command"] = command_;
  j["command_line"] = args_;
  j["version"] = version();
  j["rng"] = Rng::kAlgorithm;
  j["threads"] = threads_;
  j["seeds"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : seeds_) j["seeds"][k] = v;
  j["settings"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : settings_) j["settings"][k] = v;
  j["inputs"] = nlohmann::ordered_json::array();
  for (const auto& [p, h] : inputs_) j["inputs"].push_back({{"path", p}, {"fnv1a64", h}});
  j["outputs"] = outputs_;
  j["started_at"] = started_at_;
  j["finished_at"] = utc_now();
  const auto path = dir / "run_manifest.json";
  csv::write_atomic(path, j.dump(2) + "\n");
  return path;
}

}  // namespace meandim::cli
