#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace meandim::cli {

/// FNV-1a 64-bit digest of a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

/// Provenance record written as run_manifest.json next to a command's outputs.
class RunManifest {
 public:
  RunManifest(std::string command, std::vector<std::string> args, std::size_t threads);

  void add_seed(std::string name, std::uint64_t seed);
  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  void add_setting(std::string name, std::string value);

  /// Stamps the finish time and writes dir/run_manifest.json atomically.
  std::filesystem::path write(const std::filesystem::path& dir) const;

 private:
  std::string command_;
  std::vector<std::string> args_;
  std::size_t threads_;
  std::string started_at_;
  std::vector<std::pair<std::string, std::uint64_t>> seeds_;
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::string> outputs_;
  std::vector<std::pair<std::string, std::string>> settings_;
};

}  // namespace meandim::cli
