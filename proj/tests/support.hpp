// SPDX-License-Identifier: Apache-2.0
// Shared helpers for the test binaries.
#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <unistd.h>

#include "ttlearn/io.hpp"
#include "ttlearn/llm.hpp"

namespace ttlearn::testing {

inline std::filesystem::path fixture_dir() { return TTLEARN_FIXTURE_DIR; }

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("ttlearn-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

/// Relative path -> file bytes for every regular file under `root`.
inline std::map<std::string, std::string> snapshot_tree(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[std::filesystem::relative(e.path(), root).string()] = read_file(e.path());
  }
  return out;
}

inline std::vector<ReplayBackend::Record> actor_lines(const std::vector<std::string>& actions) {
  std::vector<ReplayBackend::Record> out;
  for (const auto& a : actions) out.push_back({Tag::Actor, a});
  return out;
}

}  // namespace ttlearn::testing
