#pragma once

#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace cppf {

struct ReplayEntry {
  std::string digest;  // hex SHA-256 of the UTF-8 prompt
  std::string prompt;
  std::string completion;
  std::string endpoint;

  friend bool operator==(const ReplayEntry&, const ReplayEntry&) = default;
};

std::string prompt_digest(const std::string& prompt);

/// Prompt-digest keyed store of recorded completions.
///
/// Lookups take a shared lock, inserts an exclusive one. Entries keep their
/// insertion order so a saved fixture is stable across runs.
class ReplayStore {
 public:
  ReplayStore() = default;
  ReplayStore(ReplayStore&& other) noexcept;
  ReplayStore& operator=(ReplayStore&&) = delete;
  static ReplayStore load(const std::filesystem::path& path);

  std::optional<ReplayEntry> find(const std::string& prompt) const;
  std::optional<ReplayEntry> find_digest(const std::string& digest) const;
  // First write wins; returns false if the digest was already present.
  bool insert(ReplayEntry entry);
  std::size_t size() const;
  std::vector<ReplayEntry> entries() const;

  void save(const std::filesystem::path& path) const;

 private:
  mutable std::shared_mutex mu_;
  std::vector<ReplayEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace cppf
