#include "cppf/replay.hpp"

#include <fstream>
#include <mutex>

#include "cppf/digest.hpp"
#include "cppf/error.hpp"
#include "json.hpp"

namespace cppf {

using nlohmann::json;

std::string prompt_digest(const std::string& prompt) { return sha256_hex(prompt); }

ReplayStore ReplayStore::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open replay fixture " + path.string());
  ReplayStore store;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    ReplayEntry e;
    try {
      auto j = json::parse(line);
      e.prompt = j.at("prompt").get<std::string>();
      e.completion = j.at("completion").get<std::string>();
      e.endpoint = j.value("endpoint", std::string{});
      e.digest = j.contains("digest") ? j.at("digest").get<std::string>() : prompt_digest(e.prompt);
    } catch (const json::exception& ex) {
      throw DataError(where + "malformed replay record: " + ex.what());
    }
    if (e.digest != prompt_digest(e.prompt)) {
      throw DataError(where + "digest does not match prompt");
    }
    store.insert(std::move(e));
  }
  return store;
}

ReplayStore::ReplayStore(ReplayStore&& other) noexcept {
  std::unique_lock lock(other.mu_);
  entries_ = std::move(other.entries_);
  index_ = std::move(other.index_);
}

std::optional<ReplayEntry> ReplayStore::find(const std::string& prompt) const {
  return find_digest(prompt_digest(prompt));
}

std::optional<ReplayEntry> ReplayStore::find_digest(const std::string& digest) const {
  std::shared_lock lock(mu_);
  auto it = index_.find(digest);
  if (it == index_.end()) return std::nullopt;
  return entries_[it->second];
}

bool ReplayStore::insert(ReplayEntry entry) {
  if (entry.digest.empty()) entry.digest = prompt_digest(entry.prompt);
  std::unique_lock lock(mu_);
  if (index_.contains(entry.digest)) return false;
  index_.emplace(entry.digest, entries_.size());
  entries_.push_back(std::move(entry));
  return true;
}

std::size_t ReplayStore::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

std::vector<ReplayEntry> ReplayStore::entries() const {
  std::shared_lock lock(mu_);
  return entries_;
}

void ReplayStore::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write replay fixture " + path.string());
  for (const auto& e : entries()) {
    json j = {{"digest", e.digest},
              {"prompt", e.prompt},
              {"completion", e.completion},
              {"endpoint", e.endpoint}};
    out << j.dump() << '\n';
  }
}

}  // namespace cppf
