#pragma once

#include <string>
#include <vector>

namespace optikv {

/// Consistent-hash ring over server ids. Keys map to a position; the first
/// N distinct servers clockwise form the preference list, and the servers
/// after them (still in ring order) are the second-round standbys.
class Ring {
 public:
  explicit Ring(std::vector<int> server_ids);

  // every server, in ring order starting at the key's position
  std::vector<int> ordered(const std::string& key) const;
  std::vector<int> preference_list(const std::string& key, int n) const;

  int size() const { return static_cast<int>(points_.size()); }

 private:
  std::vector<std::pair<std::uint64_t, int>> points_;  // sorted (hash, id)
};

}  // namespace optikv
