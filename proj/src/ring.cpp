#include "optikv/ring.hpp"

#include <algorithm>

#include "optikv/errors.hpp"
#include "optikv/hash.hpp"

namespace optikv {

Ring::Ring(std::vector<int> server_ids) {
  if (server_ids.empty()) throw ConfigError("ring needs at least one server");
  for (int id : server_ids)
    points_.emplace_back(fnv1a64("server-" + std::to_string(id)), id);
  std::sort(points_.begin(), points_.end());
}

std::vector<int> Ring::ordered(const std::string& key) const {
  std::uint64_t h = fnv1a64(key);
  size_t start = 0;
  while (start < points_.size() && points_[start].first < h) ++start;
  std::vector<int> out;
  out.reserve(points_.size());
  for (size_t i = 0; i < points_.size(); ++i)
    out.push_back(points_[(start + i) % points_.size()].second);
  return out;
}

std::vector<int> Ring::preference_list(const std::string& key, int n) const {
  auto all = ordered(key);
  if (n > static_cast<int>(all.size()))
    throw ConfigError("replication factor exceeds server count");
  all.resize(static_cast<size_t>(n));
  return all;
}

}  // namespace optikv
