#include "minerlink/cluster.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include <json.hpp>

#include "minerlink/error.hpp"

namespace minerlink {

UnionFind::UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
  std::iota(parent_.begin(), parent_.end(), std::size_t{0});
}

std::size_t UnionFind::find(std::size_t x) {
  std::size_t root = x;
  while (parent_[root] != root) root = parent_[root];
  while (parent_[x] != root) {
    const std::size_t next = parent_[x];
    parent_[x] = root;
    x = next;
  }
  return root;
}

bool UnionFind::unite(std::size_t x, std::size_t y) {
  x = find(x);
  y = find(y);
  if (x == y) return false;
  if (size_[x] < size_[y]) std::swap(x, y);
  parent_[y] = x;
  size_[x] += size_[y];
  return true;
}

std::vector<SiteCluster> cluster_matches(const std::vector<std::string>& uris,
                                         const std::vector<LabeledPair>& pairs) {
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(uris.size());
  for (std::size_t i = 0; i < uris.size(); ++i) {
    if (!index.emplace(uris[i], i).second) {
      throw DataError("cluster: duplicate uri '" + uris[i] + "'");
    }
  }
  auto lookup = [&](const std::string& uri) {
    const auto it = index.find(uri);
    if (it == index.end()) throw DataError("cluster: unknown uri '" + uri + "'");
    return it->second;
  };

  UnionFind uf(uris.size());
  for (const auto& p : pairs) {
    const std::size_t a = lookup(p.key.uri_1());
    const std::size_t b = lookup(p.key.uri_2());
    if (p.label == 1) uf.unite(a, b);
  }

  std::unordered_map<std::size_t, std::size_t> slot;
  std::vector<SiteCluster> out;
  for (std::size_t i = 0; i < uris.size(); ++i) {
    const std::size_t root = uf.find(i);
    auto [it, fresh] = slot.emplace(root, out.size());
    if (fresh) out.emplace_back();
    out[it->second].members.push_back(uris[i]);
  }
  for (auto& c : out) {
    std::sort(c.members.begin(), c.members.end());
    c.cluster_id = c.members.front();
  }
  std::sort(out.begin(), out.end(), [](const SiteCluster& a, const SiteCluster& b) {
    return a.cluster_id < b.cluster_id;
  });
  return out;
}

ClusterReport review_clusters(const std::vector<SiteCluster>& clusters,
                              const std::vector<LabeledPair>& pairs,
                              std::size_t max_cluster_size) {
  ClusterReport rep;
  std::unordered_map<std::string, const std::string*> owner;
  for (const auto& c : clusters) {
    if (c.members.size() > max_cluster_size) rep.oversize.push_back(c.cluster_id);
    for (const auto& m : c.members) owner.emplace(m, &c.cluster_id);
  }
  for (const auto& p : pairs) {
    if (p.label != 0) continue;
    const auto a = owner.find(p.key.uri_1());
    const auto b = owner.find(p.key.uri_2());
    if (a != owner.end() && b != owner.end() && a->second == b->second) {
      rep.contradictions.push_back(p.key);
    }
  }
  std::sort(rep.contradictions.begin(), rep.contradictions.end());
  return rep;
}

void write_clusters(std::ostream& out, const std::vector<SiteCluster>& clusters) {
  for (const auto& c : clusters) {
    out << nlohmann::json{{"cluster_id", c.cluster_id}, {"members", c.members}}.dump()
        << '\n';
  }
}

std::vector<SiteCluster> read_clusters(std::istream& in) {
  std::vector<SiteCluster> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("cluster_id").get<std::string>(),
                     j.at("members").get<std::vector<std::string>>()});
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("clusters: ") + e.what());
    }
  }
  return out;
}

}  // namespace minerlink
