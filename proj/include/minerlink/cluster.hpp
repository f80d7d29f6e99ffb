#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "minerlink/pairing.hpp"

namespace minerlink {

/// Disjoint sets over 0..n-1 with path compression and union by size.
class UnionFind {
 public:
  explicit UnionFind(std::size_t n);

  std::size_t find(std::size_t x);
  /// True when x and y were in different sets.
  bool unite(std::size_t x, std::size_t y);
  std::size_t size_of(std::size_t x) { return size_[find(x)]; }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

struct SiteCluster {
  std::string cluster_id;            // smallest member uri
  std::vector<std::string> members;  // sorted
  friend bool operator==(const SiteCluster&, const SiteCluster&) = default;
};

/// Connected components of the match graph (label-1 pairs; others are
/// ignored), singletons included, sorted by cluster_id. Throws DataError when
/// a pair endpoint is not among `uris`.
std::vector<SiteCluster> cluster_matches(const std::vector<std::string>& uris,
                                         const std::vector<LabeledPair>& pairs);

struct ClusterReport {
  /// Clusters larger than the configured size limit.
  std::vector<std::string> oversize;
  /// Non-match labeled pairs whose endpoints ended up in one cluster.
  std::vector<PairKey> contradictions;
};

ClusterReport review_clusters(const std::vector<SiteCluster>& clusters,
                              const std::vector<LabeledPair>& pairs,
                              std::size_t max_cluster_size);

/// JSON Lines {"cluster_id": ..., "members": [...]}.
void write_clusters(std::ostream& out, const std::vector<SiteCluster>& clusters);
std::vector<SiteCluster> read_clusters(std::istream& in);

}  // namespace minerlink
