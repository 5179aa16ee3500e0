#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "arsrg/errors.hpp"
#include "arsrg/segmentation.hpp"

namespace arsrg {

/// Region Adjacency Graph: regions as nodes, shared boundaries as undirected
/// edges. Regions are indexed 0..n-1 (label minus one).
struct RegionGraph {
  int num_regions = 0;
  std::vector<std::uint8_t> adjacency;  // n*n, symmetric, zero diagonal
  std::vector<std::int64_t> region_sizes;
  std::vector<std::pair<double, double>> region_centroids;  // mean (x, y)

  bool adjacent(int i, int j) const {
    return adjacency[static_cast<std::size_t>(i) * num_regions + j] != 0;
  }

  std::vector<std::pair<int, int>> edges() const {
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < num_regions; ++i) {
      for (int j = i + 1; j < num_regions; ++j) {
        if (adjacent(i, j)) out.emplace_back(i, j);
      }
    }
    return out;
  }

  /// Neighbors of a region ordered by centroid Euclidean distance ascending
  /// (ties by index). No contract depends on this ordering; it mirrors the
  /// distance-ordered edge lists of the graph design.
  std::vector<int> neighbors_by_distance(int i) const {
    std::vector<int> out;
    for (int j = 0; j < num_regions; ++j) {
      if (j != i && adjacent(i, j)) out.push_back(j);
    }
    auto dist2 = [&](int j) {
      const double dx = region_centroids[i].first - region_centroids[j].first;
      const double dy = region_centroids[i].second - region_centroids[j].second;
      return dx * dx + dy * dy;
    };
    std::stable_sort(out.begin(), out.end(),
                     [&](int a, int b) { return dist2(a) < dist2(b); });
    return out;
  }

  bool operator==(const RegionGraph&) const = default;
};

/// Builds the RAG: regions i and j are adjacent iff some pixel of i has a
/// pixel of j in its 8-neighborhood. Neighborhoods are clipped at image
/// borders. Also accumulates per-region pixel counts and centroids.
inline RegionGraph build_rag(const LabelMap& lm) {
  const int n = lm.num_regions;
  RegionGraph rg;
  rg.num_regions = n;
  rg.adjacency.assign(static_cast<std::size_t>(n) * n, 0);
  rg.region_sizes.assign(n, 0);
  std::vector<std::pair<double, double>> sums(n, {0.0, 0.0});
  static constexpr int kDx[] = {-1, 0, 1, -1, 1, -1, 0, 1};
  static constexpr int kDy[] = {-1, -1, -1, 0, 0, 1, 1, 1};
  for (int y = 0; y < lm.height; ++y) {
    for (int x = 0; x < lm.width; ++x) {
      const int r = lm.at(x, y) - 1;
      rg.region_sizes[r]++;
      sums[r].first += x;
      sums[r].second += y;
      for (int k = 0; k < 8; ++k) {
        const int nx = x + kDx[k], ny = y + kDy[k];
        if (nx < 0 || ny < 0 || nx >= lm.width || ny >= lm.height) continue;
        const int s = lm.at(nx, ny) - 1;
        if (s != r) {
          rg.adjacency[static_cast<std::size_t>(r) * n + s] = 1;
          rg.adjacency[static_cast<std::size_t>(s) * n + r] = 1;
        }
      }
    }
  }
  rg.region_centroids.resize(n);
  for (int i = 0; i < n; ++i) {
    rg.region_centroids[i] = {sums[i].first / rg.region_sizes[i],
                              sums[i].second / rg.region_sizes[i]};
  }
  return rg;
}

/// mask[i] = region i has at least min_size pixels. Consumers apply the mask;
/// the graph itself is never mutated.
inline std::vector<bool> region_filter_mask(const RegionGraph& rg, std::int64_t min_size) {
  if (min_size < 0) throw DataError("region_filter_mask: min_size must be >= 0");
  std::vector<bool> mask(rg.region_sizes.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = rg.region_sizes[i] >= min_size;
  return mask;
}

}  // namespace arsrg
