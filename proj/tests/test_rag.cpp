#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace arsrg;

namespace {

/// Brute-force adjacency oracle: all pixel pairs at Chebyshev distance 1.
std::vector<std::uint8_t> brute_force_adjacency(const LabelMap& lm) {
  const int n = lm.num_regions;
  std::vector<std::uint8_t> adj(static_cast<std::size_t>(n) * n, 0);
  for (int y1 = 0; y1 < lm.height; ++y1) {
    for (int x1 = 0; x1 < lm.width; ++x1) {
      for (int y2 = 0; y2 < lm.height; ++y2) {
        for (int x2 = 0; x2 < lm.width; ++x2) {
          if (std::max(std::abs(x1 - x2), std::abs(y1 - y2)) != 1) continue;
          const int a = lm.at(x1, y1) - 1, b = lm.at(x2, y2) - 1;
          if (a != b) adj[static_cast<std::size_t>(a) * n + b] = 1;
        }
      }
    }
  }
  return adj;
}

LabelMap quadrant_label_map(int w, int h) {
  LabelMap lm{w, h, 4, std::vector<int>(static_cast<std::size_t>(w) * h)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) lm.at(x, y) = (y >= h / 2) * 2 + (x >= w / 2) + 1;
  }
  return lm;
}

}  // namespace

TEST_CASE("quadrant label map builds K4") {
  const RegionGraph rg = build_rag(quadrant_label_map(8, 8));
  REQUIRE(rg.num_regions == 4);
  CHECK(rg.edges().size() == 6);  // corner pixels touch across the diagonal
  for (std::int64_t s : rg.region_sizes) CHECK(s == 16);
}

TEST_CASE("single region has no edges") {
  LabelMap lm{5, 5, 1, std::vector<int>(25, 1)};
  const RegionGraph rg = build_rag(lm);
  CHECK(rg.num_regions == 1);
  CHECK(rg.edges().empty());
  CHECK(rg.region_sizes[0] == 25);
}

TEST_CASE("two horizontal stripes share one edge") {
  LabelMap lm{10, 6, 2, {}};
  lm.labels.resize(60);
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 10; ++x) lm.at(x, y) = (y < 2) ? 1 : 2;
  }
  const RegionGraph rg = build_rag(lm);
  CHECK(rg.edges() == std::vector<std::pair<int, int>>{{0, 1}});
  CHECK(rg.region_sizes == std::vector<std::int64_t>{20, 40});
  CHECK(rg.region_centroids[0].first == Catch::Approx(4.5));
  CHECK(rg.region_centroids[0].second == Catch::Approx(0.5));
}

TEST_CASE("adjacency matrix is symmetric with zero diagonal") {
  std::mt19937_64 rng(31);
  const RasterImage img = testutil::random_quantized_image(rng, 20, 20, 4);
  const RegionGraph rg = build_rag(label_connected_components(img, 8));
  for (int i = 0; i < rg.num_regions; ++i) {
    CHECK_FALSE(rg.adjacent(i, i));
    for (int j = 0; j < rg.num_regions; ++j) CHECK(rg.adjacent(i, j) == rg.adjacent(j, i));
  }
}

TEST_CASE("adjacency equals the brute-force pixel-pair oracle") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const RasterImage img = testutil::random_quantized_image(rng, 16, 16, 3);
    const LabelMap lm = label_connected_components(img, 8);
    CHECK(build_rag(lm).adjacency == brute_force_adjacency(lm));
  }
}

TEST_CASE("graph is invariant under 90-degree rotation") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const RasterImage img = testutil::random_quantized_image(rng, 14, 18, 3);
    const LabelMap lm = label_connected_components(img, 8);
    const LabelMap rotated = testutil::rotate90(lm);
    const RegionGraph a = build_rag(lm);
    const RegionGraph b = build_rag(rotated);
    // rotation is a pixel bijection keeping labels, so the graphs must agree
    CHECK(a.num_regions == b.num_regions);
    CHECK(a.adjacency == b.adjacency);
    CHECK(a.region_sizes == b.region_sizes);
  }
}

TEST_CASE("padding with a border region only adds edges at that region") {
  const LabelMap lm = quadrant_label_map(6, 6);
  LabelMap padded{8, 8, 5, std::vector<int>(64, 5)};
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 6; ++x) padded.at(x + 1, y + 1) = lm.at(x, y);
  }
  const RegionGraph inner = build_rag(lm);
  const RegionGraph outer = build_rag(padded);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) CHECK(inner.adjacent(i, j) == outer.adjacent(i, j));
  }
}

TEST_CASE("region sizes sum to the pixel count") {
  std::mt19937_64 rng(8);
  const RasterImage img = testutil::random_quantized_image(rng, 22, 13, 4);
  const RegionGraph rg = build_rag(label_connected_components(img, 4));
  std::int64_t total = 0;
  for (std::int64_t s : rg.region_sizes) {
    CHECK(s >= 1);
    total += s;
  }
  CHECK(total == 22 * 13);
}

TEST_CASE("region_filter_mask thresholds sizes") {
  RegionGraph rg;
  rg.num_regions = 3;
  rg.region_sizes = {5, 100, 200};
  rg.adjacency.assign(9, 0);
  rg.region_centroids.assign(3, {0, 0});
  CHECK(region_filter_mask(rg, 0) == std::vector<bool>{true, true, true});
  CHECK(region_filter_mask(rg, 50) == std::vector<bool>{false, true, true});
  CHECK(region_filter_mask(rg, 201) == std::vector<bool>{false, false, false});
}

TEST_CASE("neighbor lists order by centroid distance") {
  const RegionGraph rg = build_rag(quadrant_label_map(8, 8));
  const auto neighbors = rg.neighbors_by_distance(0);
  REQUIRE(neighbors.size() == 3);
  // regions 1 and 2 are side-adjacent, region 3 is the diagonal one
  CHECK(neighbors.back() == 3);
}
