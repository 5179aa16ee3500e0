#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <vector>

#include "arsrg/errors.hpp"
#include "arsrg/image.hpp"

namespace arsrg {

/// Per-pixel region labels. Labels run 1..num_regions with no gaps;
/// 0 is reserved for "unlabeled" and never appears in a finished map.
struct LabelMap {
  int width = 0;
  int height = 0;
  int num_regions = 0;
  std::vector<int> labels;

  int at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
  int& at(int x, int y) { return labels[static_cast<std::size_t>(y) * width + x]; }

  bool operator==(const LabelMap&) const = default;
};

struct SegmentationParams {
  int num_colors = 16;
  int connectivity = 8;  // 4 or 8
  int min_region_px = 50;
  std::uint64_t seed = 1;
};

namespace detail {

using Rgb = std::array<std::uint8_t, 3>;

inline double rgb_dist2(const std::array<double, 3>& a, const Rgb& b) {
  const double d0 = a[0] - b[0], d1 = a[1] - b[1], d2 = a[2] - b[2];
  return d0 * d0 + d1 * d1 + d2 * d2;
}

}  // namespace detail

/// K-means palette quantization in RGB. k-means++ seeding from a seeded PRNG,
/// at most 50 Lloyd iterations, nearest-center ties resolved toward the lowest
/// palette index. Runs on the image's distinct colors weighted by pixel count,
/// which is equivalent to pixel-level k-means. When the image has at most
/// num_colors distinct colors the output is the input (lossless).
inline RasterImage quantize_colors(const RasterImage& input, const SegmentationParams& params) {
  if (params.num_colors < 2) throw DataError("quantize_colors: num_colors must be >= 2");
  const RasterImage img = to_rgb(input);

  std::map<detail::Rgb, std::size_t> color_counts;
  for (int i = 0; i < img.width * img.height; ++i) {
    color_counts[{img.pixels[i * 3], img.pixels[i * 3 + 1], img.pixels[i * 3 + 2]}]++;
  }
  const std::size_t k = static_cast<std::size_t>(params.num_colors);
  if (color_counts.size() <= k) return img;

  std::vector<detail::Rgb> colors;
  std::vector<double> weights;
  colors.reserve(color_counts.size());
  for (const auto& [c, n] : color_counts) {
    colors.push_back(c);
    weights.push_back(static_cast<double>(n));
  }

  // k-means++ over the weighted color set.
  std::mt19937_64 rng(params.seed);
  std::vector<std::array<double, 3>> centers;
  std::vector<double> d2(colors.size(), std::numeric_limits<double>::infinity());
  {
    std::discrete_distribution<std::size_t> first(weights.begin(), weights.end());
    const detail::Rgb& c0 = colors[first(rng)];
    centers.push_back({double(c0[0]), double(c0[1]), double(c0[2])});
  }
  while (centers.size() < k) {
    double total = 0;
    for (std::size_t i = 0; i < colors.size(); ++i) {
      d2[i] = std::min(d2[i], detail::rgb_dist2(centers.back(), colors[i]));
      total += weights[i] * d2[i];
    }
    std::size_t pick = 0;
    if (total > 0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng), acc = 0;
      for (std::size_t i = 0; i < colors.size(); ++i) {
        acc += weights[i] * d2[i];
        if (acc >= r) {
          pick = i;
          break;
        }
      }
    }
    centers.push_back({double(colors[pick][0]), double(colors[pick][1]), double(colors[pick][2])});
  }

  std::vector<std::size_t> assign(colors.size(), 0);
  for (int iter = 0; iter < 50; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < colors.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_j = 0;
      for (std::size_t j = 0; j < centers.size(); ++j) {
        const double d = detail::rgb_dist2(centers[j], colors[i]);
        if (d < best) {
          best = d;
          best_j = j;
        }
      }
      if (assign[i] != best_j) {
        assign[i] = best_j;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;
    std::vector<std::array<double, 3>> sums(centers.size(), {0, 0, 0});
    std::vector<double> mass(centers.size(), 0);
    for (std::size_t i = 0; i < colors.size(); ++i) {
      for (int c = 0; c < 3; ++c) sums[assign[i]][c] += weights[i] * colors[i][c];
      mass[assign[i]] += weights[i];
    }
    for (std::size_t j = 0; j < centers.size(); ++j) {
      if (mass[j] > 0) {
        for (int c = 0; c < 3; ++c) centers[j][c] = sums[j][c] / mass[j];
      }
    }
  }

  std::vector<detail::Rgb> palette(centers.size());
  for (std::size_t j = 0; j < centers.size(); ++j) {
    for (int c = 0; c < 3; ++c) {
      palette[j][c] = static_cast<std::uint8_t>(std::lround(std::clamp(centers[j][c], 0.0, 255.0)));
    }
  }
  std::map<detail::Rgb, detail::Rgb> remap;
  for (std::size_t i = 0; i < colors.size(); ++i) remap[colors[i]] = palette[assign[i]];

  RasterImage out = img;
  for (int i = 0; i < out.width * out.height; ++i) {
    const detail::Rgb q =
        remap[{img.pixels[i * 3], img.pixels[i * 3 + 1], img.pixels[i * 3 + 2]}];
    out.pixels[i * 3] = q[0];
    out.pixels[i * 3 + 1] = q[1];
    out.pixels[i * 3 + 2] = q[2];
  }
  return out;
}

namespace detail {

inline std::vector<std::pair<int, int>> neighbor_offsets(int connectivity) {
  if (connectivity == 4) return {{0, -1}, {-1, 0}, {1, 0}, {0, 1}};
  if (connectivity == 8) {
    return {{-1, -1}, {0, -1}, {1, -1}, {-1, 0}, {1, 0}, {-1, 1}, {0, 1}, {1, 1}};
  }
  throw DataError("connectivity must be 4 or 8");
}

inline bool same_color(const RasterImage& img, int a, int b) {
  for (int c = 0; c < img.channels; ++c) {
    if (img.pixels[a * img.channels + c] != img.pixels[b * img.channels + c]) return false;
  }
  return true;
}

}  // namespace detail

/// Flood-fill labeling in raster-scan discovery order, labels from 1.
/// Two pixels share a label iff a chain of same-color neighbors connects them
/// under the given connectivity. Uses an explicit stack; region area is
/// unbounded so recursion is not an option.
inline LabelMap label_connected_components(const RasterImage& img, int connectivity) {
  const auto offsets = detail::neighbor_offsets(connectivity);
  LabelMap lm{img.width, img.height, 0,
              std::vector<int>(static_cast<std::size_t>(img.width) * img.height, 0)};
  std::vector<int> stack;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (lm.at(x, y) != 0) continue;
      const int label = ++lm.num_regions;
      stack.push_back(y * img.width + x);
      lm.at(x, y) = label;
      while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        const int px = p % img.width, py = p / img.width;
        for (const auto& [dx, dy] : offsets) {
          const int nx = px + dx, ny = py + dy;
          if (nx < 0 || ny < 0 || nx >= img.width || ny >= img.height) continue;
          const int q = ny * img.width + nx;
          if (lm.labels[q] == 0 && detail::same_color(img, p, q)) {
            lm.labels[q] = label;
            stack.push_back(q);
          }
        }
      }
    }
  }
  return lm;
}

namespace detail {

/// Relabels to 1..n in raster-scan first-occurrence order.
inline void compact_labels(LabelMap& lm) {
  std::vector<int> remap(static_cast<std::size_t>(lm.num_regions) + 1, 0);
  int next = 0;
  for (int& l : lm.labels) {
    if (remap[l] == 0) remap[l] = ++next;
    l = remap[l];
  }
  lm.num_regions = next;
}

}  // namespace detail

/// Absorbs every region under min_region_px into the adjacent region with the
/// closest mean color (Euclidean RGB, ties to the lower label), iterating until
/// every surviving region meets the threshold or only one region remains.
/// Adjacency follows the given connectivity so merged regions stay connected.
inline LabelMap merge_small_regions(const LabelMap& input, const RasterImage& quantized,
                                    int min_region_px, int connectivity = 8) {
  if (input.width != quantized.width || input.height != quantized.height) {
    throw DataError("merge_small_regions: label map and image dimensions differ");
  }
  const RasterImage rgb = to_rgb(quantized);
  const auto offsets = detail::neighbor_offsets(connectivity);
  LabelMap lm = input;
  detail::compact_labels(lm);

  while (lm.num_regions > 1) {
    const int n = lm.num_regions;
    std::vector<std::int64_t> area(n, 0);
    std::vector<std::array<double, 3>> color_sum(n, {0, 0, 0});
    std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
    for (int y = 0; y < lm.height; ++y) {
      for (int x = 0; x < lm.width; ++x) {
        const int r = lm.at(x, y) - 1;
        area[r]++;
        for (int c = 0; c < 3; ++c) color_sum[r][c] += rgb.at(x, y, c);
        for (const auto& [dx, dy] : offsets) {
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= lm.width || ny >= lm.height) continue;
          const int s = lm.at(nx, ny) - 1;
          if (s != r) adj[r][s] = adj[s][r] = 1;
        }
      }
    }
    std::vector<std::array<double, 3>> mean(n);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < 3; ++c) mean[r][c] = color_sum[r][c] / static_cast<double>(area[r]);
    }

    // Each undersized region picks its absorber from pre-merge statistics;
    // union-find resolves absorption chains within the pass.
    std::vector<int> parent(n);
    for (int r = 0; r < n; ++r) parent[r] = r;
    auto find = [&](int r) {
      while (parent[r] != r) r = parent[r] = parent[parent[r]];
      return r;
    };
    bool merged = false;
    for (int r = 0; r < n; ++r) {
      if (area[r] >= min_region_px) continue;
      double best = std::numeric_limits<double>::infinity();
      int best_s = -1;
      for (int s = 0; s < n; ++s) {
        if (s == r || !adj[r][s]) continue;
        double d = 0;
        for (int c = 0; c < 3; ++c) {
          const double dc = mean[r][c] - mean[s][c];
          d += dc * dc;
        }
        if (d < best) {
          best = d;
          best_s = s;
        }
      }
      if (best_s >= 0 && find(r) != find(best_s)) {
        parent[find(r)] = find(best_s);
        merged = true;
      }
    }
    if (!merged) break;
    for (int& l : lm.labels) l = find(l - 1) + 1;
    detail::compact_labels(lm);
  }
  return lm;
}

/// Full segmentation pipeline: quantize, label connected components, merge
/// undersized regions.
inline LabelMap segment(const RasterImage& img, const SegmentationParams& params) {
  const RasterImage quantized = quantize_colors(img, params);
  LabelMap lm = label_connected_components(quantized, params.connectivity);
  return merge_small_regions(lm, quantized, params.min_region_px, params.connectivity);
}

/// Text form: header "ARSRG-LM 1", then width height num_regions, then
/// row-major labels as ASCII integers.
inline std::string serialize_label_map(const LabelMap& lm) {
  std::ostringstream out;
  out << "ARSRG-LM 1\n" << lm.width << " " << lm.height << " " << lm.num_regions << "\n";
  for (int y = 0; y < lm.height; ++y) {
    for (int x = 0; x < lm.width; ++x) {
      if (x) out << " ";
      out << lm.at(x, y);
    }
    out << "\n";
  }
  return out.str();
}

inline LabelMap deserialize_label_map(const std::string& text) {
  std::istringstream in(text);
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (tag != "ARSRG-LM" || version != 1) throw FormatError("label map: bad header");
  LabelMap lm;
  in >> lm.width >> lm.height >> lm.num_regions;
  if (!in || lm.width < 1 || lm.height < 1) throw FormatError("label map: bad dimensions");
  lm.labels.resize(static_cast<std::size_t>(lm.width) * lm.height);
  for (int& l : lm.labels) {
    if (!(in >> l) || l < 1 || l > lm.num_regions) throw FormatError("label map: bad label value");
  }
  return lm;
}

}  // namespace arsrg
