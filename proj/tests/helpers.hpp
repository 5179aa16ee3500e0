#pragma once

// Shared fixtures and independent oracles for the test suites. Oracles here
// must stay independent of the implementation paths they check.

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <vector>

#include "arsrg/arsrg.hpp"

namespace testutil {

using arsrg::LabelMap;
using arsrg::RasterImage;

// ---- fixtures -------------------------------------------------------------

/// Four solid-color quadrants (RGB).
inline RasterImage quadrant_image(int w, int h) {
  RasterImage img = arsrg::make_image(w, h, 3);
  static const std::uint8_t colors[4][3] = {
      {255, 0, 0}, {0, 255, 0}, {0, 0, 255}, {255, 255, 0}};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int q = (y >= h / 2) * 2 + (x >= w / 2);
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = colors[q][c];
    }
  }
  return img;
}

inline RasterImage constant_image(int w, int h, int channels, std::uint8_t v) {
  return arsrg::RasterImage{w, h, channels,
                            std::vector<std::uint8_t>(
                                static_cast<std::size_t>(w) * h * channels, v)};
}

/// Grayscale Gaussian blob centered at (cx, cy).
inline RasterImage blob_image(int w, int h, double cx, double cy, double sigma,
                              std::uint8_t background = 20, std::uint8_t peak = 235) {
  RasterImage img = arsrg::make_image(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
      const double v = background + (peak - background) * std::exp(-0.5 * d2 / (sigma * sigma));
      img.at(x, y) = static_cast<std::uint8_t>(std::lround(v));
    }
  }
  return img;
}

/// Clockwise 90-degree rotation: (x, y) -> (h - 1 - y, x).
inline RasterImage rotate90(const RasterImage& img) {
  RasterImage out = arsrg::make_image(img.height, img.width, img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        out.at(img.height - 1 - y, x, c) = img.at(x, y, c);
      }
    }
  }
  return out;
}

inline LabelMap rotate90(const LabelMap& lm) {
  LabelMap out{lm.height, lm.width, lm.num_regions,
               std::vector<int>(lm.labels.size(), 0)};
  for (int y = 0; y < lm.height; ++y) {
    for (int x = 0; x < lm.width; ++x) out.at(lm.height - 1 - y, x) = lm.at(x, y);
  }
  return out;
}

inline RasterImage random_quantized_image(std::mt19937_64& rng, int w, int h, int ncolors) {
  RasterImage img = arsrg::make_image(w, h, 3);
  std::uniform_int_distribution<int> color(0, ncolors - 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int c = color(rng);
      img.at(x, y, 0) = static_cast<std::uint8_t>(40 * c);
      img.at(x, y, 1) = static_cast<std::uint8_t>(255 - 40 * c);
      img.at(x, y, 2) = static_cast<std::uint8_t>(17 * c);
    }
  }
  return img;
}

/// Distinct colored shapes on a uniform background: a few large discs and
/// rectangles (segmentation regions) plus a dense scatter of small dots whose
/// neighborhoods give keypoints discriminative context. Layout and colors are
/// a deterministic function of the index.
inline RasterImage shape_image(int index, int size = 128) {
  std::mt19937_64 rng(0xC0FFEEu + static_cast<std::uint64_t>(index) * 7919);
  std::uniform_int_distribution<int> channel(30, 225);
  const std::uint8_t bg[3] = {static_cast<std::uint8_t>(channel(rng)),
                              static_cast<std::uint8_t>(channel(rng)),
                              static_cast<std::uint8_t>(channel(rng))};
  RasterImage img = arsrg::make_image(size, size, 3);
  for (int i = 0; i < size * size; ++i) {
    img.pixels[i * 3] = bg[0];
    img.pixels[i * 3 + 1] = bg[1];
    img.pixels[i * 3 + 2] = bg[2];
  }
  auto gray = [](const std::uint8_t c[3]) {
    return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2];
  };
  // require a luminance gap, not just an RGB gap: the keypoint detector only
  // sees the grayscale image
  auto pick_color = [&](std::uint8_t out[3]) {
    do {
      for (int c = 0; c < 3; ++c) out[c] = static_cast<std::uint8_t>(channel(rng));
    } while (std::abs(gray(out) - gray(bg)) < 45.0);
  };
  std::uniform_int_distribution<int> pos(14, size - 15);
  std::uniform_int_distribution<int> radius(6, 14);
  std::uniform_int_distribution<int> nshapes(4, 6);
  const int n = nshapes(rng);
  for (int s = 0; s < n; ++s) {
    std::uint8_t color[3];
    pick_color(color);
    const int cx = pos(rng), cy = pos(rng), r = radius(rng);
    const bool disc = (s % 2 == 0);
    for (int y = std::max(0, cy - r); y <= std::min(size - 1, cy + r); ++y) {
      for (int x = std::max(0, cx - r); x <= std::min(size - 1, cx + r); ++x) {
        const bool inside =
            disc ? ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) : true;
        if (inside) {
          for (int c = 0; c < 3; ++c) img.at(x, y, c) = color[c];
        }
      }
    }
  }
  // Dot-plus-satellite pairs: the satellite breaks rotational symmetry, so
  // every dot keypoint gets a well-defined orientation and a descriptor that
  // encodes the (per-image random) satellite direction.
  auto stamp_disc = [&](int cx, int cy, int r, const std::uint8_t color[3]) {
    for (int y = std::max(0, cy - r); y <= std::min(size - 1, cy + r); ++y) {
      for (int x = std::max(0, cx - r); x <= std::min(size - 1, cx + r); ++x) {
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) {
          for (int c = 0; c < 3; ++c) img.at(x, y, c) = color[c];
        }
      }
    }
  };
  std::uniform_int_distribution<int> dot_radius(2, 4);
  std::uniform_int_distribution<int> ndots(14, 18);
  std::uniform_real_distribution<double> angle(0.0, 6.283185307179586);
  const int nd = ndots(rng);
  for (int s = 0; s < nd; ++s) {
    std::uint8_t color[3], satellite[3];
    pick_color(color);
    pick_color(satellite);
    const int cx = pos(rng), cy = pos(rng), r = dot_radius(rng);
    stamp_disc(cx, cy, r, color);
    const double a = angle(rng);
    const double dist = r + 4.0;
    stamp_disc(cx + static_cast<int>(std::lround(dist * std::cos(a))),
               cy + static_cast<int>(std::lround(dist * std::sin(a))),
               std::max(1, r - 1), satellite);
  }
  return img;
}

// ---- oracles --------------------------------------------------------------

/// Independent connected-components oracle: plain BFS flood fill with a
/// visited raster and std::queue.
inline LabelMap bfs_label_oracle(const RasterImage& img, int connectivity) {
  LabelMap lm{img.width, img.height, 0,
              std::vector<int>(static_cast<std::size_t>(img.width) * img.height, 0)};
  auto same = [&](int a, int b) {
    for (int c = 0; c < img.channels; ++c) {
      if (img.pixels[a * img.channels + c] != img.pixels[b * img.channels + c]) return false;
    }
    return true;
  };
  for (int start = 0; start < img.width * img.height; ++start) {
    if (lm.labels[start] != 0) continue;
    const int label = ++lm.num_regions;
    std::queue<int> frontier;
    frontier.push(start);
    lm.labels[start] = label;
    while (!frontier.empty()) {
      const int p = frontier.front();
      frontier.pop();
      const int px = p % img.width, py = p / img.width;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          if (connectivity == 4 && dx != 0 && dy != 0) continue;
          const int nx = px + dx, ny = py + dy;
          if (nx < 0 || ny < 0 || nx >= img.width || ny >= img.height) continue;
          const int q = ny * img.width + nx;
          if (lm.labels[q] == 0 && same(p, q)) {
            lm.labels[q] = label;
            frontier.push(q);
          }
        }
      }
    }
  }
  return lm;
}

/// True when two labelings induce the same pixel partition (labels may be
/// renamed but the grouping must match bijectively).
inline bool same_partition(const LabelMap& a, const LabelMap& b) {
  if (a.width != b.width || a.height != b.height) return false;
  if (a.num_regions != b.num_regions) return false;
  std::map<int, int> fwd, bwd;
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    const int la = a.labels[i], lb = b.labels[i];
    auto [fit, finserted] = fwd.emplace(la, lb);
    if (!finserted && fit->second != lb) return false;
    auto [bit, binserted] = bwd.emplace(lb, la);
    if (!binserted && bit->second != la) return false;
  }
  return true;
}

// ---- synthetic graphs -----------------------------------------------------

inline arsrg::Keypoint make_keypoint(double x, double y, std::size_t hot_dim = 0,
                                     double scale = 2.0) {
  arsrg::Keypoint kp;
  kp.x = x;
  kp.y = y;
  kp.scale = scale;
  kp.orientation = 0;
  kp.descriptor[hot_dim % 128] = 1.0f;
  return kp;
}

inline arsrg::Keypoint random_keypoint(std::mt19937_64& rng, double max_x, double max_y) {
  std::uniform_real_distribution<double> ux(0.0, max_x), uy(0.0, max_y);
  std::uniform_real_distribution<float> ud(0.f, 1.f);
  arsrg::Keypoint kp;
  kp.x = ux(rng);
  kp.y = uy(rng);
  kp.scale = 2.0;
  kp.orientation = 0;
  double n2 = 0;
  for (float& d : kp.descriptor) {
    d = ud(rng);
    n2 += static_cast<double>(d) * d;
  }
  const float inv = static_cast<float>(1.0 / std::sqrt(n2));
  for (float& d : kp.descriptor) d *= inv;
  return kp;
}

/// An ARSRG over a two-stripe label map with the given keypoints, bypassing
/// the detector. Keypoints land in the top or bottom stripe by position.
inline arsrg::Arsrg synthetic_arsrg(const std::string& id, std::vector<arsrg::Keypoint> kps,
                                    int w = 100, int h = 100,
                                    arsrg::LeafConfig config = arsrg::LeafConfig::RegionBased,
                                    double tau = 0) {
  LabelMap lm{w, h, 2, std::vector<int>(static_cast<std::size_t>(w) * h)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) lm.at(x, y) = (y < h / 2) ? 1 : 2;
  }
  const arsrg::RegionGraph rg = arsrg::build_rag(lm);
  return arsrg::build_arsrg(id, lm, rg, std::move(kps), config, tau);
}

}  // namespace testutil
