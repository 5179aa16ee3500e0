#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "arsrg/errors.hpp"
#include "arsrg/image.hpp"

namespace arsrg {

/// Scale-space keypoint with a 128-dimensional gradient-histogram descriptor.
/// Coordinates are sub-pixel positions in the source image; the descriptor is
/// L2-normalized (or all-zero for degenerate patches).
struct Keypoint {
  double x = 0;
  double y = 0;
  double scale = 0;
  double orientation = 0;  // radians in [0, 2pi)
  std::array<float, 128> descriptor{};
};

namespace detail {

struct FloatImage {
  int w = 0;
  int h = 0;
  std::vector<float> v;

  FloatImage() = default;
  FloatImage(int w_, int h_) : w(w_), h(h_), v(static_cast<std::size_t>(w_) * h_, 0.f) {}
  float at(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
  float& at(int x, int y) { return v[static_cast<std::size_t>(y) * w + x]; }
};

inline int reflect101(int i, int n) {
  // mirror without repeating the border sample
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

inline FloatImage gaussian_blur(const FloatImage& src, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<double> kernel(static_cast<std::size_t>(radius) + 1);
  double sum = 0;
  for (int i = 0; i <= radius; ++i) {
    kernel[i] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += (i == 0) ? kernel[i] : 2 * kernel[i];
  }
  for (double& k : kernel) k /= sum;

  FloatImage tmp(src.w, src.h), dst(src.w, src.h);
  for (int y = 0; y < src.h; ++y) {
    for (int x = 0; x < src.w; ++x) {
      double acc = kernel[0] * src.at(x, y);
      for (int i = 1; i <= radius; ++i) {
        acc += kernel[i] * (src.at(reflect101(x - i, src.w), y) +
                            src.at(reflect101(x + i, src.w), y));
      }
      tmp.at(x, y) = static_cast<float>(acc);
    }
  }
  for (int y = 0; y < src.h; ++y) {
    for (int x = 0; x < src.w; ++x) {
      double acc = kernel[0] * tmp.at(x, y);
      for (int i = 1; i <= radius; ++i) {
        acc += kernel[i] * (tmp.at(x, reflect101(y - i, src.h)) +
                            tmp.at(x, reflect101(y + i, src.h)));
      }
      dst.at(x, y) = static_cast<float>(acc);
    }
  }
  return dst;
}

inline FloatImage downsample2(const FloatImage& src) {
  FloatImage dst(std::max(1, src.w / 2), std::max(1, src.h / 2));
  for (int y = 0; y < dst.h; ++y) {
    for (int x = 0; x < dst.w; ++x) dst.at(x, y) = src.at(2 * x, 2 * y);
  }
  return dst;
}

// Fixed detector geometry: 3 octaves, 3 scales per octave.
constexpr int kOctaves = 3;
constexpr int kScalesPerOctave = 3;
constexpr int kGaussLevels = kScalesPerOctave + 3;
constexpr double kSigma0 = 1.6;
constexpr double kInitialBlur = 0.5;
constexpr double kContrastThreshold = 0.03;
constexpr double kEdgeRatio = 10.0;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Pyramid {
  // gauss[o][l], dog[o][l]
  std::vector<std::array<FloatImage, kGaussLevels>> gauss;
  std::vector<std::array<FloatImage, kGaussLevels - 1>> dog;
};

inline Pyramid build_pyramid(const FloatImage& base) {
  Pyramid p;
  p.gauss.resize(kOctaves);
  p.dog.resize(kOctaves);
  const double k = std::pow(2.0, 1.0 / kScalesPerOctave);
  FloatImage current =
      gaussian_blur(base, std::sqrt(kSigma0 * kSigma0 - kInitialBlur * kInitialBlur));
  for (int o = 0; o < kOctaves; ++o) {
    p.gauss[o][0] = current;
    double sigma_prev = kSigma0;
    for (int l = 1; l < kGaussLevels; ++l) {
      const double sigma_total = kSigma0 * std::pow(k, l);
      const double sigma_inc = std::sqrt(sigma_total * sigma_total - sigma_prev * sigma_prev);
      p.gauss[o][l] = gaussian_blur(p.gauss[o][l - 1], sigma_inc);
      sigma_prev = sigma_total;
    }
    for (int l = 0; l < kGaussLevels - 1; ++l) {
      const FloatImage& a = p.gauss[o][l];
      const FloatImage& b = p.gauss[o][l + 1];
      FloatImage d(a.w, a.h);
      for (std::size_t i = 0; i < d.v.size(); ++i) d.v[i] = b.v[i] - a.v[i];
      p.dog[o][l] = std::move(d);
    }
    if (o + 1 < kOctaves) {
      // next octave seeds from the level with twice the base blur
      current = downsample2(p.gauss[o][kScalesPerOctave]);
    }
  }
  return p;
}

inline bool is_extremum(const std::array<FloatImage, kGaussLevels - 1>& dog, int l, int x, int y) {
  const float v = dog[l].at(x, y);
  if (std::abs(v) < 0.5f * static_cast<float>(kContrastThreshold)) return false;
  for (int dl = -1; dl <= 1; ++dl) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dl == 0 && dy == 0 && dx == 0) continue;
        const float n = dog[l + dl].at(x + dx, y + dy);
        if (v > 0 && n >= v) return false;
        if (v < 0 && n <= v) return false;
      }
    }
  }
  return v != 0.f;
}

struct RefinedExtremum {
  double x, y, layer;  // octave-local coordinates, fractional layer
  double contrast;
  bool ok;
};

/// Quadratic interpolation of the DoG extremum in (x, y, scale); rejects low
/// contrast and edge-like responses.
inline RefinedExtremum refine_extremum(const std::array<FloatImage, kGaussLevels - 1>& dog,
                                       int l, int x, int y) {
  double ox = 0, oy = 0, ol = 0;
  for (int attempt = 0; attempt < 5; ++attempt) {
    const FloatImage& d0 = dog[l - 1];
    const FloatImage& d1 = dog[l];
    const FloatImage& d2 = dog[l + 1];
    const double gx = 0.5 * (d1.at(x + 1, y) - d1.at(x - 1, y));
    const double gy = 0.5 * (d1.at(x, y + 1) - d1.at(x, y - 1));
    const double gl = 0.5 * (d2.at(x, y) - d0.at(x, y));
    const double v = d1.at(x, y);
    const double hxx = d1.at(x + 1, y) + d1.at(x - 1, y) - 2 * v;
    const double hyy = d1.at(x, y + 1) + d1.at(x, y - 1) - 2 * v;
    const double hll = d2.at(x, y) + d0.at(x, y) - 2 * v;
    const double hxy = 0.25 * (d1.at(x + 1, y + 1) - d1.at(x - 1, y + 1) -
                               d1.at(x + 1, y - 1) + d1.at(x - 1, y - 1));
    const double hxl = 0.25 * (d2.at(x + 1, y) - d2.at(x - 1, y) -
                               d0.at(x + 1, y) + d0.at(x - 1, y));
    const double hyl = 0.25 * (d2.at(x, y + 1) - d2.at(x, y - 1) -
                               d0.at(x, y + 1) + d0.at(x, y - 1));

    // Solve H * offset = -g by Cramer's rule on the 3x3 Hessian.
    const double det = hxx * (hyy * hll - hyl * hyl) - hxy * (hxy * hll - hyl * hxl) +
                       hxl * (hxy * hyl - hyy * hxl);
    if (std::abs(det) < 1e-12) return {0, 0, 0, 0, false};
    ox = -(gx * (hyy * hll - hyl * hyl) - gy * (hxy * hll - hxl * hyl) +
           gl * (hxy * hyl - hxl * hyy)) / det;
    oy = -(-gx * (hxy * hll - hyl * hxl) + gy * (hxx * hll - hxl * hxl) -
           gl * (hxx * hyl - hxy * hxl)) / det;
    ol = -(gx * (hxy * hyl - hyy * hxl) - gy * (hxx * hyl - hxy * hxl) +
           gl * (hxx * hyy - hxy * hxy)) / det;
    if (std::abs(ox) < 0.5 && std::abs(oy) < 0.5 && std::abs(ol) < 0.5) {
      const double contrast = v + 0.5 * (gx * ox + gy * oy + gl * ol);
      if (std::abs(contrast) < kContrastThreshold) return {0, 0, 0, 0, false};
      // edge response on the spatial Hessian
      const double tr = hxx + hyy;
      const double det2 = hxx * hyy - hxy * hxy;
      if (det2 <= 0) return {0, 0, 0, 0, false};
      const double r1 = kEdgeRatio + 1;
      if (tr * tr * kEdgeRatio >= r1 * r1 * det2) return {0, 0, 0, 0, false};
      return {x + ox, y + oy, l + ol, contrast, true};
    }
    x += static_cast<int>(std::lround(std::clamp(ox, -1.0, 1.0)));
    y += static_cast<int>(std::lround(std::clamp(oy, -1.0, 1.0)));
    l += static_cast<int>(std::lround(std::clamp(ol, -1.0, 1.0)));
    if (l < 1 || l > kScalesPerOctave || x < 1 || y < 1 || x >= d1.w - 1 || y >= d1.h - 1) {
      return {0, 0, 0, 0, false};
    }
  }
  return {0, 0, 0, 0, false};
}

/// Dominant orientations from a 36-bin gradient histogram around (x, y);
/// returns peaks at >= 80% of the maximum, parabolic-interpolated.
inline std::vector<double> dominant_orientations(const FloatImage& img, double x, double y,
                                                 double sigma_oct) {
  constexpr int kBins = 36;
  const double win_sigma = 1.5 * sigma_oct;
  const int radius = std::max(1, static_cast<int>(std::lround(3.0 * win_sigma)));
  std::array<double, kBins> hist{};
  const int cx = static_cast<int>(std::lround(x));
  const int cy = static_cast<int>(std::lround(y));
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const int px = cx + dx, py = cy + dy;
      if (px < 1 || py < 1 || px >= img.w - 1 || py >= img.h - 1) continue;
      const double gx = img.at(px + 1, py) - img.at(px - 1, py);
      const double gy = img.at(px, py + 1) - img.at(px, py - 1);
      const double mag = std::sqrt(gx * gx + gy * gy);
      if (mag == 0) continue;
      const double angle = std::atan2(gy, gx);  // (-pi, pi]
      const double w = std::exp(-0.5 * (dx * dx + dy * dy) / (win_sigma * win_sigma));
      int bin = static_cast<int>(std::floor((angle + std::numbers::pi) / kTwoPi * kBins));
      bin = std::clamp(bin, 0, kBins - 1);
      hist[bin] += w * mag;
    }
  }
  // two passes of [1 1 1]/3 smoothing, circular
  for (int pass = 0; pass < 2; ++pass) {
    std::array<double, kBins> s{};
    for (int i = 0; i < kBins; ++i) {
      s[i] = (hist[(i + kBins - 1) % kBins] + hist[i] + hist[(i + 1) % kBins]) / 3.0;
    }
    hist = s;
  }
  const double peak = *std::max_element(hist.begin(), hist.end());
  std::vector<double> result;
  if (peak <= 0) return result;
  for (int i = 0; i < kBins; ++i) {
    const double l = hist[(i + kBins - 1) % kBins];
    const double c = hist[i];
    const double r = hist[(i + 1) % kBins];
    if (c >= 0.8 * peak && c > l && c > r) {
      const double denom = l - 2 * c + r;
      const double offset = (denom != 0) ? 0.5 * (l - r) / denom : 0.0;
      double angle = (i + 0.5 + offset) / kBins * kTwoPi - std::numbers::pi;
      angle = std::fmod(angle + kTwoPi, kTwoPi);
      result.push_back(angle);
    }
  }
  return result;
}

/// 4x4 spatial grid x 8 orientation bins with trilinear interpolation,
/// clamped at 0.2 and renormalized to unit L2.
inline std::array<float, 128> compute_descriptor(const FloatImage& img, double x, double y,
                                                 double sigma_oct, double orientation) {
  constexpr int kGrid = 4;
  constexpr int kOri = 8;
  const double hist_width = 3.0 * sigma_oct;
  const double cos_t = std::cos(-orientation);
  const double sin_t = std::sin(-orientation);
  const int radius = static_cast<int>(
      std::lround(hist_width * std::numbers::sqrt2 * (kGrid + 1) * 0.5));
  // (kGrid+2)^2 bins with a guard ring for interpolation spill
  std::array<double, (kGrid + 2) * (kGrid + 2) * kOri> hist{};
  const int cx = static_cast<int>(std::lround(x));
  const int cy = static_cast<int>(std::lround(y));
  const double exp_denom = 0.5 * kGrid * kGrid * hist_width * hist_width;

  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const int px = cx + dx, py = cy + dy;
      if (px < 1 || py < 1 || px >= img.w - 1 || py >= img.h - 1) continue;
      // rotate into the keypoint frame
      const double rx = (cos_t * dx - sin_t * dy) / hist_width;
      const double ry = (sin_t * dx + cos_t * dy) / hist_width;
      const double cbin = rx + kGrid / 2.0 - 0.5;
      const double rbin = ry + kGrid / 2.0 - 0.5;
      if (cbin <= -1 || cbin >= kGrid || rbin <= -1 || rbin >= kGrid) continue;
      const double gx = img.at(px + 1, py) - img.at(px - 1, py);
      const double gy = img.at(px, py + 1) - img.at(px, py - 1);
      const double mag = std::sqrt(gx * gx + gy * gy);
      if (mag == 0) continue;
      double angle = std::atan2(gy, gx) - orientation;
      angle = std::fmod(angle + 2 * kTwoPi, kTwoPi);
      const double obin = angle / kTwoPi * kOri;
      const double w = std::exp(-(rx * rx + ry * ry) * hist_width * hist_width / exp_denom) * mag;

      const int r0 = static_cast<int>(std::floor(rbin));
      const int c0 = static_cast<int>(std::floor(cbin));
      const int o0 = static_cast<int>(std::floor(obin));
      const double fr = rbin - r0, fc = cbin - c0, fo = obin - o0;
      for (int ir = 0; ir <= 1; ++ir) {
        const int rb = r0 + ir + 1;
        if (rb < 0 || rb >= kGrid + 2) continue;
        const double wr = w * (ir ? fr : 1 - fr);
        for (int ic = 0; ic <= 1; ++ic) {
          const int cb = c0 + ic + 1;
          if (cb < 0 || cb >= kGrid + 2) continue;
          const double wc = wr * (ic ? fc : 1 - fc);
          for (int io = 0; io <= 1; ++io) {
            const int ob = (o0 + io) % kOri;
            hist[(rb * (kGrid + 2) + cb) * kOri + ob] += wc * (io ? fo : 1 - fo);
          }
        }
      }
    }
  }

  std::array<float, 128> desc{};
  int idx = 0;
  for (int r = 1; r <= kGrid; ++r) {
    for (int c = 1; c <= kGrid; ++c) {
      for (int o = 0; o < kOri; ++o) {
        desc[idx++] = static_cast<float>(hist[(r * (kGrid + 2) + c) * kOri + o]);
      }
    }
  }
  auto normalize = [&desc]() {
    double n2 = 0;
    for (float d : desc) n2 += static_cast<double>(d) * d;
    if (n2 <= 0) return false;
    const float inv = static_cast<float>(1.0 / std::sqrt(n2));
    for (float& d : desc) d *= inv;
    return true;
  };
  if (normalize()) {
    for (float& d : desc) d = std::min(d, 0.2f);
    normalize();
  }
  return desc;
}

}  // namespace detail

/// DoG keypoint detection plus descriptor extraction. Deterministic: identical
/// input bytes yield an identical keypoint list (sorted by position, scale,
/// orientation).
inline std::vector<Keypoint> detect_and_describe(const RasterImage& input) {
  if (std::min(input.width, input.height) < 16) {
    throw DataError("detect_and_describe: image too small (min dimension 16)");
  }
  const RasterImage gray = to_gray(input);
  detail::FloatImage base(gray.width, gray.height);
  for (std::size_t i = 0; i < base.v.size(); ++i) base.v[i] = gray.pixels[i] / 255.f;

  const detail::Pyramid pyr = detail::build_pyramid(base);
  std::vector<Keypoint> keypoints;
  for (int o = 0; o < detail::kOctaves; ++o) {
    const double octave_scale = std::pow(2.0, o);
    for (int l = 1; l <= detail::kScalesPerOctave; ++l) {
      const detail::FloatImage& d = pyr.dog[o][l];
      for (int y = 1; y < d.h - 1; ++y) {
        for (int x = 1; x < d.w - 1; ++x) {
          if (!detail::is_extremum(pyr.dog[o], l, x, y)) continue;
          const auto ref = detail::refine_extremum(pyr.dog[o], l, x, y);
          if (!ref.ok) continue;
          const double sigma_oct =
              detail::kSigma0 * std::pow(2.0, ref.layer / detail::kScalesPerOctave);
          const int gl = std::clamp(static_cast<int>(std::lround(ref.layer)), 0,
                                    detail::kGaussLevels - 1);
          const detail::FloatImage& gimg = pyr.gauss[o][gl];
          const double ix = ref.x * octave_scale;
          const double iy = ref.y * octave_scale;
          if (ix < 0 || iy < 0 || ix >= input.width || iy >= input.height) continue;
          for (double angle : detail::dominant_orientations(gimg, ref.x, ref.y, sigma_oct)) {
            Keypoint kp;
            kp.x = ix;
            kp.y = iy;
            kp.scale = sigma_oct * octave_scale;
            kp.orientation = angle;
            kp.descriptor = detail::compute_descriptor(gimg, ref.x, ref.y, sigma_oct, angle);
            keypoints.push_back(kp);
          }
        }
      }
    }
  }
  std::sort(keypoints.begin(), keypoints.end(), [](const Keypoint& a, const Keypoint& b) {
    if (a.y != b.y) return a.y < b.y;
    if (a.x != b.x) return a.x < b.x;
    if (a.scale != b.scale) return a.scale < b.scale;
    return a.orientation < b.orientation;
  });
  return keypoints;
}

/// ARSRG-KP text format: "ARSRG-KP 1", count N, then N rows of
/// "x y scale orientation d0 ... d127".
inline void save_keypoints(const std::vector<Keypoint>& kps, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << "ARSRG-KP 1\n" << kps.size() << "\n";
  char buf[160];
  for (const Keypoint& kp : kps) {
    std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f %.6f", kp.x, kp.y, kp.scale, kp.orientation);
    out << buf;
    for (float d : kp.descriptor) {
      std::snprintf(buf, sizeof(buf), " %.6f", d);
      out << buf;
    }
    out << "\n";
  }
  if (!out) throw IoError(path + ": write failed");
}

inline std::vector<Keypoint> load_keypoints(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open");
  std::string header;
  std::getline(in, header);
  if (header != "ARSRG-KP 1") throw FormatError(path + ": bad header");
  std::size_t count = 0;
  std::string line;
  if (!std::getline(in, line) || std::sscanf(line.c_str(), "%zu", &count) != 1) {
    throw FormatError(path + ": bad keypoint count");
  }
  std::vector<Keypoint> kps;
  kps.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw FormatError(path + ": truncated keypoint list");
    std::istringstream row(line);
    Keypoint kp;
    if (!(row >> kp.x >> kp.y >> kp.scale >> kp.orientation)) {
      throw FormatError(path + ": malformed keypoint row");
    }
    double n2 = 0;
    for (int d = 0; d < 128; ++d) {
      double v;
      if (!(row >> v)) throw FormatError(path + ": descriptor must have 128 values");
      if (v < 0 || v > 1) throw FormatError(path + ": descriptor value out of [0,1]");
      kp.descriptor[d] = static_cast<float>(v);
      n2 += v * v;
    }
    double extra;
    if (row >> extra) throw FormatError(path + ": too many columns");
    if (kp.scale <= 0) throw FormatError(path + ": scale must be positive");
    if (kp.orientation < 0 || kp.orientation >= detail::kTwoPi) {
      throw FormatError(path + ": orientation out of [0, 2pi)");
    }
    const double norm = std::sqrt(n2);
    if (norm != 0) {
      if (std::abs(norm - 1.0) > 0.01) {
        throw FormatError(path + ": descriptor norm more than 1% off unit");
      }
      for (float& d : kp.descriptor) d = static_cast<float>(d / norm);
    }
    kps.push_back(kp);
  }
  return kps;
}

}  // namespace arsrg
