#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <png.h>

#include "arsrg/errors.hpp"

namespace arsrg {

/// Row-major, channel-interleaved 8-bit raster. channels is 1 (gray) or 3 (RGB).
struct RasterImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(int x, int y, int c = 0) const {
    return pixels[static_cast<std::size_t>((y * width + x) * channels + c)];
  }
  std::uint8_t& at(int x, int y, int c = 0) {
    return pixels[static_cast<std::size_t>((y * width + x) * channels + c)];
  }

  bool operator==(const RasterImage&) const = default;
};

inline RasterImage make_image(int w, int h, int channels, std::uint8_t fill = 0) {
  if (w < 1 || h < 1 || (channels != 1 && channels != 3)) {
    throw DataError("make_image: bad dimensions");
  }
  return RasterImage{w, h, channels,
                     std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * channels, fill)};
}

namespace detail {

inline int pnm_next_int(std::istream& in) {
  // Skips whitespace and '#' comments between header tokens.
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
    } else if (!std::isspace(c)) {
      in.unget();
      break;
    }
  }
  int value;
  if (!(in >> value)) throw FormatError("PNM: malformed header");
  return value;
}

inline RasterImage load_pnm(std::istream& in, const std::string& path) {
  char p, n;
  in.get(p);
  in.get(n);
  if (p != 'P' || (n != '5' && n != '6')) throw FormatError(path + ": not a binary PGM/PPM");
  const int channels = (n == '5') ? 1 : 3;
  const int w = pnm_next_int(in);
  const int h = pnm_next_int(in);
  const int maxval = pnm_next_int(in);
  if (w < 1 || h < 1) throw FormatError(path + ": bad PNM dimensions");
  if (maxval != 255) throw FormatError(path + ": only maxval 255 supported");
  in.get();  // single whitespace byte before raster
  RasterImage img = make_image(w, h, channels);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (static_cast<std::size_t>(in.gcount()) != img.pixels.size()) {
    throw FormatError(path + ": truncated PNM raster");
  }
  return img;
}

inline RasterImage load_png(const std::string& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw FormatError(path + ": " + png.message);
  }
  const bool gray = (png.format & PNG_FORMAT_FLAG_COLOR) == 0;
  png.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  RasterImage img = make_image(static_cast<int>(png.width), static_cast<int>(png.height),
                               gray ? 1 : 3);
  if (!png_image_finish_read(&png, nullptr, img.pixels.data(), 0, nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    throw FormatError(path + ": " + msg);
  }
  return img;
}

}  // namespace detail

/// Decodes PNG, PGM (P5) or PPM (P6) by magic bytes.
inline RasterImage load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open");
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in) throw FormatError(path + ": file too short");
  in.seekg(0);
  if (magic[0] == 'P' && (magic[1] == '5' || magic[1] == '6')) {
    return detail::load_pnm(in, path);
  }
  if (static_cast<unsigned char>(magic[0]) == 0x89 && magic[1] == 'P') {
    in.close();
    return detail::load_png(path);
  }
  throw FormatError(path + ": unsupported format (want PNG, PGM or PPM)");
}

inline void save_pnm(const RasterImage& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << (img.channels == 1 ? "P5" : "P6") << "\n"
      << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw IoError(path + ": write failed");
}

inline void save_png(const RasterImage& img, const std::string& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width);
  png.height = static_cast<png_uint_32>(img.height);
  png.format = img.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.c_str(), 0, img.pixels.data(), 0, nullptr)) {
    throw IoError(path + ": " + png.message);
  }
}

/// Bilinear resampling with pixel-center alignment. Identity when the target
/// dimensions already match.
inline RasterImage resize_image(const RasterImage& img, int target_w, int target_h) {
  if (target_w < 1 || target_h < 1) throw DataError("resize_image: target must be >= 1x1");
  if (target_w == img.width && target_h == img.height) return img;
  RasterImage out = make_image(target_w, target_h, img.channels);
  const double sx = static_cast<double>(img.width) / target_w;
  const double sy = static_cast<double>(img.height) / target_h;
  for (int y = 0; y < target_h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(img.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < target_w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(img.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < img.channels; ++c) {
        const double v = (1 - wy) * ((1 - wx) * img.at(x0, y0, c) + wx * img.at(x1, y0, c)) +
                         wy * ((1 - wx) * img.at(x0, y1, c) + wx * img.at(x1, y1, c));
        out.at(x, y, c) = static_cast<std::uint8_t>(std::lround(v));
      }
    }
  }
  return out;
}

/// BT.601 luma. Identity on single-channel input.
inline RasterImage to_gray(const RasterImage& img) {
  if (img.channels == 1) return img;
  RasterImage out = make_image(img.width, img.height, 1);
  for (int i = 0; i < img.width * img.height; ++i) {
    const double v = 0.299 * img.pixels[i * 3] + 0.587 * img.pixels[i * 3 + 1] +
                     0.114 * img.pixels[i * 3 + 2];
    out.pixels[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(std::lround(v));
  }
  return out;
}

/// Promotes gray to three identical channels; RGB passes through.
inline RasterImage to_rgb(const RasterImage& img) {
  if (img.channels == 3) return img;
  RasterImage out = make_image(img.width, img.height, 3);
  for (int i = 0; i < img.width * img.height; ++i) {
    const std::uint8_t v = img.pixels[static_cast<std::size_t>(i)];
    out.pixels[static_cast<std::size_t>(i) * 3] = v;
    out.pixels[static_cast<std::size_t>(i) * 3 + 1] = v;
    out.pixels[static_cast<std::size_t>(i) * 3 + 2] = v;
  }
  return out;
}

}  // namespace arsrg
