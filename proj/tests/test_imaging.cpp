#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"

using namespace arsrg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("arsrg_img_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("load_image decodes a minimal PGM") {
  TempDir tmp;
  {
    std::ofstream f(tmp.file("t.pgm"), std::ios::binary);
    f << "P5\n2 2\n255\n";
    const unsigned char bytes[4] = {0, 255, 255, 0};
    f.write(reinterpret_cast<const char*>(bytes), 4);
  }
  const RasterImage img = load_image(tmp.file("t.pgm"));
  CHECK(img.width == 2);
  CHECK(img.height == 2);
  CHECK(img.channels == 1);
  CHECK(img.pixels == std::vector<std::uint8_t>{0, 255, 255, 0});
}

TEST_CASE("PNG round-trip preserves a 3-channel image") {
  TempDir tmp;
  const RasterImage original = testutil::quadrant_image(150, 150);
  save_png(original, tmp.file("q.png"));
  const RasterImage loaded = load_image(tmp.file("q.png"));
  CHECK(loaded.channels == 3);
  CHECK(loaded == original);
}

TEST_CASE("grayscale PNG loads with one channel") {
  TempDir tmp;
  save_png(testutil::blob_image(32, 32, 16, 16, 4), tmp.file("g.png"));
  CHECK(load_image(tmp.file("g.png")).channels == 1);
}

TEST_CASE("truncated PNG raises FormatError") {
  TempDir tmp;
  save_png(testutil::quadrant_image(64, 64), tmp.file("q.png"));
  const auto size = fs::file_size(tmp.file("q.png"));
  fs::resize_file(tmp.file("q.png"), size / 2);
  CHECK_THROWS_AS(load_image(tmp.file("q.png")), FormatError);
}

TEST_CASE("missing file raises IoError") {
  CHECK_THROWS_AS(load_image("/nonexistent/nowhere.png"), IoError);
}

TEST_CASE("PPM round-trip") {
  TempDir tmp;
  const RasterImage original = testutil::quadrant_image(31, 17);
  save_pnm(original, tmp.file("q.ppm"));
  CHECK(load_image(tmp.file("q.ppm")) == original);
}

TEST_CASE("resize is the identity at matching dimensions") {
  const RasterImage img = testutil::quadrant_image(150, 150);
  CHECK(resize_image(img, 150, 150) == img);
}

TEST_CASE("resize keeps constant images constant") {
  const RasterImage img = testutil::constant_image(2, 2, 1, 7);
  const RasterImage out = resize_image(img, 4, 4);
  REQUIRE(out.width == 4);
  REQUIRE(out.height == 4);
  for (std::uint8_t v : out.pixels) CHECK(v == 7);
}

TEST_CASE("resize reaches the requested dimensions") {
  const RasterImage out = resize_image(testutil::quadrant_image(300, 300), 150, 150);
  CHECK(out.width == 150);
  CHECK(out.height == 150);
}

TEST_CASE("resize is idempotent at fixed target dimensions") {
  const RasterImage img = testutil::shape_image(3, 90);
  const RasterImage once = resize_image(img, 40, 64);
  CHECK(resize_image(once, 40, 64) == once);
}

TEST_CASE("to_gray uses BT.601 luma") {
  RasterImage img = make_image(3, 1, 3);
  const std::uint8_t rgb[3][3] = {{255, 255, 255}, {0, 0, 0}, {100, 200, 50}};
  for (int x = 0; x < 3; ++x) {
    for (int c = 0; c < 3; ++c) img.at(x, 0, c) = rgb[x][c];
  }
  const RasterImage gray = to_gray(img);
  CHECK(gray.at(0, 0) == 255);
  CHECK(gray.at(1, 0) == 0);
  CHECK(gray.at(2, 0) == 153);  // round(29.9 + 117.4 + 5.7)
}

TEST_CASE("to_gray is idempotent") {
  const RasterImage img = testutil::quadrant_image(20, 20);
  const RasterImage once = to_gray(img);
  CHECK(to_gray(once) == once);
}
