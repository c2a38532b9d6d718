// Writes the grayscale PNG fixture set used by the image-loader tests,
// together with expected.csv holding the loader's expected output
// (ink convention: value = 1 - gray/255) for every image at side 8.

#include <png.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "boml/metrics.hpp"

namespace fs = std::filesystem;

namespace {

void write_gray_png(const std::string& path, int width, int height,
                    const std::vector<unsigned char>& pixels) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (fp == nullptr) {
    std::perror(path.c_str());
    std::exit(1);
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) std::exit(1);
  png_init_io(png, fp);
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(height);
  for (int r = 0; r < height; ++r)
    rows[r] = const_cast<png_bytep>(pixels.data() + static_cast<std::size_t>(r) * width);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

struct Fixture {
  std::string cls;
  std::string file;
  int width, height;
  std::vector<unsigned char> pixels;
};

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: make_png_fixtures <out_root>\n");
    return 1;
  }
  const std::string root = argv[1];
  const int side = 8;

  std::vector<Fixture> fixtures;
  auto uniform = [&](const std::string& cls, const std::string& file, int w, int h,
                     unsigned char g) {
    fixtures.push_back({cls, file, w, h, std::vector<unsigned char>(w * h, g)});
  };
  uniform("alpha", "gray064.png", side, side, 64);
  uniform("alpha", "gray128.png", side, side, 128);
  {
    Fixture f{"alpha", "gradient.png", side, side, std::vector<unsigned char>(side * side)};
    for (int i = 0; i < side; ++i)
      for (int j = 0; j < side; ++j)
        f.pixels[i * side + j] = static_cast<unsigned char>((i * 31 + j * 17) % 256);
    fixtures.push_back(std::move(f));
  }
  uniform("beta", "gray200.png", side, side, 200);
  {
    // White background with a single black pixel.
    Fixture f{"beta", "one_black.png", side, side, std::vector<unsigned char>(side * side, 255)};
    f.pixels[2 * side + 3] = 0;
    fixtures.push_back(std::move(f));
  }
  {
    Fixture f{"beta", "checker.png", side, side, std::vector<unsigned char>(side * side)};
    for (int i = 0; i < side; ++i)
      for (int j = 0; j < side; ++j) f.pixels[i * side + j] = ((i + j) % 2) ? 255 : 0;
    fixtures.push_back(std::move(f));
  }
  // One double-size uniform image to exercise the resize path (bilinear
  // of a constant image is the same constant).
  uniform("beta", "large_gray050.png", 2 * side, 2 * side, 50);

  std::ofstream expect(root + "/expected.csv", std::ios::trunc);
  expect << "class,file";
  for (int i = 0; i < side * side; ++i) expect << ",p" << i;
  expect << "\n";

  for (const auto& f : fixtures) {
    fs::create_directories(fs::path(root) / f.cls);
    write_gray_png((fs::path(root) / f.cls / f.file).string(), f.width, f.height, f.pixels);
    expect << f.cls << ',' << f.file;
    // Expected loader output at side 8: identity for same-size images,
    // constant for the uniform double-size one.
    for (int i = 0; i < side; ++i)
      for (int j = 0; j < side; ++j) {
        const unsigned char g =
            f.width == side ? f.pixels[i * side + j] : f.pixels[0];
        expect << ',' << boml::format_double(1.0 - g / 255.0);
      }
    expect << "\n";
  }
  std::printf("wrote %zu fixtures under %s\n", fixtures.size(), root.c_str());
  return 0;
}
