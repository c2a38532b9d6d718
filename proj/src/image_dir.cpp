#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "boml/episodic.hpp"
#include "boml/errors.hpp"

namespace boml {

namespace {

namespace fs = std::filesystem;

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<unsigned char> pixels;  // row-major
};

GrayImage decode_png_gray(const std::string& path) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!fp) throw IngestionError("cannot open image file: " + path);

  png_byte header[8];
  if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8) != 0)
    throw IngestionError("not a PNG file: " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IngestionError("libpng initialization failed for: " + path);
  }
  GrayImage img;
  std::vector<png_bytep> row_ptrs;
  std::vector<unsigned char> rgb;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IngestionError("corrupt PNG data in: " + path);
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  // Normalize every input to 8-bit RGB, then collapse to gray.
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY &&
      png_get_bit_depth(png, info) < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
      png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  rgb.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  row_ptrs.resize(img.height);
  for (int r = 0; r < img.height; ++r)
    row_ptrs[r] = rgb.data() + static_cast<std::size_t>(r) * img.width * 3;
  png_read_image(png, row_ptrs.data());
  png_destroy_read_struct(&png, &info, nullptr);

  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const unsigned char r = rgb[3 * i], g = rgb[3 * i + 1], b = rgb[3 * i + 2];
    img.pixels[i] = (r == g && g == b)
                        ? r
                        : static_cast<unsigned char>(
                              std::lround(0.299 * r + 0.587 * g + 0.114 * b));
  }
  return img;
}

std::vector<double> resize_and_scale(const GrayImage& img, int side) {
  std::vector<double> out(static_cast<std::size_t>(side) * side);
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) {
      // Bilinear sample at pixel centers.
      const double y = std::clamp((i + 0.5) * img.height / side - 0.5, 0.0,
                                  static_cast<double>(img.height - 1));
      const double x = std::clamp((j + 0.5) * img.width / side - 0.5, 0.0,
                                  static_cast<double>(img.width - 1));
      const int y0 = static_cast<int>(y), x0 = static_cast<int>(x);
      const int y1 = std::min(y0 + 1, img.height - 1), x1 = std::min(x0 + 1, img.width - 1);
      const double fy = y - y0, fx = x - x0;
      auto px = [&](int r, int c) {
        return static_cast<double>(img.pixels[static_cast<std::size_t>(r) * img.width + c]);
      };
      const double v = (1 - fy) * ((1 - fx) * px(y0, x0) + fx * px(y0, x1)) +
                       fy * ((1 - fx) * px(y1, x0) + fx * px(y1, x1));
      // Ink convention: black (0) maps to 1.0, paper (255) to 0.0.
      out[static_cast<std::size_t>(i) * side + j] = 1.0 - v / 255.0;
    }
  }
  return out;
}

}  // namespace

DatasetSource load_image_dir(const std::string& root, int side, int base_count) {
  if (side < 1) throw InputError("load_image_dir: side must be >= 1");
  if (!fs::is_directory(root)) throw IngestionError("not a directory: " + root);

  std::vector<std::string> class_dirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) class_dirs.push_back(entry.path().filename().string());
  std::sort(class_dirs.begin(), class_dirs.end());
  if (class_dirs.empty()) throw CapacityError("no class directories under: " + root);

  DatasetSource src;
  src.name = fs::path(root).filename().string();
  src.feature_dim = side * side;
  for (const auto& cls : class_dirs) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(fs::path(root) / cls))
      if (entry.is_regular_file() && entry.path().extension() == ".png")
        files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw CapacityError("class directory has no PNG images: " + cls);
    std::vector<std::vector<double>> examples;
    for (const auto& f : files) examples.push_back(resize_and_scale(decode_png_gray(f), side));
    src.examples.push_back(std::move(examples));
  }
  const int n = src.class_count();
  const int base = base_count > 0 ? std::min(base_count, n) : n;
  for (int c = 0; c < n; ++c) (c < base ? src.base_classes : src.novel_classes).push_back(c);
  src.validate();
  return src;
}

}  // namespace boml
