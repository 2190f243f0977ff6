// Copyright 2026 The runwaysim Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <png.h>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "runwaysim/errors.hpp"

namespace runwaysim {

/// Row-major interleaved RGB, 8 bits per channel.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t* at(int x, int y) { return &pixels[(static_cast<std::size_t>(y) * width + x) * 3]; }
  const std::uint8_t* at(int x, int y) const {
    return &pixels[(static_cast<std::size_t>(y) * width + x) * 3];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Single-channel image with intensities in [0, 1].
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<float> values;

  float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// ITU-R BT.601 luma in [0, 255].
inline double luminance(const std::uint8_t* rgb) {
  return 0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2];
}

inline double mean_luminance(const Image& img) {
  double sum = 0.0;
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  for (std::size_t i = 0; i < n; ++i) sum += luminance(&img.pixels[i * 3]);
  return n ? sum / static_cast<double>(n) : 0.0;
}

inline GrayImage to_gray(const Image& img) {
  GrayImage g{img.width, img.height, {}};
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  g.values.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    g.values[i] = static_cast<float>(luminance(&img.pixels[i * 3]) / 255.0);
  return g;
}

inline void write_png(const Image& img, const std::filesystem::path& path) {
  if (img.pixels.size() != static_cast<std::size_t>(img.width) * img.height * 3)
    throw InvalidArgument("image buffer does not match its dimensions");
  png_image out{};
  out.version = PNG_IMAGE_VERSION;
  out.width = static_cast<png_uint_32>(img.width);
  out.height = static_cast<png_uint_32>(img.height);
  out.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&out, path.c_str(), 0, img.pixels.data(), 0, nullptr)) {
    const std::string msg = out.message;
    png_image_free(&out);
    throw IoError("cannot write " + path.string() + ": " + msg);
  }
}

inline Image read_png(const std::filesystem::path& path) {
  png_image in{};
  in.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&in, path.c_str()))
    throw IoError("cannot read " + path.string() + ": " + in.message);
  in.format = PNG_FORMAT_RGB;
  Image img(static_cast<int>(in.width), static_cast<int>(in.height));
  if (!png_image_finish_read(&in, nullptr, img.pixels.data(), 0, nullptr)) {
    const std::string msg = in.message;
    png_image_free(&in);
    throw IoError("cannot decode " + path.string() + ": " + msg);
  }
  return img;
}

}  // namespace runwaysim
