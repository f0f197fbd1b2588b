// Copyright 2026 The ctxai Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CTXAI_IMAGE_HPP
#define CTXAI_IMAGE_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ctxai/tensor.hpp"

namespace ctxai {

// Binary per-pixel field (lesion masks, region selections).
using ByteMatrix =
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Single-channel image with intensities in [0, 1].
class GrayImage {
 public:
  using Index = Eigen::Index;

  GrayImage() = default;
  explicit GrayImage(RowMatrixXd pixels);

  static GrayImage constant(Index height, Index width, double value);

  Index height() const { return pixels_.rows(); }
  Index width() const { return pixels_.cols(); }
  const RowMatrixXd& pixels() const { return pixels_; }
  double operator()(Index r, Index c) const { return pixels_(r, c); }

  Tensor to_tensor() const { return Tensor::from_matrix(pixels_); }

  friend bool operator==(const GrayImage& a, const GrayImage& b) {
    return a.pixels_ == b.pixels_;
  }

 private:
  RowMatrixXd pixels_;
};

// 8-bit interleaved RGB raster, the payload of a P6 file.
struct RgbImage {
  Eigen::Index height = 0;
  Eigen::Index width = 0;
  std::vector<std::uint8_t> rgb;

  RgbImage() = default;
  RgbImage(Eigen::Index h, Eigen::Index w)
      : height(h), width(w), rgb(static_cast<std::size_t>(3 * h * w), 0) {}

  std::array<std::uint8_t, 3> at(Eigen::Index r, Eigen::Index c) const {
    const auto i = static_cast<std::size_t>(3 * (r * width + c));
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
  }
  void set(Eigen::Index r, Eigen::Index c, std::array<std::uint8_t, 3> v) {
    const auto i = static_cast<std::size_t>(3 * (r * width + c));
    rgb[i] = v[0];
    rgb[i + 1] = v[1];
    rgb[i + 2] = v[2];
  }
};

GrayImage image_decode_pgm(std::string_view bytes);
GrayImage image_read_pgm(const std::filesystem::path& path);

// Writes P5; values are quantized by rounding, so a read-back is within
// 1/(2*maxval) of the input.
std::string image_encode_pgm(const GrayImage& img, int maxval = 255);
void image_write_pgm(const GrayImage& img, const std::filesystem::path& path,
                     int maxval = 255);

// Blends an H x W x 3 overlay onto the image at alpha 0.5. The overlay's
// strongest channel acts as its coverage, so a zero overlay leaves the
// grayscale pixel unchanged:
//   out = (1 - 0.5 * max_k o_k) * g + 0.5 * o
RgbImage blend_overlay(const GrayImage& img, const Tensor& overlay);

// 1-px rectangle outline, inclusive corners, clipped to the raster.
void draw_box(RgbImage& img, Eigen::Index top, Eigen::Index left,
              Eigen::Index bottom, Eigen::Index right,
              std::array<std::uint8_t, 3> color = {255, 0, 0});

std::string image_encode_ppm(const RgbImage& img);
RgbImage image_decode_ppm(std::string_view bytes);
void image_write_ppm(const RgbImage& img, const std::filesystem::path& path);
void image_write_ppm(const GrayImage& img, const Tensor& overlay,
                     const std::filesystem::path& path);

}  // namespace ctxai

#endif  // CTXAI_IMAGE_HPP
