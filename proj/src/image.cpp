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

#include "ctxai/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace ctxai {

GrayImage::GrayImage(RowMatrixXd pixels) : pixels_(std::move(pixels)) {
  if (!pixels_.allFinite()) throw ValidationError("image has non-finite pixels");
  if (pixels_.size() > 0 && (pixels_.minCoeff() < 0.0 || pixels_.maxCoeff() > 1.0)) {
    throw ValidationError("image pixels must lie in [0,1]");
  }
}

GrayImage GrayImage::constant(Index height, Index width, double value) {
  return GrayImage(RowMatrixXd::Constant(height, width, value));
}

namespace {

// Netpbm header reader: whitespace-separated ASCII fields with '#' comments.
class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view magic() {
    if (bytes_.size() < 2) throw FormatError("truncated Netpbm magic", 0);
    pos_ = 2;
    return bytes_.substr(0, 2);
  }

  long number(const char* field) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > 1'000'000'000L) throw FormatError(std::string(field) + " too large", start);
      ++pos_;
    }
    if (pos_ == start) throw FormatError(std::string("expected ") + field, start);
    return v;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw FormatError("missing whitespace before raster", pos_);
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

GrayImage image_decode_pgm(std::string_view bytes) {
  HeaderReader header(bytes);
  const std::string_view magic = header.magic();
  if (magic != "P5") {
    throw FormatError("unsupported Netpbm magic '" + std::string(magic) +
                          "', expected binary PGM (P5)",
                      0);
  }
  const long width = header.number("width");
  const long height = header.number("height");
  const long maxval = header.number("maxval");
  if (width < 1 || height < 1) throw FormatError("PGM dims must be positive", 2);
  if (maxval < 1 || maxval > 65535) throw FormatError("PGM maxval outside 1..65535", 2);
  const std::size_t start = header.raster_start();
  const std::size_t bpp = maxval > 255 ? 2 : 1;
  const std::size_t need = static_cast<std::size_t>(width) * height * bpp;
  if (bytes.size() < start + need) {
    throw IoError("truncated PGM raster: expected " + std::to_string(need) +
                  " bytes, found " + std::to_string(bytes.size() - std::min(bytes.size(), start)));
  }
  RowMatrixXd px(height, width);
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data() + start);
  const double scale = 1.0 / static_cast<double>(maxval);
  for (Eigen::Index i = 0; i < px.size(); ++i) {
    unsigned v = bpp == 1 ? raw[i] : (unsigned{raw[2 * i]} << 8) | raw[2 * i + 1];
    if (v > static_cast<unsigned>(maxval)) {
      throw FormatError("PGM sample exceeds maxval", start + bpp * static_cast<std::size_t>(i));
    }
    px.data()[i] = v * scale;
  }
  return GrayImage(std::move(px));
}

GrayImage image_read_pgm(const std::filesystem::path& path) {
  return image_decode_pgm(read_file_bytes(path));
}

std::string image_encode_pgm(const GrayImage& img, int maxval) {
  if (maxval < 1 || maxval > 65535) throw ValidationError("PGM maxval outside 1..65535");
  std::string out = "P5\n" + std::to_string(img.width()) + " " +
                    std::to_string(img.height()) + "\n" + std::to_string(maxval) + "\n";
  const bool wide = maxval > 255;
  for (Eigen::Index i = 0; i < img.pixels().size(); ++i) {
    const auto v = static_cast<unsigned>(std::lround(img.pixels().data()[i] * maxval));
    if (wide) out.push_back(static_cast<char>(v >> 8));
    out.push_back(static_cast<char>(v & 0xFF));
  }
  return out;
}

void image_write_pgm(const GrayImage& img, const std::filesystem::path& path, int maxval) {
  write_file_bytes(path, image_encode_pgm(img, maxval));
}

RgbImage blend_overlay(const GrayImage& img, const Tensor& overlay) {
  if (overlay.rank() != 3 || overlay.dim(0) != img.height() ||
      overlay.dim(1) != img.width() || overlay.dim(2) != 3) {
    throw ValidationError("overlay must be H x W x 3 matching the image");
  }
  if (overlay.data().minCoeff() < 0.0 || overlay.data().maxCoeff() > 1.0) {
    throw ValidationError("overlay values must lie in [0,1]");
  }
  constexpr double kAlpha = 0.5;
  RgbImage out(img.height(), img.width());
  for (Eigen::Index r = 0; r < img.height(); ++r) {
    for (Eigen::Index c = 0; c < img.width(); ++c) {
      const double o[3] = {overlay(r, c, 0), overlay(r, c, 1), overlay(r, c, 2)};
      const double coverage = std::max({o[0], o[1], o[2]});
      const double base = (1.0 - kAlpha * coverage) * img(r, c);
      out.set(r, c, {to_byte(base + kAlpha * o[0]), to_byte(base + kAlpha * o[1]),
                     to_byte(base + kAlpha * o[2])});
    }
  }
  return out;
}

void draw_box(RgbImage& img, Eigen::Index top, Eigen::Index left, Eigen::Index bottom,
              Eigen::Index right, std::array<std::uint8_t, 3> color) {
  auto plot = [&](Eigen::Index r, Eigen::Index c) {
    if (r >= 0 && r < img.height && c >= 0 && c < img.width) img.set(r, c, color);
  };
  for (Eigen::Index c = left; c <= right; ++c) {
    plot(top, c);
    plot(bottom, c);
  }
  for (Eigen::Index r = top; r <= bottom; ++r) {
    plot(r, left);
    plot(r, right);
  }
}

std::string image_encode_ppm(const RgbImage& img) {
  std::string out = "P6\n" + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.rgb.data()), img.rgb.size());
  return out;
}

RgbImage image_decode_ppm(std::string_view bytes) {
  HeaderReader header(bytes);
  if (header.magic() != "P6") throw FormatError("expected binary PPM (P6)", 0);
  const long width = header.number("width");
  const long height = header.number("height");
  const long maxval = header.number("maxval");
  if (maxval != 255) throw FormatError("only 8-bit PPM is supported", 2);
  const std::size_t start = header.raster_start();
  RgbImage img(height, width);
  if (bytes.size() < start + img.rgb.size()) throw IoError("truncated PPM raster");
  std::copy_n(bytes.data() + start, img.rgb.size(), reinterpret_cast<char*>(img.rgb.data()));
  return img;
}

void image_write_ppm(const RgbImage& img, const std::filesystem::path& path) {
  write_file_bytes(path, image_encode_ppm(img));
}

void image_write_ppm(const GrayImage& img, const Tensor& overlay,
                     const std::filesystem::path& path) {
  image_write_ppm(blend_overlay(img, overlay), path);
}

}  // namespace ctxai
