/*
 * Copyright 2026 The palign Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PALIGN_IMAGE_HPP_
#define PALIGN_IMAGE_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "palign/error.hpp"

namespace palign {

struct ImageShape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;

  std::size_t pixel_count() const { return height * width; }
  std::size_t size() const { return height * width * channels; }
  bool operator==(const ImageShape&) const = default;

  std::string to_string() const {
    return std::to_string(height) + "x" + std::to_string(width) + "x" +
           std::to_string(channels);
  }
};

// Dense H x W x C image stored row-major with the channel index fastest,
// i.e. value (r, c, ch) lives at ((r * W) + c) * C + ch.
struct Image {
  ImageShape shape;
  std::vector<double> values;

  Image() = default;
  explicit Image(ImageShape s, double fill = 0.0)
      : shape(s), values(s.size(), fill) {}
  Image(ImageShape s, std::vector<double> v) : shape(s), values(std::move(v)) {
    if (values.size() != shape.size()) {
      throw ShapeError("image buffer holds " + std::to_string(values.size()) +
                       " values, shape " + shape.to_string() + " needs " +
                       std::to_string(shape.size()));
    }
  }

  double& at(std::size_t row, std::size_t col, std::size_t ch = 0) {
    return values[(row * shape.width + col) * shape.channels + ch];
  }
  double at(std::size_t row, std::size_t col, std::size_t ch = 0) const {
    return values[(row * shape.width + col) * shape.channels + ch];
  }

  std::span<const double> flat() const { return values; }
  bool operator==(const Image&) const = default;
};

}  // namespace palign

#endif  // PALIGN_IMAGE_HPP_
