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

#ifndef PALIGN_PRIOR_HPP_
#define PALIGN_PRIOR_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "palign/error.hpp"
#include "palign/regions.hpp"

namespace palign {

enum class PriorSource : std::uint8_t { kBoundingBox = 0, kFreeMask = 1 };

struct Box {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  bool contains(std::size_t r, std::size_t c) const {
    return r >= row && r < row + height && c >= col && c < col + width;
  }
  bool intersects(const Box& o) const {
    return row < o.row + o.height && o.row < row + height &&
           col < o.col + o.width && o.col < col + width;
  }
  bool operator==(const Box&) const = default;
};

// Human prior H as a pixel mask of the image's spatial size.
class PriorRegion {
 public:
  PriorRegion() = default;
  PriorRegion(std::size_t height, std::size_t width,
              std::vector<std::uint8_t> mask, PriorSource source)
      : height_(height), width_(width), mask_(std::move(mask)), source_(source) {
    if (mask_.size() != height_ * width_) {
      throw ShapeError("prior mask has " + std::to_string(mask_.size()) +
                       " pixels, expected " + std::to_string(height_ * width_));
    }
    for (auto& m : mask_) m = m ? 1 : 0;
    true_count_ = static_cast<std::size_t>(
        std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
    if (true_count_ == 0) throw ConfigError("prior mask is empty");
  }

  static PriorRegion from_box(std::size_t height, std::size_t width,
                              const Box& box) {
    if (box.height == 0 || box.width == 0 || box.row + box.height > height ||
        box.col + box.width > width) {
      throw ConfigError("prior box does not fit inside the image");
    }
    std::vector<std::uint8_t> mask(height * width, 0);
    for (std::size_t r = box.row; r < box.row + box.height; ++r) {
      for (std::size_t c = box.col; c < box.col + box.width; ++c) {
        mask[r * width + c] = 1;
      }
    }
    return PriorRegion(height, width, std::move(mask), PriorSource::kBoundingBox);
  }

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  PriorSource source() const { return source_; }
  const std::vector<std::uint8_t>& mask() const { return mask_; }
  std::size_t true_count() const { return true_count_; }
  bool inside(std::size_t row, std::size_t col) const {
    return mask_[row * width_ + col] != 0;
  }
  bool inside(std::size_t pixel_index) const { return mask_[pixel_index] != 0; }

  bool operator==(const PriorRegion& o) const {
    return height_ == o.height_ && width_ == o.width_ && source_ == o.source_ &&
           mask_ == o.mask_;
  }

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::uint8_t> mask_;
  PriorSource source_ = PriorSource::kFreeMask;
  std::size_t true_count_ = 0;
};

// phi[v]: fraction of region v's pixels covered by the prior.
struct OverlapProfile {
  std::vector<double> phi;

  double operator[](RegionId v) const { return phi[v]; }
  std::size_t size() const { return phi.size(); }
};

inline OverlapProfile compute_overlap(const RegionPartition& partition,
                                      const PriorRegion& prior) {
  if (prior.height() != partition.height() ||
      prior.width() != partition.width()) {
    throw ShapeError("prior " + std::to_string(prior.height()) + "x" +
                     std::to_string(prior.width()) +
                     " does not match partition " +
                     std::to_string(partition.height()) + "x" +
                     std::to_string(partition.width()));
  }
  OverlapProfile out;
  out.phi.resize(partition.n_regions());
  for (std::size_t v = 0; v < partition.n_regions(); ++v) {
    const auto& pixels = partition.pixels_of(static_cast<RegionId>(v));
    std::size_t covered = 0;
    for (std::size_t p : pixels) covered += prior.inside(p) ? 1 : 0;
    out.phi[v] = static_cast<double>(covered) / static_cast<double>(pixels.size());
  }
  return out;
}

// Strict: a region exactly at the threshold counts as on-prior.
inline bool is_off_prior(double phi_v, double tau) { return phi_v < tau; }

}  // namespace palign

#endif  // PALIGN_PRIOR_HPP_
