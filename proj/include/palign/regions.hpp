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

#ifndef PALIGN_REGIONS_HPP_
#define PALIGN_REGIONS_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "palign/error.hpp"
#include "palign/image.hpp"

namespace palign {

using RegionId = std::uint32_t;

// Fixed grid decomposition of an image into rows x cols equal cells.
// Region ids are assigned row-major: the cell at (gr, gc) has id gr*cols+gc.
class RegionPartition {
 public:
  RegionPartition() = default;

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t cell_height() const { return cell_height_; }
  std::size_t cell_width() const { return cell_width_; }
  std::size_t height() const { return rows_ * cell_height_; }
  std::size_t width() const { return cols_ * cell_width_; }
  std::size_t n_regions() const { return rows_ * cols_; }
  std::size_t pixels_per_region() const { return cell_height_ * cell_width_; }

  RegionId region_of_pixel(std::size_t pixel_index) const {
    return region_of_pixel_[pixel_index];
  }
  RegionId region_of(std::size_t row, std::size_t col) const {
    return region_of_pixel_[row * width() + col];
  }
  const std::vector<RegionId>& region_map() const { return region_of_pixel_; }

  // Pixel indices (row * width + col) owned by a region, in row-major order.
  const std::vector<std::size_t>& pixels_of(RegionId region) const {
    return pixels_[region];
  }

  std::size_t first_row(RegionId region) const {
    return (region / cols_) * cell_height_;
  }
  std::size_t first_col(RegionId region) const {
    return (region % cols_) * cell_width_;
  }
  // Center pixel (row, col); for even cell sizes this is the lower-right of
  // the four central pixels.
  std::size_t center_row(RegionId region) const {
    return first_row(region) + cell_height_ / 2;
  }
  std::size_t center_col(RegionId region) const {
    return first_col(region) + cell_width_ / 2;
  }

  bool matches(const ImageShape& shape) const {
    return shape.height == height() && shape.width == width();
  }

  friend RegionPartition make_grid_partition(std::size_t height,
                                             std::size_t width,
                                             std::size_t rows,
                                             std::size_t cols);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t cell_height_ = 0;
  std::size_t cell_width_ = 0;
  std::vector<RegionId> region_of_pixel_;
  std::vector<std::vector<std::size_t>> pixels_;
};

inline RegionPartition make_grid_partition(std::size_t height,
                                           std::size_t width, std::size_t rows,
                                           std::size_t cols) {
  if (rows == 0 || height == 0 || height % rows != 0) {
    throw ConfigError("grid rows " + std::to_string(rows) +
                      " do not divide image height " + std::to_string(height));
  }
  if (cols == 0 || width == 0 || width % cols != 0) {
    throw ConfigError("grid cols " + std::to_string(cols) +
                      " do not divide image width " + std::to_string(width));
  }
  RegionPartition p;
  p.rows_ = rows;
  p.cols_ = cols;
  p.cell_height_ = height / rows;
  p.cell_width_ = width / cols;
  p.region_of_pixel_.resize(height * width);
  p.pixels_.assign(rows * cols, {});
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const auto id =
          static_cast<RegionId>((r / p.cell_height_) * cols + c / p.cell_width_);
      p.region_of_pixel_[r * width + c] = id;
      p.pixels_[id].push_back(r * width + c);
    }
  }
  return p;
}

// Ordered, duplicate-free set of region ids (a prefix of an attribution
// ranking, or any subset to keep visible).
class SubsetMask {
 public:
  explicit SubsetMask(std::size_t n_regions) : present_(n_regions, false) {}
  SubsetMask(std::size_t n_regions, std::span<const RegionId> ids)
      : SubsetMask(n_regions) {
    for (RegionId id : ids) add(id);
  }
  SubsetMask(std::size_t n_regions, std::initializer_list<RegionId> ids)
      : SubsetMask(n_regions, std::span<const RegionId>(ids.begin(), ids.size())) {}

  static SubsetMask all(std::size_t n_regions) {
    SubsetMask m(n_regions);
    for (std::size_t v = 0; v < n_regions; ++v) m.add(static_cast<RegionId>(v));
    return m;
  }

  void add(RegionId id) {
    if (id >= present_.size()) {
      throw ContractError("region id " + std::to_string(id) +
                          " out of range for " +
                          std::to_string(present_.size()) + " regions");
    }
    if (present_[id]) {
      throw ContractError("region id " + std::to_string(id) +
                          " already in subset");
    }
    present_[id] = true;
    members_.push_back(id);
  }

  bool contains(RegionId id) const { return present_[id]; }
  const std::vector<RegionId>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  std::size_t n_regions() const { return present_.size(); }

 private:
  std::vector<bool> present_;
  std::vector<RegionId> members_;
};

// Keeps the pixels of the subset's regions and replaces every other pixel by
// the per-channel baseline value.
inline Image apply_mask(const Image& x, const RegionPartition& partition,
                        const SubsetMask& subset,
                        std::span<const double> baseline) {
  if (!partition.matches(x.shape)) {
    throw ShapeError("image " + x.shape.to_string() +
                     " does not match partition " +
                     std::to_string(partition.height()) + "x" +
                     std::to_string(partition.width()));
  }
  if (subset.n_regions() != partition.n_regions()) {
    throw ShapeError("subset built for " + std::to_string(subset.n_regions()) +
                     " regions, partition has " +
                     std::to_string(partition.n_regions()));
  }
  const std::size_t channels = x.shape.channels;
  if (baseline.size() != channels) {
    throw ShapeError("baseline has " + std::to_string(baseline.size()) +
                     " channels, image has " + std::to_string(channels));
  }
  Image out(x.shape);
  for (std::size_t p = 0; p < x.shape.pixel_count(); ++p) {
    const bool keep = subset.contains(partition.region_of_pixel(p));
    for (std::size_t ch = 0; ch < channels; ++ch) {
      out.values[p * channels + ch] =
          keep ? x.values[p * channels + ch] : baseline[ch];
    }
  }
  return out;
}

}  // namespace palign

#endif  // PALIGN_REGIONS_HPP_
