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

#ifndef PALIGN_DATA_HPP_
#define PALIGN_DATA_HPP_

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "palign/error.hpp"
#include "palign/image.hpp"
#include "palign/model.hpp"
#include "palign/prior.hpp"

namespace palign {

enum class Split : std::uint8_t { kTrain = 0, kVal = 1, kShortcutFlipped = 2 };
enum class Corner : std::uint32_t {
  kTopLeft = 0,
  kTopRight = 1,
  kBottomLeft = 2,
  kBottomRight = 3
};

inline const char* to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kShortcutFlipped: return "shortcut_flipped";
  }
  return "?";
}
inline Split split_from_string(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "shortcut_flipped" || s == "flip") return Split::kShortcutFlipped;
  throw ConfigError("unknown split '" + s + "'");
}
inline Corner corner_from_string(const std::string& s) {
  if (s == "top_left") return Corner::kTopLeft;
  if (s == "top_right") return Corner::kTopRight;
  if (s == "bottom_left") return Corner::kBottomLeft;
  if (s == "bottom_right") return Corner::kBottomRight;
  throw ConfigError("unknown corner '" + s + "'");
}
inline const char* to_string(Corner c) {
  switch (c) {
    case Corner::kTopLeft: return "top_left";
    case Corner::kTopRight: return "top_right";
    case Corner::kBottomLeft: return "bottom_left";
    case Corner::kBottomRight: return "bottom_right";
  }
  return "?";
}

// Parameters of the planted-shortcut benchmark. Every image carries a
// class glyph (the causal evidence, boxed by the prior) near the center, a
// solid patch in one corner whose intensity encodes `shortcut_class`, and
// uniform background noise.
struct DatasetSpec {
  std::uint32_t classes = 4;
  std::uint32_t height = 28;
  std::uint32_t width = 28;
  std::uint32_t channels = 1;
  std::uint64_t n_train = 2000;
  std::uint64_t n_val = 500;
  std::uint64_t n_flip = 500;
  double rho_train = 0.95;
  std::uint32_t glyph_size = 8;
  std::uint32_t glyph_jitter = 3;      // max offset of the glyph from center
  std::uint32_t patch_size = 4;
  Corner patch_corner = Corner::kTopRight;
  double background_level = 0.0;       // background ~ level + U[0, noise]
  double background_noise = 0.3;
  double glyph_intensity = 0.7;        // mean intensity of glyph strokes
  double shortcut_min = 0.4375;        // patch intensity of class 0; class K-1 is 1
  std::uint64_t seed = 0;

  bool operator==(const DatasetSpec&) const = default;

  ImageShape shape() const { return {height, width, channels}; }

  Box patch_box() const {
    const bool top = patch_corner == Corner::kTopLeft || patch_corner == Corner::kTopRight;
    const bool left = patch_corner == Corner::kTopLeft || patch_corner == Corner::kBottomLeft;
    return {top ? 0u : height - patch_size, left ? 0u : width - patch_size,
            patch_size, patch_size};
  }

  // Smallest box containing every possible glyph placement.
  Box glyph_envelope() const {
    const std::size_t r0 = (height - glyph_size) / 2;
    const std::size_t c0 = (width - glyph_size) / 2;
    return {r0 - glyph_jitter, c0 - glyph_jitter, glyph_size + 2 * glyph_jitter,
            glyph_size + 2 * glyph_jitter};
  }

  void validate() const {
    if (classes < 2) throw ConfigError("need at least two classes");
    if (channels == 0 || height == 0 || width == 0) {
      throw ConfigError("image dimensions must be positive");
    }
    if (!(rho_train >= 0.0 && rho_train <= 1.0)) {
      throw ConfigError("rho_train must lie in [0, 1]");
    }
    if (glyph_size == 0 || patch_size == 0) {
      throw ConfigError("glyph and patch sizes must be positive");
    }
    if (glyph_size > height || glyph_size > width) {
      throw ConfigError("glyph does not fit inside the image");
    }
    if (glyph_jitter > (height - glyph_size) / 2 ||
        glyph_jitter > (width - glyph_size) / 2) {
      throw ConfigError("glyph jitter pushes the glyph outside the image");
    }
    if (patch_size > height || patch_size > width) {
      throw ConfigError("shortcut patch does not fit inside the image");
    }
    if (glyph_envelope().intersects(patch_box())) {
      throw ConfigError("glyph placements overlap the shortcut patch");
    }
    if (!(background_level >= 0.0 && background_noise >= 0.0 &&
          background_level + background_noise <= 1.0) ||
        !(glyph_intensity > 0.0 && glyph_intensity <= 1.0) ||
        !(shortcut_min >= 0.0 && shortcut_min < 1.0)) {
      throw ConfigError("intensities must lie in [0, 1]");
    }
  }
};

struct Instance {
  Image pixels;
  std::size_t label = 0;
  PriorRegion prior;
  std::size_t shortcut_class = 0;
  Split split = Split::kTrain;

  bool operator==(const Instance&) const = default;
};

struct Dataset {
  DatasetSpec spec;
  std::vector<Instance> train;
  std::vector<Instance> val;
  std::vector<Instance> shortcut_flipped;

  const std::vector<Instance>& split(Split s) const {
    switch (s) {
      case Split::kTrain: return train;
      case Split::kVal: return val;
      case Split::kShortcutFlipped: return shortcut_flipped;
    }
    return train;
  }
  bool operator==(const Dataset&) const = default;
};

// Binary stroke pattern of a class glyph, glyph_size x glyph_size, row-major.
inline std::vector<std::uint8_t> glyph_pattern(std::size_t label, std::size_t size) {
  std::vector<std::uint8_t> g(size * size, 0);
  const std::size_t last = size - 1;
  for (std::size_t r = 0; r < size; ++r) {
    for (std::size_t c = 0; c < size; ++c) {
      bool on = false;
      switch (label) {
        case 0: on = (r / 2) % 2 == 0; break;                       // horizontal bars
        case 1: on = (c / 2) % 2 == 0; break;                       // vertical bars
        case 2: on = r == c || r + c == last || r + 1 == c || r + c == last + 1; break;
        case 3: on = r == 0 || c == 0 || r == last || c == last; break;  // frame
        default: {
          std::uint64_t h = (label * 0x9E3779B97F4A7C15ull) ^ (r * 131 + c);
          h ^= h >> 31;
          h *= 0xBF58476D1CE4E5B9ull;
          h ^= h >> 29;
          on = (h & 1u) != 0;
        }
      }
      g[r * size + c] = on ? 1 : 0;
    }
  }
  return g;
}

// Intensity of the solid shortcut patch encoding `shortcut_class`: evenly
// spaced from shortcut_min (class 0) to 1 (class K-1).
inline double shortcut_intensity(const DatasetSpec& spec, std::size_t shortcut_class) {
  return spec.shortcut_min + (1.0 - spec.shortcut_min) *
                                 static_cast<double>(shortcut_class) /
                                 static_cast<double>(spec.classes - 1);
}

namespace detail {

inline Instance make_instance(const DatasetSpec& spec, std::size_t label,
                              std::size_t shortcut_class, Split split,
                              std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Instance inst;
  inst.label = label;
  inst.shortcut_class = shortcut_class;
  inst.split = split;
  inst.pixels = Image(spec.shape());
  for (auto& v : inst.pixels.values) {
    v = spec.background_level + spec.background_noise * unit(rng);
  }

  std::uniform_int_distribution<int> jitter(-static_cast<int>(spec.glyph_jitter),
                                            static_cast<int>(spec.glyph_jitter));
  const std::size_t row =
      static_cast<std::size_t>(static_cast<int>((spec.height - spec.glyph_size) / 2) + jitter(rng));
  const std::size_t col =
      static_cast<std::size_t>(static_cast<int>((spec.width - spec.glyph_size) / 2) + jitter(rng));
  const auto pattern = glyph_pattern(label, spec.glyph_size);
  for (std::size_t r = 0; r < spec.glyph_size; ++r) {
    for (std::size_t c = 0; c < spec.glyph_size; ++c) {
      if (!pattern[r * spec.glyph_size + c]) continue;
      for (std::size_t ch = 0; ch < spec.channels; ++ch) {
        const double v = spec.glyph_intensity + 0.3 * (unit(rng) - 0.5);
        inst.pixels.at(row + r, col + c, ch) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  inst.prior = PriorRegion::from_box(spec.height, spec.width,
                                     {row, col, spec.glyph_size, spec.glyph_size});

  const Box patch = spec.patch_box();
  const double level = shortcut_intensity(spec, shortcut_class);
  for (std::size_t r = patch.row; r < patch.row + patch.height; ++r) {
    for (std::size_t c = patch.col; c < patch.col + patch.width; ++c) {
      for (std::size_t ch = 0; ch < spec.channels; ++ch) inst.pixels.at(r, c, ch) = level;
    }
  }
  return inst;
}

// Uniform class other than `label`.
inline std::size_t other_class(std::size_t label, std::size_t classes,
                               std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, classes - 2);
  const std::size_t c = d(rng);
  return c >= label ? c + 1 : c;
}

}  // namespace detail

// Train: shortcut agrees with the label with probability rho_train, otherwise
// it is uniform over the other classes. Val: shortcut uniform over all
// classes. Shortcut-flipped: shortcut never agrees with the label. Labels are
// balanced round-robin within each split.
inline Dataset generate(const DatasetSpec& spec) {
  spec.validate();
  Dataset d;
  d.spec = spec;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> any(0, spec.classes - 1);

  auto fill = [&](std::vector<Instance>& out, std::uint64_t n, Split split) {
    out.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      const std::size_t label = i % spec.classes;
      std::size_t shortcut = label;
      switch (split) {
        case Split::kTrain:
          if (!(unit(rng) < spec.rho_train)) {
            shortcut = detail::other_class(label, spec.classes, rng);
          }
          break;
        case Split::kVal: shortcut = any(rng); break;
        case Split::kShortcutFlipped:
          shortcut = detail::other_class(label, spec.classes, rng);
          break;
      }
      out.push_back(detail::make_instance(spec, label, shortcut, split, rng));
    }
    // Shuffle so batches are not label-periodic.
    std::shuffle(out.begin(), out.end(), rng);
  };
  fill(d.train, spec.n_train, Split::kTrain);
  fill(d.val, spec.n_val, Split::kVal);
  fill(d.shortcut_flipped, spec.n_flip, Split::kShortcutFlipped);
  return d;
}

// Per-channel mean over a set of instances.
inline std::vector<double> channel_mean(std::span<const Instance> instances) {
  if (instances.empty()) throw ConfigError("channel_mean of an empty split");
  const std::size_t channels = instances.front().pixels.shape.channels;
  std::vector<double> sum(channels, 0.0);
  std::size_t count = 0;
  for (const auto& inst : instances) {
    const auto& v = inst.pixels.values;
    for (std::size_t i = 0; i < v.size(); ++i) sum[i % channels] += v[i];
    count += inst.pixels.shape.pixel_count();
  }
  for (auto& s : sum) s /= static_cast<double>(count);
  return sum;
}

// Raw N(0, sigma^2) draws, one per value, from a seeded generator.
inline std::vector<double> gaussian_perturbation(std::size_t n, double sigma,
                                                 std::uint64_t seed) {
  std::vector<double> out(n, 0.0);
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, sigma);
  for (auto& v : out) v = dist(rng);
  return out;
}

inline Image add_gaussian_noise(const Image& x, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw ConfigError("noise sigma must be non-negative");
  if (sigma == 0.0) return x;
  const auto noise = gaussian_perturbation(x.values.size(), sigma, seed);
  Image out = x;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = std::clamp(out.values[i] + noise[i], 0.0, 1.0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset container (little-endian):
//   char[8] "PALGNDAT", u32 version
//   spec:   u32 classes, height, width, channels; u64 n_train, n_val, n_flip;
//           f64 rho_train; u32 glyph_size, glyph_jitter, patch_size, corner;
//           f64 background_level, background_noise, glyph_intensity,
//           shortcut_min; u64 seed
//   then for train, val, shortcut_flipped (counts from the spec):
//           f64 pixels[n*H*W*C], u32 labels[n], u32 shortcut[n],
//           u8 prior_source[n], u8 prior_mask[n*H*W]
// ---------------------------------------------------------------------------

inline constexpr char kDatasetMagic[8] = {'P', 'A', 'L', 'G', 'N', 'D', 'A', 'T'};
inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::size_t kDatasetHeaderBytes =
    8 + 4 + 4 * 4 + 3 * 8 + 8 + 4 * 4 + 4 * 8 + 8;

inline std::size_t dataset_split_bytes(const DatasetSpec& spec, std::uint64_t n) {
  const std::size_t px = static_cast<std::size_t>(spec.height) * spec.width;
  return n * (px * spec.channels * sizeof(double) + 4 + 4 + 1 + px);
}

inline void save_dataset(const Dataset& d, std::ostream& os) {
  using detail::write_pod;
  const auto& s = d.spec;
  if (d.train.size() != s.n_train || d.val.size() != s.n_val ||
      d.shortcut_flipped.size() != s.n_flip) {
    throw ShapeError("dataset split sizes disagree with its spec");
  }
  os.write(kDatasetMagic, sizeof(kDatasetMagic));
  write_pod(os, kDatasetVersion);
  write_pod(os, s.classes);
  write_pod(os, s.height);
  write_pod(os, s.width);
  write_pod(os, s.channels);
  write_pod(os, s.n_train);
  write_pod(os, s.n_val);
  write_pod(os, s.n_flip);
  write_pod(os, s.rho_train);
  write_pod(os, s.glyph_size);
  write_pod(os, s.glyph_jitter);
  write_pod(os, s.patch_size);
  write_pod(os, static_cast<std::uint32_t>(s.patch_corner));
  write_pod(os, s.background_level);
  write_pod(os, s.background_noise);
  write_pod(os, s.glyph_intensity);
  write_pod(os, s.shortcut_min);
  write_pod(os, s.seed);
  for (const auto* split : {&d.train, &d.val, &d.shortcut_flipped}) {
    for (const auto& inst : *split) detail::write_doubles(os, inst.pixels.values);
    for (const auto& inst : *split) write_pod(os, static_cast<std::uint32_t>(inst.label));
    for (const auto& inst : *split) {
      write_pod(os, static_cast<std::uint32_t>(inst.shortcut_class));
    }
    for (const auto& inst : *split) {
      write_pod(os, static_cast<std::uint8_t>(inst.prior.source()));
    }
    for (const auto& inst : *split) {
      os.write(reinterpret_cast<const char*>(inst.prior.mask().data()),
               static_cast<std::streamsize>(inst.prior.mask().size()));
    }
  }
}

inline Dataset load_dataset(std::istream& is) {
  detail::Reader in(is);
  char magic[8];
  in.bytes(magic, sizeof(magic), "magic");
  if (std::memcmp(magic, kDatasetMagic, sizeof(magic)) != 0) {
    throw LoadError("not a palign dataset (bad magic)", 0);
  }
  const auto version = in.pod<std::uint32_t>("version");
  if (version != kDatasetVersion) {
    throw LoadError("unsupported dataset version " + std::to_string(version), 8);
  }
  Dataset d;
  auto& s = d.spec;
  s.classes = in.pod<std::uint32_t>("classes");
  s.height = in.pod<std::uint32_t>("height");
  s.width = in.pod<std::uint32_t>("width");
  s.channels = in.pod<std::uint32_t>("channels");
  s.n_train = in.pod<std::uint64_t>("n_train");
  s.n_val = in.pod<std::uint64_t>("n_val");
  s.n_flip = in.pod<std::uint64_t>("n_flip");
  s.rho_train = in.pod<double>("rho_train");
  s.glyph_size = in.pod<std::uint32_t>("glyph_size");
  s.glyph_jitter = in.pod<std::uint32_t>("glyph_jitter");
  s.patch_size = in.pod<std::uint32_t>("patch_size");
  const auto corner = in.pod<std::uint32_t>("patch_corner");
  if (corner > 3) throw LoadError("invalid patch corner", in.offset() - 4);
  s.patch_corner = static_cast<Corner>(corner);
  s.background_level = in.pod<double>("background_level");
  s.background_noise = in.pod<double>("background_noise");
  s.glyph_intensity = in.pod<double>("glyph_intensity");
  s.shortcut_min = in.pod<double>("shortcut_min");
  s.seed = in.pod<std::uint64_t>("seed");
  try {
    s.validate();
  } catch (const ConfigError& e) {
    throw LoadError(std::string("invalid dataset spec: ") + e.what(), in.offset());
  }

  const ImageShape shape = s.shape();
  const std::size_t px = shape.pixel_count();
  auto read_split = [&](std::vector<Instance>& out, std::uint64_t n, Split split) {
    out.resize(n);
    for (auto& inst : out) {
      inst.split = split;
      inst.pixels.shape = shape;
      in.doubles(inst.pixels.values, shape.size(), "pixels");
    }
    for (auto& inst : out) {
      inst.label = in.pod<std::uint32_t>("label");
      if (inst.label >= s.classes) throw LoadError("label out of range", in.offset() - 4);
    }
    for (auto& inst : out) {
      inst.shortcut_class = in.pod<std::uint32_t>("shortcut class");
      if (inst.shortcut_class >= s.classes) {
        throw LoadError("shortcut class out of range", in.offset() - 4);
      }
    }
    std::vector<std::uint8_t> sources(n);
    for (auto& src : sources) {
      src = in.pod<std::uint8_t>("prior source");
      if (src > 1) throw LoadError("invalid prior source", in.offset() - 1);
    }
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::uint8_t> mask(px);
      in.bytes(mask.data(), px, "prior mask");
      try {
        out[i].prior = PriorRegion(shape.height, shape.width, std::move(mask),
                                   static_cast<PriorSource>(sources[i]));
      } catch (const Error& e) {
        throw LoadError(std::string("invalid prior: ") + e.what(), in.offset() - px);
      }
    }
  };
  read_split(d.train, s.n_train, Split::kTrain);
  read_split(d.val, s.n_val, Split::kVal);
  read_split(d.shortcut_flipped, s.n_flip, Split::kShortcutFlipped);
  if (!in.at_end()) throw LoadError("trailing bytes after dataset", in.offset());
  return d;
}

}  // namespace palign

#endif  // PALIGN_DATA_HPP_
