// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmfeed/tensor/tensor.hpp"

namespace mmfeed::region {

// Upper bound on detected regions per image.
inline constexpr std::size_t kMaxRegions = 36;

struct BoundingBox {
  float x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  bool valid() const noexcept { return x2 >= x1 && y2 >= y1; }
  float area() const noexcept { return (x2 - x1) * (y2 - y1); }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// Precomputed detector output for one image: one box and one feature row per
// region, plus an optional image-level vector.
struct RegionFeatureSet {
  std::string image_ref;
  std::vector<BoundingBox> boxes;
  Tensor features;  // [n_regions × d_visual]
  std::optional<std::vector<float>> global;

  std::size_t n_regions() const noexcept { return boxes.size(); }
  std::size_t d_visual() const { return features.cols(); }
  friend bool operator==(const RegionFeatureSet&, const RegionFeatureSet&) = default;
};

using RegionMap = std::map<std::string, RegionFeatureSet>;

// Throws mmfeed::Error when the set breaks its invariants (no regions, more
// than kMaxRegions, box/feature count mismatch, invalid box, non-finite
// values, global of the wrong length).
void validate(const RegionFeatureSet& rfs);

// Intersection over union; 0 when the union is empty.
float iou(const BoundingBox& a, const BoundingBox& b);

enum class AnchorLabel { Positive, Negative, NotNegative };
const char* to_string(AnchorLabel label);

// Anchor labelling by IoU. The rule list is
//   IoU > 0.7            Positive
//   0.5 <= IoU < 0.7     Positive
//   IoU < 0.3            Negative
//   0.3 <= IoU <= 0.5    NotNegative
// and the first matching rule wins. The two Positive rules overlap
// NotNegative at exactly 0.5 (Positive wins) and leave 0.7 itself
// uncovered; 0.7 is labelled Positive so the function is total with
// breakpoints 0.3, 0.5 and 0.7. IoU outside [0, 1] throws.
AnchorLabel objectiveness_label(float iou);

struct RpnLossOptions {
  double lambda = 10.0;
  std::size_t n_cls = 256;
  // 0 means "number of anchors passed in".
  std::size_t n_reg = 0;
};

using BoxDelta = std::array<float, 4>;

// (1/N_cls) Σ BCE(p_i, p*_i) + λ (1/N_reg) Σ p*_i smoothL1(t_i - t*_i).
// Callers drop NotNegative anchors beforehand. p must lie in [0, 1] and p*
// in {0, 1}; log(0) is clamped so a confident wrong prediction gives a large
// finite loss.
double rpn_loss(std::span<const float> p, std::span<const std::uint8_t> p_star, std::span<const BoxDelta> t,
                std::span<const BoxDelta> t_star, const RpnLossOptions& options = {});

double smooth_l1(double x);

// Region-feature file: one JSON object per line,
//   {"image_ref", "boxes": [[x1,y1,x2,y2],...], "features": [[...],...], "global": [...]}
// with "global" optional. d_visual must agree across the file.
RegionMap load_region_features(std::istream& in);
RegionMap load_region_features_file(const std::filesystem::path& path);
void write_region_features(std::ostream& out, const RegionMap& sets);
void write_region_features_file(const std::filesystem::path& path, const RegionMap& sets);

// The provided global vector, or the mean of the region features.
std::vector<float> global_vector(const RegionFeatureSet& rfs);

}  // namespace mmfeed::region
