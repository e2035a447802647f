// SPDX-License-Identifier: Apache-2.0
#include "mmfeed/region/region.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "mmfeed/error.hpp"

namespace mmfeed::region {

using nlohmann::ordered_json;

void validate(const RegionFeatureSet& rfs) {
  const std::string where = "image \"" + rfs.image_ref + "\": ";
  if (rfs.boxes.empty()) throw Error(where + "no regions");
  if (rfs.boxes.size() > kMaxRegions) {
    throw Error(where + std::to_string(rfs.boxes.size()) + " regions, at most " + std::to_string(kMaxRegions));
  }
  if (rfs.features.rank() != 2 || rfs.features.rows() != rfs.boxes.size()) {
    throw Error(where + "need one feature row per box, got features " + shape_string(rfs.features.shape()));
  }
  for (const BoundingBox& b : rfs.boxes) {
    if (!b.valid() || !std::isfinite(b.x1) || !std::isfinite(b.y1) || !std::isfinite(b.x2) || !std::isfinite(b.y2)) {
      throw Error(where + "invalid box");
    }
  }
  if (!rfs.features.all_finite()) throw Error(where + "non-finite feature value");
  if (rfs.global) {
    if (rfs.global->size() != rfs.d_visual()) throw Error(where + "global vector length differs from d_visual");
    for (float v : *rfs.global) {
      if (!std::isfinite(v)) throw Error(where + "non-finite global value");
    }
  }
}

float iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::max(0.0, double(std::min(a.x2, b.x2)) - double(std::max(a.x1, b.x1)));
  const double ih = std::max(0.0, double(std::min(a.y2, b.y2)) - double(std::max(a.y1, b.y1)));
  const double inter = iw * ih;
  const double uni = double(a.area()) + double(b.area()) - inter;
  if (uni <= 0) return 0.0f;
  return static_cast<float>(std::clamp(inter / uni, 0.0, 1.0));
}

const char* to_string(AnchorLabel label) {
  switch (label) {
    case AnchorLabel::Positive: return "Positive";
    case AnchorLabel::Negative: return "Negative";
    case AnchorLabel::NotNegative: return "NotNegative";
  }
  return "?";
}

AnchorLabel objectiveness_label(float v) {
  if (!(v >= 0.0f && v <= 1.0f)) throw Error("IoU " + std::to_string(v) + " outside [0, 1]");
  if (v > 0.7f) return AnchorLabel::Positive;
  if (v >= 0.5f && v < 0.7f) return AnchorLabel::Positive;
  if (v < 0.3f) return AnchorLabel::Negative;
  if (v >= 0.3f && v <= 0.5f) return AnchorLabel::NotNegative;
  return AnchorLabel::Positive;  // v == 0.7
}

double smooth_l1(double x) {
  const double a = std::abs(x);
  return a < 1.0 ? 0.5 * x * x : a - 0.5;
}

double rpn_loss(std::span<const float> p, std::span<const std::uint8_t> p_star, std::span<const BoxDelta> t,
                std::span<const BoxDelta> t_star, const RpnLossOptions& options) {
  const std::size_t n = p.size();
  if (n == 0) throw Error("rpn_loss: no anchors");
  if (p_star.size() != n || t.size() != n || t_star.size() != n) {
    throw DimensionError("rpn_loss: p, p_star, t and t_star must have the same length");
  }
  if (options.n_cls == 0) throw Error("rpn_loss: N_cls must be positive");
  const double n_reg = options.n_reg == 0 ? double(n) : double(options.n_reg);
  constexpr double kTiny = 1e-12;

  double cls = 0, reg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(p[i] >= 0.0f && p[i] <= 1.0f)) throw Error("rpn_loss: probability outside [0, 1]");
    if (p_star[i] > 1) throw Error("rpn_loss: p_star must be 0 or 1");
    const double pi = p[i];
    cls -= p_star[i] ? std::log(std::max(pi, kTiny)) : std::log(std::max(1.0 - pi, kTiny));
    if (p_star[i]) {
      for (int c = 0; c < 4; ++c) reg += smooth_l1(double(t[i][c]) - double(t_star[i][c]));
    }
  }
  return cls / double(options.n_cls) + options.lambda * reg / n_reg;
}

namespace {

std::vector<float> float_array(const ordered_json& j, const char* what, std::size_t line) {
  if (!j.is_array()) throw ParseError(std::string(what) + " must be an array", line);
  std::vector<float> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw ParseError(std::string(what) + " must hold numbers", line);
    out.push_back(v.get<float>());
  }
  return out;
}

RegionFeatureSet set_from_json(const ordered_json& obj, std::size_t line) {
  if (!obj.is_object()) throw ParseError("record must be a JSON object", line);
  for (const auto& [key, v] : obj.items()) {
    if (key != "image_ref" && key != "boxes" && key != "features" && key != "global") {
      throw ParseError("unknown key \"" + key + "\"", line);
    }
  }
  RegionFeatureSet rfs;
  auto ref = obj.find("image_ref");
  if (ref == obj.end() || !ref->is_string()) throw ParseError("missing string \"image_ref\"", line);
  rfs.image_ref = ref->get<std::string>();

  auto boxes = obj.find("boxes");
  if (boxes == obj.end() || !boxes->is_array()) throw ParseError("missing \"boxes\" array", line);
  for (const auto& b : *boxes) {
    auto v = float_array(b, "box", line);
    if (v.size() != 4) throw ParseError("box needs 4 coordinates", line);
    rfs.boxes.push_back({v[0], v[1], v[2], v[3]});
  }
  auto feats = obj.find("features");
  if (feats == obj.end() || !feats->is_array()) throw ParseError("missing \"features\" array", line);
  if (feats->empty()) throw ParseError("no feature rows", line);
  std::vector<float> flat;
  std::size_t dv = 0;
  for (const auto& row : *feats) {
    auto v = float_array(row, "feature row", line);
    if (v.empty()) throw ParseError("empty feature row", line);
    if (dv == 0) dv = v.size();
    if (v.size() != dv) throw ParseError("feature rows differ in length", line);
    flat.insert(flat.end(), v.begin(), v.end());
  }
  rfs.features = Tensor({feats->size(), dv}, std::move(flat));
  if (auto g = obj.find("global"); g != obj.end() && !g->is_null()) rfs.global = float_array(*g, "global", line);
  try {
    validate(rfs);
  } catch (const Error& e) {
    throw ParseError(e.what(), line);
  }
  return rfs;
}

}  // namespace

RegionMap load_region_features(std::istream& in) {
  RegionMap out;
  std::size_t dv = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ordered_json obj;
    try {
      obj = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    RegionFeatureSet rfs = set_from_json(obj, line_no);
    if (dv == 0) dv = rfs.d_visual();
    if (rfs.d_visual() != dv) {
      throw ParseError("d_visual " + std::to_string(rfs.d_visual()) + " differs from " + std::to_string(dv), line_no);
    }
    const std::string key = rfs.image_ref;
    if (!out.emplace(key, std::move(rfs)).second) throw ParseError("duplicate image_ref \"" + key + "\"", line_no);
  }
  return out;
}

RegionMap load_region_features_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return load_region_features(in);
}

void write_region_features(std::ostream& out, const RegionMap& sets) {
  for (const auto& [key, rfs] : sets) {
    ordered_json obj;
    obj["image_ref"] = rfs.image_ref;
    obj["boxes"] = ordered_json::array();
    for (const auto& b : rfs.boxes) obj["boxes"].push_back({b.x1, b.y1, b.x2, b.y2});
    obj["features"] = ordered_json::array();
    for (std::size_t r = 0; r < rfs.features.rows(); ++r) {
      auto row = rfs.features.row(r);
      obj["features"].push_back(std::vector<float>(row.begin(), row.end()));
    }
    if (rfs.global) obj["global"] = *rfs.global;
    out << obj.dump() << '\n';
  }
}

void write_region_features_file(const std::filesystem::path& path, const RegionMap& sets) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  write_region_features(out, sets);
}

std::vector<float> global_vector(const RegionFeatureSet& rfs) {
  if (rfs.global) return *rfs.global;
  const std::size_t n = rfs.features.rows(), d = rfs.features.cols();
  if (n == 0) throw Error("global_vector: no regions");
  std::vector<double> acc(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) acc[c] += rfs.features.at(r, c);
  }
  std::vector<float> out(d);
  for (std::size_t c = 0; c < d; ++c) out[c] = static_cast<float>(acc[c] / double(n));
  return out;
}

}  // namespace mmfeed::region
