#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "arsrg/errors.hpp"
#include "arsrg/features.hpp"
#include "arsrg/rag.hpp"
#include "arsrg/segmentation.hpp"

namespace arsrg {

enum class LeafConfig { RegionBased, RegionGraphBased };

/// Nearest-neighbor graph over one region's keypoints: edge (i, j) iff the
/// image-plane Euclidean distance is strictly below tau. Indices refer to the
/// member list.
struct Snng {
  int region = -1;
  std::vector<int> members;
  std::vector<std::pair<int, int>> edges;  // (i, j) with i < j, member-local
  double tau = 0;
};

/// Three-level attributed graph over an image: the root (image id and
/// dimensions), the region adjacency graph, and keypoint leaves. Each leaf is
/// assigned to exactly one region; the region-graph configuration additionally
/// carries intra-region leaf edges.
struct Arsrg {
  std::string image_id;
  int width = 0;
  int height = 0;
  RegionGraph regions;
  std::vector<Keypoint> leaves;
  std::vector<int> leaf_region;  // 0-based region index per leaf
  LeafConfig config = LeafConfig::RegionBased;
  std::optional<double> tau;
  std::optional<std::vector<std::pair<int, int>>> leaf_edges;  // global leaf indices
};

/// Maps each keypoint to the region under its rounded position (clamped to the
/// image rectangle). Keypoints outside [0,w)x[0,h) indicate a mismatched
/// image/keypoint pair.
inline std::vector<int> assign_keypoints(const LabelMap& lm, std::span<const Keypoint> kps) {
  std::vector<int> assignment;
  assignment.reserve(kps.size());
  for (const Keypoint& kp : kps) {
    if (kp.x < 0 || kp.y < 0 || kp.x >= lm.width || kp.y >= lm.height) {
      throw DataError("assign_keypoints: keypoint out of bounds at (" + std::to_string(kp.x) +
                      ", " + std::to_string(kp.y) + ")");
    }
    const int px = std::clamp(static_cast<int>(std::lround(kp.x)), 0, lm.width - 1);
    const int py = std::clamp(static_cast<int>(std::lround(kp.y)), 0, lm.height - 1);
    assignment.push_back(lm.at(px, py) - 1);
  }
  return assignment;
}

inline double keypoint_distance(const Keypoint& a, const Keypoint& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

inline Snng build_snng(std::span<const Keypoint> members, double tau, int region = -1) {
  if (tau <= 0) throw DataError("build_snng: tau must be positive");
  Snng g;
  g.region = region;
  g.tau = tau;
  g.members.resize(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) g.members[i] = static_cast<int>(i);
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      if (keypoint_distance(members[i], members[j]) < tau) {
        g.edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
      }
    }
  }
  return g;
}

/// Complete variant: tau exceeds the maximal pairwise distance, so every pair
/// is connected.
inline Snng build_snngc(std::span<const Keypoint> members, int region = -1) {
  if (members.empty()) throw DataError("build_snngc: members must be nonempty");
  double max_dist = 0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      max_dist = std::max(max_dist, keypoint_distance(members[i], members[j]));
    }
  }
  return build_snng(members, max_dist + 1.0, region);
}

inline Arsrg build_arsrg(const std::string& image_id, const LabelMap& lm, const RegionGraph& rg,
                         std::vector<Keypoint> kps, LeafConfig config, double tau = 0) {
  if (rg.num_regions != lm.num_regions) {
    throw DataError("build_arsrg: label map and region graph disagree on region count");
  }
  Arsrg a;
  a.image_id = image_id;
  a.width = lm.width;
  a.height = lm.height;
  a.regions = rg;
  a.leaves = std::move(kps);
  a.leaf_region = assign_keypoints(lm, a.leaves);
  a.config = config;
  if (config == LeafConfig::RegionGraphBased) {
    a.tau = tau;
    std::vector<std::vector<int>> members(static_cast<std::size_t>(rg.num_regions));
    for (std::size_t i = 0; i < a.leaves.size(); ++i) {
      members[static_cast<std::size_t>(a.leaf_region[i])].push_back(static_cast<int>(i));
    }
    std::vector<std::pair<int, int>> edges;
    for (int r = 0; r < rg.num_regions; ++r) {
      std::vector<Keypoint> region_kps;
      region_kps.reserve(members[r].size());
      for (int idx : members[r]) region_kps.push_back(a.leaves[static_cast<std::size_t>(idx)]);
      const Snng g = build_snng(region_kps, tau, r);
      for (const auto& [i, j] : g.edges) {
        edges.emplace_back(members[r][static_cast<std::size_t>(i)],
                           members[r][static_cast<std::size_t>(j)]);
      }
    }
    std::sort(edges.begin(), edges.end());
    a.leaf_edges = std::move(edges);
  }
  return a;
}

namespace detail {

template <typename T>
T json_get(const nlohmann::json& j, const std::string& field) {
  if (!j.contains(field)) throw FormatError("ARSRG document: missing field \"" + field + "\"");
  try {
    return j.at(field).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("ARSRG document: bad field \"" + field + "\": " + e.what());
  }
}

}  // namespace detail

inline nlohmann::json to_json(const Arsrg& a) {
  nlohmann::json j;
  j["format"] = "ARSRG";
  j["version"] = 1;
  j["image"] = {{"id", a.image_id}, {"w", a.width}, {"h", a.height}};
  nlohmann::json regions;
  regions["n"] = a.regions.num_regions;
  regions["sizes"] = a.regions.region_sizes;
  nlohmann::json centroids = nlohmann::json::array();
  for (const auto& [cx, cy] : a.regions.region_centroids) centroids.push_back({cx, cy});
  regions["centroids"] = std::move(centroids);
  regions["adjacency"] = a.regions.edges();
  j["regions"] = std::move(regions);
  nlohmann::json leaves = nlohmann::json::array();
  for (const Keypoint& kp : a.leaves) {
    leaves.push_back({{"x", kp.x},
                      {"y", kp.y},
                      {"scale", kp.scale},
                      {"orientation", kp.orientation},
                      {"descriptor", kp.descriptor}});
  }
  j["leaves"] = std::move(leaves);
  j["leaf_region"] = a.leaf_region;
  j["config"] = a.config == LeafConfig::RegionBased ? "region" : "region-graph";
  j["tau"] = a.tau ? nlohmann::json(*a.tau) : nlohmann::json(nullptr);
  j["leaf_edges"] = a.leaf_edges ? nlohmann::json(*a.leaf_edges) : nlohmann::json(nullptr);
  return j;
}

inline std::string serialize(const Arsrg& a) { return to_json(a).dump(2) + "\n"; }

inline Arsrg from_json(const nlohmann::json& j) {
  if (detail::json_get<std::string>(j, "format") != "ARSRG") {
    throw FormatError("ARSRG document: bad \"format\"");
  }
  if (detail::json_get<int>(j, "version") != 1) {
    throw FormatError("ARSRG document: unsupported \"version\"");
  }
  Arsrg a;
  const auto image = detail::json_get<nlohmann::json>(j, "image");
  a.image_id = detail::json_get<std::string>(image, "id");
  a.width = detail::json_get<int>(image, "w");
  a.height = detail::json_get<int>(image, "h");

  const auto regions = detail::json_get<nlohmann::json>(j, "regions");
  a.regions.num_regions = detail::json_get<int>(regions, "n");
  a.regions.region_sizes = detail::json_get<std::vector<std::int64_t>>(regions, "sizes");
  const auto centroids =
      detail::json_get<std::vector<std::array<double, 2>>>(regions, "centroids");
  for (const auto& c : centroids) a.regions.region_centroids.emplace_back(c[0], c[1]);
  const int n = a.regions.num_regions;
  if (static_cast<int>(a.regions.region_sizes.size()) != n ||
      static_cast<int>(a.regions.region_centroids.size()) != n) {
    throw FormatError("ARSRG document: \"regions.sizes\"/\"regions.centroids\" length != n");
  }
  a.regions.adjacency.assign(static_cast<std::size_t>(n) * n, 0);
  for (const auto& e :
       detail::json_get<std::vector<std::array<int, 2>>>(regions, "adjacency")) {
    if (e[0] < 0 || e[1] < 0 || e[0] >= n || e[1] >= n || e[0] == e[1]) {
      throw FormatError("ARSRG document: bad edge in \"regions.adjacency\"");
    }
    a.regions.adjacency[static_cast<std::size_t>(e[0]) * n + e[1]] = 1;
    a.regions.adjacency[static_cast<std::size_t>(e[1]) * n + e[0]] = 1;
  }

  for (const auto& leaf : detail::json_get<nlohmann::json>(j, "leaves")) {
    Keypoint kp;
    kp.x = detail::json_get<double>(leaf, "x");
    kp.y = detail::json_get<double>(leaf, "y");
    kp.scale = detail::json_get<double>(leaf, "scale");
    kp.orientation = detail::json_get<double>(leaf, "orientation");
    const auto desc = detail::json_get<std::vector<float>>(leaf, "descriptor");
    if (desc.size() != 128) {
      throw FormatError("ARSRG document: \"leaves[].descriptor\" must have 128 entries");
    }
    std::copy(desc.begin(), desc.end(), kp.descriptor.begin());
    a.leaves.push_back(kp);
  }
  a.leaf_region = detail::json_get<std::vector<int>>(j, "leaf_region");
  if (a.leaf_region.size() != a.leaves.size()) {
    throw FormatError("ARSRG document: \"leaf_region\" length != leaf count");
  }
  for (int r : a.leaf_region) {
    if (r < 0 || r >= n) throw FormatError("ARSRG document: \"leaf_region\" index out of range");
  }

  const auto config = detail::json_get<std::string>(j, "config");
  if (config == "region") {
    a.config = LeafConfig::RegionBased;
  } else if (config == "region-graph") {
    a.config = LeafConfig::RegionGraphBased;
  } else {
    throw FormatError("ARSRG document: \"config\" must be \"region\" or \"region-graph\"");
  }
  if (!j.contains("tau")) throw FormatError("ARSRG document: missing field \"tau\"");
  if (!j.at("tau").is_null()) a.tau = j.at("tau").get<double>();
  if (!j.contains("leaf_edges")) {
    throw FormatError("ARSRG document: missing field \"leaf_edges\"");
  }
  if (!j.at("leaf_edges").is_null()) {
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : j.at("leaf_edges").get<std::vector<std::array<int, 2>>>()) {
      if (e[0] < 0 || e[1] < 0 || e[0] >= static_cast<int>(a.leaves.size()) ||
          e[1] >= static_cast<int>(a.leaves.size()) || e[0] == e[1]) {
        throw FormatError("ARSRG document: bad edge in \"leaf_edges\"");
      }
      edges.emplace_back(e[0], e[1]);
    }
    a.leaf_edges = std::move(edges);
  }
  if (a.config == LeafConfig::RegionGraphBased && (!a.tau || !a.leaf_edges)) {
    throw FormatError("ARSRG document: region-graph config requires \"tau\" and \"leaf_edges\"");
  }
  return a;
}

inline Arsrg deserialize(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("ARSRG document: ") + e.what());
  }
  return from_json(j);
}

inline Arsrg load_arsrg(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

inline void save_arsrg(const Arsrg& a, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << serialize(a);
  if (!out) throw IoError(path + ": write failed");
}

}  // namespace arsrg
