#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "arsrg/errors.hpp"
#include "arsrg/features.hpp"
#include "arsrg/graph.hpp"
#include "arsrg/image.hpp"
#include "arsrg/matching.hpp"
#include "arsrg/rag.hpp"
#include "arsrg/segmentation.hpp"

namespace arsrg {

/// End-to-end graph construction parameters. tau <= 0 selects the default of
/// 0.1 x image diagonal.
struct PipelineParams {
  SegmentationParams seg;
  LeafConfig config = LeafConfig::RegionBased;
  double tau = 0;
  std::optional<std::pair<int, int>> resize;  // (w, h)
};

/// Image -> ARSRG: optional resize, segmentation, RAG, keypoint detection,
/// graph assembly. Keypoints may be supplied externally instead of running the
/// built-in detector.
inline Arsrg build_graph(const std::string& image_id, const RasterImage& input,
                         const PipelineParams& params,
                         std::optional<std::vector<Keypoint>> keypoints = std::nullopt) {
  RasterImage img = input;
  if (params.resize) img = resize_image(img, params.resize->first, params.resize->second);
  const LabelMap lm = segment(img, params.seg);
  const RegionGraph rg = build_rag(lm);
  std::vector<Keypoint> kps =
      keypoints ? std::move(*keypoints) : detect_and_describe(img);
  double tau = params.tau;
  if (params.config == LeafConfig::RegionGraphBased && tau <= 0) {
    tau = 0.1 * std::hypot(img.width, img.height);
  }
  return build_arsrg(image_id, lm, rg, std::move(kps), params.config, tau);
}

inline Arsrg build_graph_from_file(const std::string& path, const std::string& image_id,
                                   const PipelineParams& params,
                                   const std::optional<std::string>& keypoints_path = {}) {
  std::optional<std::vector<Keypoint>> kps;
  if (keypoints_path) kps = load_keypoints(*keypoints_path);
  return build_graph(image_id, load_image(path), params, std::move(kps));
}

/// One dataset row: where the image lives, how it is identified, its class
/// label, and the role it plays in an experiment.
struct ManifestEntry {
  std::string path;
  std::string id;
  std::string label;
  std::string role;  // query | database | train | test | both
};

/// CSV manifest with header "path,id,label,role". Errors carry 1-based line
/// numbers. "both" marks an entry as query and database at once.
inline std::vector<ManifestEntry> load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ":1: empty manifest");
  if (line == "path,id,label,role\r") line.pop_back();
  if (line != "path,id,label,role") {
    throw FormatError(path + ":1: expected header \"path,id,label,role\"");
  }
  std::vector<ManifestEntry> entries;
  std::set<std::string> seen_ids;
  int line_no = 1;
  while (std::getline(in, line)) {
    line_no++;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    ManifestEntry e;
    if (!std::getline(row, e.path, ',') || !std::getline(row, e.id, ',') ||
        !std::getline(row, e.label, ',') || !std::getline(row, e.role)) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": expected 4 columns");
    }
    if (e.role != "query" && e.role != "database" && e.role != "train" && e.role != "test" &&
        e.role != "both") {
      throw FormatError(path + ":" + std::to_string(line_no) + ": bad role \"" + e.role + "\"");
    }
    if (!seen_ids.insert(e.id).second) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": duplicate id \"" + e.id + "\"");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace arsrg
