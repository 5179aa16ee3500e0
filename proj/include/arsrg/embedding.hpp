#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "arsrg/errors.hpp"
#include "arsrg/graph.hpp"

namespace arsrg {

/// Visual-word codebook: k centers in descriptor space.
struct Codebook {
  int k = 0;
  std::vector<std::array<double, 128>> centers;
  std::uint64_t seed = 0;
};

/// Bag-of-words histogram over codebook assignments.
struct Histogram {
  std::vector<double> counts;
  bool normalized = false;
};

namespace detail {

inline double center_dist2(const std::array<double, 128>& c, std::span<const float> d) {
  double acc = 0;
  for (std::size_t i = 0; i < 128; ++i) {
    const double diff = c[i] - d[i];
    acc += diff * diff;
  }
  return acc;
}

inline std::size_t nearest_center(const std::vector<std::array<double, 128>>& centers,
                                  std::span<const float> d) {
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_j = 0;
  for (std::size_t j = 0; j < centers.size(); ++j) {
    const double dist = center_dist2(centers[j], d);
    if (dist < best) {
      best = dist;
      best_j = j;
    }
  }
  return best_j;
}

}  // namespace detail

/// K-means over the pooled leaf descriptors of the training graphs.
/// k-means++ seeding from the given seed, at most 100 iterations, stops early
/// when the total centroid shift drops below 1e-6. Deterministic.
inline Codebook build_codebook(std::span<const Arsrg> training, int k, std::uint64_t seed) {
  if (k < 1) throw DataError("build_codebook: k must be >= 1");
  std::vector<const Keypoint*> pool;
  for (const Arsrg& a : training) {
    for (const Keypoint& kp : a.leaves) pool.push_back(&kp);
  }
  if (pool.size() < static_cast<std::size_t>(k)) {
    throw DataError("build_codebook: fewer training descriptors (" +
                    std::to_string(pool.size()) + ") than words (" + std::to_string(k) + ")");
  }

  std::mt19937_64 rng(seed);
  Codebook cb;
  cb.k = k;
  cb.seed = seed;
  auto as_center = [](const Keypoint* kp) {
    std::array<double, 128> c;
    for (std::size_t i = 0; i < 128; ++i) c[i] = kp->descriptor[i];
    return c;
  };

  // k-means++ seeding
  std::vector<double> d2(pool.size(), std::numeric_limits<double>::infinity());
  {
    std::uniform_int_distribution<std::size_t> first(0, pool.size() - 1);
    cb.centers.push_back(as_center(pool[first(rng)]));
  }
  while (cb.centers.size() < static_cast<std::size_t>(k)) {
    double total = 0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      d2[i] = std::min(d2[i], detail::center_dist2(cb.centers.back(), pool[i]->descriptor));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng), acc = 0;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        acc += d2[i];
        if (acc >= r) {
          pick = i;
          break;
        }
      }
    } else {
      // all remaining points coincide with a center; take the first unused
      pick = cb.centers.size() % pool.size();
    }
    cb.centers.push_back(as_center(pool[pick]));
  }

  std::vector<std::size_t> assign(pool.size(), 0);
  for (int iter = 0; iter < 100; ++iter) {
    for (std::size_t i = 0; i < pool.size(); ++i) {
      assign[i] = detail::nearest_center(cb.centers, pool[i]->descriptor);
    }
    std::vector<std::array<double, 128>> sums(
        static_cast<std::size_t>(k), std::array<double, 128>{});
    std::vector<std::size_t> mass(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      for (std::size_t c = 0; c < 128; ++c) sums[assign[i]][c] += pool[i]->descriptor[c];
      mass[assign[i]]++;
    }
    double shift = 0;
    for (std::size_t j = 0; j < cb.centers.size(); ++j) {
      if (mass[j] == 0) continue;
      std::array<double, 128> next;
      for (std::size_t c = 0; c < 128; ++c) next[c] = sums[j][c] / static_cast<double>(mass[j]);
      double delta = 0;
      for (std::size_t c = 0; c < 128; ++c) {
        const double d = next[c] - cb.centers[j][c];
        delta += d * d;
      }
      shift += std::sqrt(delta);
      cb.centers[j] = next;
    }
    if (shift < 1e-6) break;
  }
  return cb;
}

/// Hard-assignment bag-of-words embedding: each leaf descriptor votes for its
/// nearest center (ties to the lowest index). Empty graphs embed as the zero
/// histogram regardless of the normalize flag.
inline Histogram embed(const Arsrg& a, const Codebook& cb, bool normalize) {
  Histogram h;
  h.counts.assign(static_cast<std::size_t>(cb.k), 0.0);
  for (const Keypoint& kp : a.leaves) {
    h.counts[detail::nearest_center(cb.centers, kp.descriptor)] += 1.0;
  }
  if (normalize && !a.leaves.empty()) {
    const double total = static_cast<double>(a.leaves.size());
    for (double& c : h.counts) c /= total;
    h.normalized = true;
  }
  return h;
}

/// Majority vote among the k nearest training histograms (Euclidean distance,
/// distance ties to the earlier training item); a voting tie falls back to the
/// single nearest neighbor's label.
inline std::string knn_classify(const Histogram& query,
                                std::span<const std::pair<Histogram, std::string>> train,
                                int k_nn) {
  if (train.empty()) throw DataError("knn_classify: empty training set");
  if (k_nn < 1) throw DataError("knn_classify: k_nn must be >= 1");
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto& h = train[i].first.counts;
    if (h.size() != query.counts.size()) {
      throw DataError("knn_classify: histogram dimensions differ");
    }
    double acc = 0;
    for (std::size_t c = 0; c < h.size(); ++c) {
      const double d = h[c] - query.counts[c];
      acc += d * d;
    }
    dist.emplace_back(acc, i);
  }
  std::sort(dist.begin(), dist.end());
  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k_nn), dist.size());
  std::map<std::string, int> votes;
  for (std::size_t i = 0; i < kk; ++i) votes[train[dist[i].second].second]++;
  int best = 0;
  bool tie = false;
  std::string label;
  for (const auto& [l, v] : votes) {
    if (v > best) {
      best = v;
      label = l;
      tie = false;
    } else if (v == best) {
      tie = true;
    }
  }
  if (tie) return train[dist[0].second].second;
  return label;
}

inline nlohmann::json to_json(const Codebook& cb) {
  nlohmann::json j;
  j["format"] = "ARSRG-CB";
  j["version"] = 1;
  j["k"] = cb.k;
  j["seed"] = cb.seed;
  j["centers"] = cb.centers;
  return j;
}

inline Codebook codebook_from_json(const nlohmann::json& j) {
  if (detail::json_get<std::string>(j, "format") != "ARSRG-CB") {
    throw FormatError("codebook: bad \"format\"");
  }
  if (detail::json_get<int>(j, "version") != 1) throw FormatError("codebook: bad \"version\"");
  Codebook cb;
  cb.k = detail::json_get<int>(j, "k");
  cb.seed = j.value("seed", std::uint64_t{0});
  cb.centers = detail::json_get<std::vector<std::array<double, 128>>>(j, "centers");
  if (cb.k < 1 || static_cast<int>(cb.centers.size()) != cb.k) {
    throw FormatError("codebook: \"centers\" length != k");
  }
  return cb;
}

inline Codebook load_codebook(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  return codebook_from_json(j);
}

inline void save_codebook(const Codebook& cb, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << to_json(cb).dump(2) << "\n";
  if (!out) throw IoError(path + ": write failed");
}

}  // namespace arsrg
