#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "arsrg/errors.hpp"
#include "arsrg/graph.hpp"

namespace arsrg {

struct MatchParams {
  double rho = 0.7;            // ratio-test threshold in (0, 1]
  std::int64_t min_region_px = 50;  // regions below this are dropped before matching
};

/// Accepted descriptor pair: query leaf index, target leaf index, distance.
struct MatchPair {
  int query_leaf;
  int target_leaf;
  double distance;

  bool operator==(const MatchPair&) const = default;
};

struct RegionPairCount {
  int query_region;
  int target_region;
  int matches;
};

struct MatchReport {
  std::vector<MatchPair> pairs;
  std::vector<RegionPairCount> per_region;
  double score = 0;
  MatchParams params;
};

inline double descriptor_distance(std::span<const float> a, std::span<const float> b) {
  if (a.size() != 128 || b.size() != 128) {
    throw DataError("descriptor_distance: descriptors must have 128 entries");
  }
  double acc = 0;
  for (std::size_t i = 0; i < 128; ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

/// Lowe ratio test: a query leaf matches its nearest target iff the
/// nearest/second-nearest distance ratio is strictly below rho. Nearest-
/// neighbor ties break toward the lower target index. Targets with fewer than
/// two leaves yield no matches.
inline std::vector<MatchPair> ratio_test_match(std::span<const int> query_leaves,
                                               std::span<const int> target_leaves,
                                               const std::vector<Keypoint>& query_kps,
                                               const std::vector<Keypoint>& target_kps,
                                               double rho) {
  if (rho <= 0 || rho > 1) throw DataError("ratio_test_match: rho must be in (0, 1]");
  std::vector<MatchPair> out;
  if (target_leaves.size() < 2) return out;
  for (int q : query_leaves) {
    double d1 = std::numeric_limits<double>::infinity();
    double d2 = std::numeric_limits<double>::infinity();
    int best = -1;
    for (int t : target_leaves) {
      const double d = descriptor_distance(query_kps[static_cast<std::size_t>(q)].descriptor,
                                           target_kps[static_cast<std::size_t>(t)].descriptor);
      if (d < d1) {
        d2 = d1;
        d1 = d;
        best = t;
      } else if (d < d2) {
        d2 = d;
      }
    }
    // d2 == 0 means the nearest two are both exact duplicates: ambiguous, reject
    if (d2 > 0 && d1 / d2 < rho) out.push_back({q, best, d1});
  }
  return out;
}

/// Asymmetric region-by-region comparison. Undersized regions on both sides
/// are dropped first; each surviving query region is matched against every
/// surviving target region by the ratio test and keeps the target region with
/// the most accepted pairs (ties: larger target region, then lower index).
/// The score is the accepted-pair count over the surviving query leaf count.
inline MatchReport match_arsrg(const Arsrg& query, const Arsrg& target,
                               const MatchParams& params = {}) {
  const std::vector<bool> qmask = region_filter_mask(query.regions, params.min_region_px);
  const std::vector<bool> tmask = region_filter_mask(target.regions, params.min_region_px);

  auto group_leaves = [](const Arsrg& a, const std::vector<bool>& mask) {
    std::vector<std::vector<int>> groups(a.regions.region_sizes.size());
    for (std::size_t i = 0; i < a.leaves.size(); ++i) {
      const int r = a.leaf_region[i];
      if (mask[static_cast<std::size_t>(r)]) {
        groups[static_cast<std::size_t>(r)].push_back(static_cast<int>(i));
      }
    }
    return groups;
  };
  const auto qgroups = group_leaves(query, qmask);
  const auto tgroups = group_leaves(target, tmask);

  std::size_t surviving_query_leaves = 0;
  for (const auto& g : qgroups) surviving_query_leaves += g.size();
  if (surviving_query_leaves == 0) {
    throw DataError("match_arsrg: query has no surviving leaves (filter too aggressive)");
  }

  MatchReport report;
  report.params = params;
  std::vector<MatchPair> all_pairs;
  for (std::size_t qr = 0; qr < qgroups.size(); ++qr) {
    if (qgroups[qr].empty()) continue;
    std::vector<MatchPair> best_pairs;
    int best_tr = -1;
    std::int64_t best_tr_size = -1;
    for (std::size_t tr = 0; tr < tgroups.size(); ++tr) {
      if (!tmask[tr]) continue;
      auto pairs = ratio_test_match(qgroups[qr], tgroups[tr], query.leaves, target.leaves,
                                    params.rho);
      const std::int64_t tr_size = target.regions.region_sizes[tr];
      const bool better = pairs.size() > best_pairs.size() ||
                          (pairs.size() == best_pairs.size() && !pairs.empty() &&
                           tr_size > best_tr_size);
      if (better) {
        best_pairs = std::move(pairs);
        best_tr = static_cast<int>(tr);
        best_tr_size = tr_size;
      }
    }
    if (!best_pairs.empty()) {
      report.per_region.push_back(
          {static_cast<int>(qr), best_tr, static_cast<int>(best_pairs.size())});
      all_pairs.insert(all_pairs.end(), best_pairs.begin(), best_pairs.end());
    }
  }

  // one pair per query leaf, smallest distance wins
  std::sort(all_pairs.begin(), all_pairs.end(), [](const MatchPair& a, const MatchPair& b) {
    return std::tie(a.query_leaf, a.distance, a.target_leaf) <
           std::tie(b.query_leaf, b.distance, b.target_leaf);
  });
  for (const MatchPair& p : all_pairs) {
    if (report.pairs.empty() || report.pairs.back().query_leaf != p.query_leaf) {
      report.pairs.push_back(p);
    }
  }
  report.score = static_cast<double>(report.pairs.size()) /
                 static_cast<double>(std::max<std::size_t>(1, surviving_query_leaves));
  return report;
}

struct RankedEntry {
  std::string id;
  double score;
  int rank;  // 1-based
};

using RankedList = std::vector<RankedEntry>;

/// Scores the query against every database graph and sorts by score
/// descending; equal scores keep the original database order.
inline RankedList rank_database(const Arsrg& query, std::span<const Arsrg> db,
                                const MatchParams& params = {}) {
  if (db.empty()) throw DataError("rank_database: database is empty");
  RankedList out;
  out.reserve(db.size());
  for (const Arsrg& target : db) {
    out.push_back({target.image_id, match_arsrg(query, target, params).score, 0});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedEntry& a, const RankedEntry& b) { return a.score > b.score; });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i) + 1;
  return out;
}

/// Mean Reciprocal Rank over per-query ranks of the first relevant result.
inline double mrr(std::span<const int> ranks_of_relevant) {
  if (ranks_of_relevant.empty()) throw DataError("mrr: empty rank list");
  double sum = 0;
  for (int r : ranks_of_relevant) {
    if (r < 1) throw DataError("mrr: ranks must be >= 1");
    sum += 1.0 / r;
  }
  return sum / static_cast<double>(ranks_of_relevant.size());
}

/// Precision and recall of the top-k ranked entries against a relevant id set.
inline std::pair<double, double> precision_recall(const RankedList& ranked,
                                                  const std::set<std::string>& relevant,
                                                  int cutoff) {
  if (cutoff < 1) throw DataError("precision_recall: cutoff must be >= 1");
  if (relevant.empty()) throw DataError("precision_recall: empty relevant set");
  int hits = 0;
  for (const RankedEntry& e : ranked) {
    if (e.rank <= cutoff && relevant.count(e.id)) hits++;
  }
  return {static_cast<double>(hits) / cutoff,
          static_cast<double>(hits) / static_cast<double>(relevant.size())};
}

inline nlohmann::json to_json(const MatchReport& r) {
  nlohmann::json j;
  j["format"] = "ARSRG-MATCH";
  j["version"] = 1;
  j["params"] = {{"rho", r.params.rho}, {"min_region_px", r.params.min_region_px}};
  j["score"] = r.score;
  nlohmann::json pairs = nlohmann::json::array();
  for (const MatchPair& p : r.pairs) {
    pairs.push_back({{"query_leaf", p.query_leaf},
                     {"target_leaf", p.target_leaf},
                     {"distance", p.distance}});
  }
  j["pairs"] = std::move(pairs);
  nlohmann::json per_region = nlohmann::json::array();
  for (const RegionPairCount& c : r.per_region) {
    per_region.push_back({{"query_region", c.query_region},
                          {"target_region", c.target_region},
                          {"matches", c.matches}});
  }
  j["per_region"] = std::move(per_region);
  return j;
}

}  // namespace arsrg
