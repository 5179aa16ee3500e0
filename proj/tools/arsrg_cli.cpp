// Command-line front end for the ARSRG pipeline: graph construction, pairwise
// matching, retrieval experiments, codebook training and bag-of-words
// embedding.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "arsrg/embedding.hpp"
#include "arsrg/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

struct BuildOptions {
  int colors = 16;
  int connectivity = 8;
  int min_region_size = 50;
  std::uint64_t seed = 1;
  std::string leaf_config = "region";
  double tau = 0;
  std::string resize;  // "WxH"
  std::string keypoints_from;

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--colors", colors, "Quantization palette size")->check(CLI::Range(2, 256));
    cmd->add_option("--connectivity", connectivity, "Pixel connectivity")
        ->check(CLI::IsMember({4, 8}));
    cmd->add_option("--min-region-size", min_region_size, "Minimum region area in pixels")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "PRNG seed for deterministic quantization");
    cmd->add_option("--leaf-config", leaf_config, "Leaf configuration")
        ->check(CLI::IsMember({"region", "region-graph"}));
    cmd->add_option("--tau", tau, "SNNG distance threshold (default 0.1 x image diagonal)");
    cmd->add_option("--resize", resize, "Rescale inputs to WxH before processing (e.g. 150x150)");
    cmd->add_option("--keypoints-from", keypoints_from,
                    "Read keypoints from an ARSRG-KP file instead of the built-in detector");
  }

  arsrg::PipelineParams pipeline() const {
    arsrg::PipelineParams p;
    p.seg.num_colors = colors;
    p.seg.connectivity = connectivity;
    p.seg.min_region_px = min_region_size;
    p.seg.seed = seed;
    p.config = leaf_config == "region-graph" ? arsrg::LeafConfig::RegionGraphBased
                                             : arsrg::LeafConfig::RegionBased;
    p.tau = tau;
    if (!resize.empty()) {
      int w = 0, h = 0;
      if (std::sscanf(resize.c_str(), "%dx%d", &w, &h) != 2 || w < 1 || h < 1) {
        throw arsrg::DataError("--resize expects WxH with positive dimensions");
      }
      p.resize = {w, h};
    }
    return p;
  }
};

arsrg::Arsrg load_or_build(const std::string& path, const std::string& id,
                           const arsrg::PipelineParams& params) {
  if (path.ends_with(".arsrg.json") || path.ends_with(".json")) {
    arsrg::Arsrg a = arsrg::load_arsrg(path);
    a.image_id = id;
    return a;
  }
  return arsrg::build_graph_from_file(path, id, params);
}

int cmd_build(const std::vector<std::string>& images, const BuildOptions& opts,
              const std::string& outdir) {
  const arsrg::PipelineParams params = opts.pipeline();
  fs::create_directories(outdir);
  for (const std::string& path : images) {
    const std::string id = fs::path(path).stem().string();
    std::optional<std::string> kp_path;
    if (!opts.keypoints_from.empty()) {
      if (images.size() > 1) {
        throw arsrg::DataError("--keypoints-from works with a single input image");
      }
      kp_path = opts.keypoints_from;
    }
    const arsrg::Arsrg graph = arsrg::build_graph_from_file(path, id, params, kp_path);
    const std::string out = (fs::path(outdir) / (id + ".arsrg.json")).string();
    arsrg::save_arsrg(graph, out);
    std::cout << out << ": " << graph.regions.num_regions << " regions, "
              << graph.leaves.size() << " keypoints\n";
  }
  return 0;
}

int cmd_match(const std::string& query_path, const std::string& target_path, double rho,
              int min_region_size, const std::string& out) {
  const arsrg::Arsrg query = arsrg::load_arsrg(query_path);
  const arsrg::Arsrg target = arsrg::load_arsrg(target_path);
  const arsrg::MatchReport report =
      arsrg::match_arsrg(query, target, {rho, min_region_size});
  const std::string doc = arsrg::to_json(report).dump(2) + "\n";
  if (out.empty()) {
    std::cout << doc;
  } else {
    std::ofstream f(out);
    f << doc;
    if (!f) throw arsrg::IoError(out + ": write failed");
    std::cout << "score " << report.score << " (" << report.pairs.size() << " pairs)\n";
  }
  return 0;
}

int cmd_retrieve(const std::string& manifest_path, const BuildOptions& opts,
                 const std::vector<double>& rho_grid, int cutoff, const std::string& outdir) {
  const auto manifest = arsrg::load_manifest(manifest_path);
  const arsrg::PipelineParams params = opts.pipeline();

  std::vector<arsrg::Arsrg> queries, database;
  std::vector<std::string> query_labels;
  std::map<std::string, std::string> db_labels;
  for (const auto& e : manifest) {
    if (e.role == "query" || e.role == "both") {
      queries.push_back(load_or_build(e.path, e.id, params));
      query_labels.push_back(e.label);
    }
    if (e.role == "database" || e.role == "both") {
      database.push_back(load_or_build(e.path, e.id, params));
      db_labels[e.id] = e.label;
    }
  }
  if (queries.empty()) throw arsrg::DataError(manifest_path + ": no query entries");
  if (database.empty()) throw arsrg::DataError(manifest_path + ": no database entries");

  fs::create_directories(outdir);
  std::ofstream summary((fs::path(outdir) / "summary.csv").string());
  summary << "rho,mrr,precision,recall\n";
  for (double rho : rho_grid) {
    char rho_tag[32];
    std::snprintf(rho_tag, sizeof(rho_tag), "%.2f", rho);
    std::ofstream ranking((fs::path(outdir) / ("ranking_rho" + std::string(rho_tag) + ".csv"))
                              .string());
    ranking << "query_id,rank,target_id,score\n";
    std::vector<int> first_relevant_ranks;
    double precision_sum = 0, recall_sum = 0;
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
      const arsrg::MatchParams mp{rho, opts.min_region_size};
      const arsrg::RankedList ranked = arsrg::rank_database(queries[qi], database, mp);
      std::set<std::string> relevant;
      for (const auto& [id, label] : db_labels) {
        if (label == query_labels[qi]) relevant.insert(id);
      }
      if (relevant.empty()) {
        throw arsrg::DataError("query \"" + queries[qi].image_id +
                               "\": no database entry shares its label");
      }
      int first_rank = 0;
      for (const auto& e : ranked) {
        char score_buf[32];
        std::snprintf(score_buf, sizeof(score_buf), "%.6f", e.score);
        ranking << queries[qi].image_id << "," << e.rank << "," << e.id << "," << score_buf
                << "\n";
        if (first_rank == 0 && relevant.count(e.id)) first_rank = e.rank;
      }
      first_relevant_ranks.push_back(first_rank);
      const auto [p, r] = arsrg::precision_recall(ranked, relevant, cutoff);
      precision_sum += p;
      recall_sum += r;
    }
    const double mrr_value = arsrg::mrr(first_relevant_ranks);
    const double p = precision_sum / static_cast<double>(queries.size());
    const double r = recall_sum / static_cast<double>(queries.size());
    char line[160];
    std::snprintf(line, sizeof(line), "%.2f,%.6f,%.6f,%.6f", rho, mrr_value, p, r);
    summary << line << "\n";
    std::cout << "rho=" << rho_tag << " MRR=" << mrr_value << " P@" << cutoff << "=" << p
              << " R@" << cutoff << "=" << r << "\n";
  }
  return 0;
}

int cmd_codebook(const std::string& manifest_path, const std::vector<std::string>& graphs,
                 const BuildOptions& opts, int k, const std::string& out) {
  const arsrg::PipelineParams params = opts.pipeline();
  std::vector<arsrg::Arsrg> training;
  if (!manifest_path.empty()) {
    for (const auto& e : arsrg::load_manifest(manifest_path)) {
      if (e.role == "train") training.push_back(load_or_build(e.path, e.id, params));
    }
    if (training.empty()) throw arsrg::DataError(manifest_path + ": no train entries");
  }
  for (const std::string& g : graphs) {
    training.push_back(load_or_build(g, fs::path(g).stem().string(), params));
  }
  if (training.empty()) throw arsrg::DataError("codebook: no training graphs given");
  const arsrg::Codebook cb = arsrg::build_codebook(training, k, opts.seed);
  arsrg::save_codebook(cb, out);
  std::cout << out << ": " << cb.k << " words\n";
  return 0;
}

int cmd_embed(const std::string& manifest_path, const std::vector<std::string>& graphs,
              const BuildOptions& opts, const std::string& codebook_path, bool normalize,
              const std::string& out) {
  const arsrg::PipelineParams params = opts.pipeline();
  const arsrg::Codebook cb = arsrg::load_codebook(codebook_path);
  std::vector<arsrg::Arsrg> items;
  if (!manifest_path.empty()) {
    for (const auto& e : arsrg::load_manifest(manifest_path)) {
      items.push_back(load_or_build(e.path, e.id, params));
    }
  }
  for (const std::string& g : graphs) {
    items.push_back(load_or_build(g, fs::path(g).stem().string(), params));
  }
  if (items.empty()) throw arsrg::DataError("embed: no graphs given");
  std::ofstream f(out);
  f << "image_id";
  for (int c = 0; c < cb.k; ++c) f << ",c" << c;
  f << "\n";
  for (const arsrg::Arsrg& a : items) {
    const arsrg::Histogram h = arsrg::embed(a, cb, normalize);
    f << a.image_id;
    char buf[32];
    for (double c : h.counts) {
      std::snprintf(buf, sizeof(buf), ",%.6f", c);
      f << buf;
    }
    f << "\n";
  }
  if (!f) throw arsrg::IoError(out + ": write failed");
  std::cout << out << ": " << items.size() << " rows\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ARSRG: attributed region-graph image representation toolkit"};
  app.require_subcommand(1);

  // build
  auto* build = app.add_subcommand("build", "Build .arsrg.json graphs from images");
  std::vector<std::string> build_images;
  std::string build_outdir = ".";
  BuildOptions build_opts;
  build->add_option("images", build_images, "Input images (PNG/PPM/PGM)")->required();
  build->add_option("-o,--output-dir", build_outdir, "Output directory");
  build_opts.add_flags(build);

  // match
  auto* match = app.add_subcommand("match", "Match two serialized graphs");
  std::string match_query, match_target, match_out;
  double match_rho = 0.7;
  int match_min_region = 50;
  match->add_option("query", match_query, "Query .arsrg.json")->required();
  match->add_option("target", match_target, "Target .arsrg.json")->required();
  match->add_option("--rho", match_rho, "Ratio-test threshold")
      ->check(CLI::Range(1e-9, 1.0));
  match->add_option("--min-region-size", match_min_region, "Region filter threshold");
  match->add_option("-o,--output", match_out, "Write the match report here (default stdout)");

  // retrieve
  auto* retrieve = app.add_subcommand("retrieve", "Rank a database for each query");
  std::string retrieve_manifest, retrieve_outdir = ".";
  std::vector<double> rho_grid;
  double retrieve_rho = 0.7;
  int retrieve_cutoff = 5;
  BuildOptions retrieve_opts;
  retrieve->add_option("-m,--manifest", retrieve_manifest, "Dataset manifest CSV")->required();
  retrieve->add_option("--rho", retrieve_rho, "Single ratio-test threshold");
  retrieve->add_option("--rho-grid", rho_grid, "Comma-separated rho sweep (e.g. 0.6,0.7,0.8)")
      ->delimiter(',');
  retrieve->add_option("--cutoff", retrieve_cutoff, "Top-k cutoff for precision/recall")
      ->check(CLI::PositiveNumber);
  retrieve->add_option("-o,--output-dir", retrieve_outdir, "Directory for ranking/summary CSVs");
  retrieve_opts.add_flags(retrieve);

  // codebook
  auto* codebook = app.add_subcommand("codebook", "Train a bag-of-words codebook");
  std::string cb_manifest, cb_out = "codebook.json";
  std::vector<std::string> cb_graphs;
  int cb_k = 64;
  BuildOptions cb_opts;
  codebook->add_option("graphs", cb_graphs, "Training graphs or images");
  codebook->add_option("-m,--manifest", cb_manifest, "Manifest CSV (uses role=train entries)");
  codebook->add_option("-k,--words", cb_k, "Codebook size")->check(CLI::PositiveNumber);
  codebook->add_option("-o,--output", cb_out, "Codebook output path");
  cb_opts.add_flags(codebook);

  // embed
  auto* embed = app.add_subcommand("embed", "Embed graphs as word histograms");
  std::string em_manifest, em_codebook, em_out = "embeddings.csv";
  std::vector<std::string> em_graphs;
  bool em_normalize = false;
  BuildOptions em_opts;
  embed->add_option("graphs", em_graphs, "Graphs or images to embed");
  embed->add_option("-m,--manifest", em_manifest, "Manifest CSV (all entries embedded)");
  embed->add_option("-c,--codebook", em_codebook, "Trained codebook")->required();
  embed->add_flag("--normalize", em_normalize, "L1-normalize histograms");
  embed->add_option("-o,--output", em_out, "Embedding CSV output path");
  em_opts.add_flags(embed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (build->parsed()) return cmd_build(build_images, build_opts, build_outdir);
    if (match->parsed()) {
      return cmd_match(match_query, match_target, match_rho, match_min_region, match_out);
    }
    if (retrieve->parsed()) {
      if (rho_grid.empty()) rho_grid = {retrieve_rho};
      return cmd_retrieve(retrieve_manifest, retrieve_opts, rho_grid, retrieve_cutoff,
                          retrieve_outdir);
    }
    if (codebook->parsed()) return cmd_codebook(cb_manifest, cb_graphs, cb_opts, cb_k, cb_out);
    if (embed->parsed()) {
      return cmd_embed(em_manifest, em_graphs, em_opts, em_codebook, em_normalize, em_out);
    }
  } catch (const arsrg::InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
