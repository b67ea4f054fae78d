// SPDX-License-Identifier: Apache-2.0
// Command-line driver: dataset generation, signature synthesis, preprocessing,
// training, ranking, evaluation, and sensitivity sweeps.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "xreid/eval.hpp"
#include "xreid/io.hpp"
#include "xreid/pipeline.hpp"
#include "xreid/rng.hpp"
#include "xreid/svg.hpp"

namespace fs = std::filesystem;
using namespace xreid;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out = "out";
  std::uint64_t seed = 1;
  int threads = 1;
  std::string ablation = "full";
  std::string scorer = "model";
  std::vector<std::string> sets;
};

void add_common(CLI::App* sub, CommonOpts& o) {
  sub->add_option("--config", o.config_path, "key=value config file");
  sub->add_option("--seed", o.seed, "run seed");
  sub->add_option("--out", o.out, "output directory (env XREID_OUT overrides)");
  sub->add_option("--threads", o.threads, "worker cap for parallel sections");
  sub->add_option("--ablation", o.ablation, "full | noST | noAtt | noTL");
  sub->add_option("--scorer", o.scorer, "model | emd");
  sub->add_option("--set", o.sets, "config override key=value (repeatable)");
}

RunConfig load_config(const CommonOpts& o) {
  RunConfig rc;
  if (!o.config_path.empty()) rc.parse_file(o.config_path);
  for (const std::string& kv : o.sets) {
    std::size_t eq = kv.find('=');
    require(eq != std::string::npos, Err::ConfigError, "--set needs key=value, got: " + kv);
    rc.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return rc;
}

Ablation parse_ablation(const std::string& s) {
  if (s == "full") return Ablation::Full;
  if (s == "noST") return Ablation::NoST;
  if (s == "noAtt") return Ablation::NoAtt;
  if (s == "noTL") return Ablation::NoTL;
  fail(Err::ConfigError, "unknown ablation: " + s);
}

Scorer parse_scorer(const std::string& s) {
  if (s == "model") return Scorer::Model;
  if (s == "emd") return Scorer::Emd;
  fail(Err::ConfigError, "unknown scorer: " + s);
}

const char* part_name(BodyPart p) {
  switch (p) {
    case BodyPart::Head: return "head";
    case BodyPart::Torso: return "torso";
    case BodyPart::LeftArm: return "left_arm";
    case BodyPart::RightArm: return "right_arm";
    case BodyPart::LeftLeg: return "left_leg";
    case BodyPart::RightLeg: return "right_leg";
  }
  return "?";
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), Err::IoError, "cannot open " + path.string() + " for writing");
  return f;
}

// ----- file-backed dataset assembly ------------------------------------------

std::map<std::pair<int, int>, std::vector<LabeledRecord>> group_labeled(
    const std::vector<LabeledRecord>& recs) {
  std::map<std::pair<int, int>, std::vector<LabeledRecord>> groups;
  for (const LabeledRecord& r : recs) groups[{r.id, r.walk}].push_back(r);
  return groups;
}

std::map<std::pair<int, int>, std::vector<RadarRecord>> group_radar(
    const std::vector<RadarRecord>& recs) {
  std::map<std::pair<int, int>, std::vector<RadarRecord>> groups;
  for (const RadarRecord& r : recs) groups[{r.id, r.walk}].push_back(r);
  return groups;
}

std::vector<SignatureFrame> to_sig_frames(const std::vector<LabeledRecord>& recs) {
  std::vector<SignatureFrame> out;
  out.reserve(recs.size());
  for (const LabeledRecord& r : recs) out.push_back({r.t, r.points});
  return out;
}

std::vector<RadarFrame> to_radar_frames(const std::vector<RadarRecord>& recs) {
  std::vector<RadarFrame> out;
  out.reserve(recs.size());
  for (const RadarRecord& r : recs) out.push_back({r.t, r.points});
  return out;
}

MeshSequence to_mesh_sequence(const std::vector<LabeledRecord>& recs) {
  MeshSequence ms;
  for (const LabeledRecord& r : recs) {
    MeshFrame f;
    f.t = r.t;
    f.points = r.points;
    Vec3 c = Vec3::Zero();
    double zmin = 1e300, zmax = -1e300;
    for (const LabeledPoint& p : r.points) {
      c += p.position;
      zmin = std::min(zmin, p.position.z());
      zmax = std::max(zmax, p.position.z());
    }
    if (!r.points.empty()) {
      c /= static_cast<double>(r.points.size());
      c.z() = 0.5 * (zmin + zmax);  // same center rule as the simulator
    }
    f.subject_center = c;
    ms.frames.push_back(std::move(f));
  }
  return ms;
}

// dataset directory -> bundle; the on-file signature serves both the
// synchronized and the retrieval roles
DatasetBundle bundle_from_files(const RunConfig& rc, std::uint64_t seed, const std::string& dir,
                                bool need_mesh) {
  DatasetBundle bundle;
  bundle.cfg = materialize(rc);
  bundle.seed = seed;
  auto radar_groups = group_radar(read_radar_file(dir + "/radar.jsonl"));
  auto sig_groups = group_labeled(read_labeled_file(dir + "/signature.jsonl"));
  std::map<std::pair<int, int>, std::vector<LabeledRecord>> mesh_groups;
  if (need_mesh) mesh_groups = group_labeled(read_labeled_file(dir + "/mesh.jsonl"));
  require(!radar_groups.empty(), Err::EmptyInput, "no radar records in " + dir);

  for (const auto& [key, radar_recs] : radar_groups) {
    auto sit = sig_groups.find(key);
    require(sit != sig_groups.end(), Err::InvalidParams,
            "identity " + std::to_string(key.first) + " walk " + std::to_string(key.second) +
                " has radar but no signature records");
    WalkData w;
    w.identity = key.first;
    w.walk = key.second;
    w.radar = to_radar_frames(radar_recs);
    w.gallery_signature = to_sig_frames(sit->second);
    w.gt_signature = w.gallery_signature;
    if (need_mesh) {
      auto mit = mesh_groups.find(key);
      require(mit != mesh_groups.end(), Err::InvalidParams,
              "the raw-mesh ablation needs mesh records for every walk");
      for (const LabeledRecord& r : mit->second) {
        SignatureFrame sf;
        sf.t = r.t;
        int n = static_cast<int>(r.points.size());
        int keep = std::min(n, kNoStPointBudget);
        for (int i = 0; i < keep; ++i)
          sf.points.push_back(r.points[static_cast<std::size_t>(i) * n / keep]);
        w.mesh_subsample.push_back(std::move(sf));
      }
    }
    bundle.walks.push_back(std::move(w));
  }
  return bundle;
}

void write_cmc_csv(const fs::path& path, const MetaInfo& meta, const CMCResult& r) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t k = 0; k < r.top_k.size(); ++k)
    rows.push_back({std::to_string(k + 1), fmt6(r.top_k[k])});
  auto f = open_out(path);
  write_csv(f, &meta, {"k", "accuracy"}, rows);
}

void write_cmc_svg(const fs::path& path, const MetaInfo& meta, const CMCResult& r,
                   const std::string& title) {
  SvgSeries s;
  s.label = "cmc";
  for (std::size_t k = 0; k < r.top_k.size(); ++k) {
    s.x.push_back(static_cast<double>(k + 1));
    s.y.push_back(r.top_k[k]);
  }
  auto f = open_out(path);
  write_line_plot_svg(f, title, "k", "top-k accuracy", {s}, &meta);
}

// ----- subcommands -----------------------------------------------------------

void cmd_gen(const RunConfig& rc, const CommonOpts& o) {
  PipelineConfig cfg = materialize(rc);
  fs::create_directories(o.out);
  MetaInfo meta{&rc, o.seed, {}};
  char eps_buf[64];
  std::snprintf(eps_buf, sizeof(eps_buf), "%.17g", cfg.epsilon_rad);
  MetaInfo sig_meta{&rc, o.seed, {{"epsilon_rad", eps_buf}, {"radar_position", "0 0 0"}}};

  auto radar_f = open_out(fs::path(o.out) / "radar.jsonl");
  write_meta(radar_f, meta);
  auto sig_f = open_out(fs::path(o.out) / "signature.jsonl");
  write_meta(sig_f, sig_meta);
  std::ofstream mesh_f;
  if (cfg.write_mesh) {
    mesh_f = open_out(fs::path(o.out) / "mesh.jsonl");
    write_meta(mesh_f, meta);
  }

  auto cohort = make_cohort(cfg.identities, mix_seed(o.seed, 0xc004ULL));
  nlohmann::json manifest;
  manifest["identities"] = cfg.identities;
  manifest["walks"] = cfg.walks;
  manifest["seed"] = o.seed;
  manifest["config_hash"] = rc.hash_hex();
  manifest["records"] = nlohmann::json::array();

  for (int id = 0; id < cfg.identities; ++id) {
    for (int w = 0; w < cfg.walks; ++w) {
      MeshSequence cam_mesh;
      WalkData wd = build_walk(cfg, o.seed, cohort[id], id, w, 0.0, cfg.epsilon_rad,
                               cfg.write_mesh ? &cam_mesh : nullptr);
      require(!wd.gallery_signature.empty(), Err::NoSubjectsFound,
              "walk " + std::to_string(w) + " of identity " + std::to_string(id) +
                  " produced no signature");
      for (std::size_t f = 0; f < wd.radar.size(); ++f)
        write_radar_line(radar_f, {wd.radar[f].t, id, w, -1, wd.radar[f].points});
      for (const SignatureFrame& sf : wd.gallery_signature)
        write_labeled_line(sig_f, {sf.t, id, w, sf.points});
      if (cfg.write_mesh)
        for (const MeshFrame& mf : cam_mesh.frames)
          write_labeled_line(mesh_f, {mf.t, id, w, mf.points});
      manifest["records"].push_back(
          {{"id", id}, {"walk", w}, {"frames", wd.radar.size()}});
    }
  }
  auto man_f = open_out(fs::path(o.out) / "manifest.json");
  man_f << manifest.dump(2) << "\n";
  std::cout << "wrote dataset for " << cfg.identities << " identities x " << cfg.walks
            << " walks to " << o.out << "\n";
}

void cmd_synth(const RunConfig& rc, const CommonOpts& o, const std::string& mesh_path,
               const std::string& radar_path) {
  PipelineConfig cfg = materialize(rc);
  fs::create_directories(o.out);
  auto mesh_groups = group_labeled(read_labeled_file(mesh_path));
  require(!mesh_groups.empty(), Err::EmptyInput, "no mesh records in " + mesh_path);
  std::map<std::pair<int, int>, std::vector<RadarRecord>> radar_groups;
  if (!radar_path.empty()) radar_groups = group_radar(read_radar_file(radar_path));

  char eps_buf[64];
  std::snprintf(eps_buf, sizeof(eps_buf), "%.17g", cfg.epsilon_rad);
  MetaInfo meta{&rc, o.seed, {{"epsilon_rad", eps_buf}, {"radar_position", "0 0 0"}}};
  auto out_f = open_out(fs::path(o.out) / "signature.jsonl");
  write_meta(out_f, meta);

  for (const auto& [key, recs] : mesh_groups) {
    MeshSequence ms = to_mesh_sequence(recs);
    if (!radar_groups.empty()) {
      auto rit = radar_groups.find(key);
      require(rit != radar_groups.end(), Err::InvalidParams,
              "no radar records to align identity " + std::to_string(key.first) + " walk " +
                  std::to_string(key.second));
      SegmentParams sp;
      sp.expected_subjects = 1;
      auto tracks = segment_subjects(to_radar_frames(rit->second), sp);
      std::vector<std::vector<Vec3>> centers;
      for (const RadarFrame& f : tracks[0].frames) {
        std::vector<Vec3> pts;
        for (const RadarPoint& p : f.points) pts.push_back(p.position);
        centers.push_back(std::move(pts));
      }
      ms = align_mesh_to_radar(ms, estimate_trajectory(centers));
    }
    auto sig = synthesize_sequence(ms, Vec3::Zero(), cfg.epsilon_rad);
    for (const SignatureFrame& sf : sig)
      write_labeled_line(out_f, {sf.t, key.first, key.second, sf.points});
  }
  std::cout << "wrote signatures for " << mesh_groups.size() << " walks to " << o.out << "\n";
}

void cmd_preprocess(const RunConfig& rc, const CommonOpts& o, const std::string& radar_path,
                    int expected) {
  fs::create_directories(o.out);
  auto groups = group_radar(read_radar_file(radar_path));
  require(!groups.empty(), Err::EmptyInput, "no radar records in " + radar_path);
  MetaInfo meta{&rc, o.seed, {}};
  int files = 0;
  for (const auto& [key, recs] : groups) {
    SegmentParams sp;
    sp.expected_subjects = expected;
    auto tracks = segment_subjects(to_radar_frames(recs), sp);
    for (std::size_t k = 0; k < tracks.size(); ++k) {
      std::string name = "track_" + std::to_string(key.first) + "_" +
                         std::to_string(key.second) + "_" + std::to_string(k) + ".jsonl";
      auto f = open_out(fs::path(o.out) / name);
      write_meta(f, meta);
      for (const RadarFrame& fr : tracks[k].frames)
        write_radar_line(f, {fr.t, key.first, key.second, static_cast<int>(k), fr.points});
      files += 1;
    }
  }
  std::cout << "wrote " << files << " track files to " << o.out << "\n";
}

void cmd_train(const RunConfig& rc, const CommonOpts& o, const std::string& data_dir) {
  Ablation ab = parse_ablation(o.ablation);
  DatasetBundle bundle = bundle_from_files(rc, o.seed, data_dir, ab == Ablation::NoST);
  SplitIndices split = split_dataset(bundle);
  auto records = make_train_records(bundle, split, ab == Ablation::NoST);

  TrainConfig tc = bundle.cfg.train;
  tc.seed = o.seed;
  tc.ablation = ab;
  TrainResult result = train(records, tc);

  fs::create_directories(o.out);
  save_checkpoint(result.params, (fs::path(o.out) / "model.ckpt.json").string());
  MetaInfo meta{&rc, o.seed, {{"ablation", o.ablation}}};
  std::vector<std::vector<std::string>> rows;
  for (std::size_t e = 0; e < result.loss_trace.size(); ++e)
    rows.push_back({std::to_string(e + 1), fmt6(result.loss_trace[e])});
  auto f = open_out(fs::path(o.out) / "loss_trace.csv");
  write_csv(f, &meta, {"epoch", "mean_loss"}, rows);
  std::cout << "trained " << records.size() << " records (" << o.ablation << "), final loss "
            << fmt6(result.loss_trace.back()) << ", checkpoint in " << o.out << "\n";
}

void cmd_rank(const RunConfig& rc, const CommonOpts& o, const std::string& ckpt_path,
              const std::string& query_path, const std::string& gallery_path) {
  Scorer scorer = parse_scorer(o.scorer);
  ModelParams params;
  if (scorer == Scorer::Model) params = load_checkpoint(ckpt_path);

  std::vector<Query> queries;
  for (const auto& [key, recs] : group_radar(read_radar_file(query_path)))
    queries.push_back({key.first, key.second, to_radar_frames(recs)});
  require(!queries.empty(), Err::EmptyInput, "no query records");

  std::vector<GalleryEntry> gallery;
  for (const auto& [key, recs] : group_labeled(read_labeled_file(gallery_path))) {
    GalleryEntry e;
    e.identity = key.first;
    e.walk = key.second;
    e.signature = to_sig_frames(recs);
    e.embedding = (scorer == Scorer::Model) ? encode_signature(e.signature, params)
                                            : Eigen::VectorXd::Zero(64);
    gallery.push_back(std::move(e));
  }

  auto ranked = rank_queries(queries, gallery, scorer,
                             scorer == Scorer::Model ? &params : nullptr, false, o.threads);
  fs::create_directories(o.out);
  MetaInfo meta{&rc, o.seed, {{"scorer", o.scorer}}};
  std::vector<std::vector<std::string>> rows;
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    for (std::size_t r = 0; r < ranked[qi].size(); ++r) {
      const GalleryEntry& g = gallery[ranked[qi][r].first];
      rows.push_back({std::to_string(queries[qi].identity), std::to_string(queries[qi].walk),
                      std::to_string(r + 1), std::to_string(g.identity),
                      std::to_string(g.walk), fmt6(ranked[qi][r].second)});
    }
  }
  auto f = open_out(fs::path(o.out) / "ranking.csv");
  write_csv(f, &meta,
            {"query_id", "query_walk", "rank", "gallery_id", "gallery_walk", "score"}, rows);
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    std::cout << "query id " << queries[qi].identity << " walk " << queries[qi].walk << " ->";
    for (std::size_t r = 0; r < std::min<std::size_t>(5, ranked[qi].size()); ++r)
      std::cout << " id" << gallery[ranked[qi][r].first].identity << " ("
                << fmt6(ranked[qi][r].second) << ")";
    std::cout << "\n";
  }
}

void cmd_eval(const RunConfig& rc, const CommonOpts& o, const std::string& data_dir,
              const std::string& ckpt_path) {
  Scorer scorer = parse_scorer(o.scorer);
  DatasetBundle bundle = bundle_from_files(rc, o.seed, data_dir, false);
  SplitIndices split = split_dataset(bundle);
  ModelParams params = load_checkpoint(ckpt_path);
  fs::create_directories(o.out);
  MetaInfo meta{&rc, o.seed, {}};

  CMCResult model_cmc = evaluate_split(bundle, split, Scorer::Model, &params, false,
                                       bundle.cfg.eval_frames, o.threads);
  write_cmc_csv(fs::path(o.out) / "cmc.csv", meta, model_cmc);
  write_cmc_svg(fs::path(o.out) / "cmc.svg", meta, model_cmc, "cumulative matching curve");
  if (scorer == Scorer::Emd) {
    CMCResult emd_cmc = evaluate_split(bundle, split, Scorer::Emd, nullptr, false,
                                       bundle.cfg.eval_frames, o.threads);
    write_cmc_csv(fs::path(o.out) / "cmc_emd.csv", meta, emd_cmc);
  }

  FeasibilityResult feas = feasibility_study(bundle);
  std::vector<std::vector<std::string>> rows;
  for (int k = 0; k <= 100; ++k)
    rows.push_back({fmt6(k / 100.0), fmt6(feas.same_ccdf[k]), "same"});
  for (int k = 0; k <= 100; ++k)
    rows.push_back({fmt6(k / 100.0), fmt6(feas.diff_ccdf[k]), "different"});
  auto cf = open_out(fs::path(o.out) / "ccdf.csv");
  write_csv(cf, &meta, {"threshold", "fraction", "cohort"}, rows);

  SvgSeries same{"same", {}, {}}, diff{"different", {}, {}};
  for (int k = 0; k <= 100; ++k) {
    same.x.push_back(k / 100.0);
    same.y.push_back(feas.same_ccdf[k]);
    diff.x.push_back(k / 100.0);
    diff.y.push_back(feas.diff_ccdf[k]);
  }
  auto sf = open_out(fs::path(o.out) / "ccdf.svg");
  write_line_plot_svg(sf, "intersection ratio CCDF", "threshold", "fraction at or above",
                      {same, diff}, &meta);

  std::vector<std::vector<std::string>> part_rows;
  for (const auto& [part, ratio] : feas.per_part_ratio)
    part_rows.push_back({part_name(part), fmt6(ratio)});
  auto pf = open_out(fs::path(o.out) / "intersection_parts.csv");
  write_csv(pf, &meta, {"part", "ratio"}, part_rows);

  std::cout << "top-1 " << fmt6(model_cmc.top_k.empty() ? 0.0 : model_cmc.top_k[0])
            << ", same-mean " << fmt6(feas.same_mean) << ", diff-mean "
            << fmt6(feas.diff_mean) << "; outputs in " << o.out << "\n";
}

void cmd_sweep(const RunConfig& rc, const CommonOpts& o, const std::string& ckpt_path,
               const std::string& experiment, const std::string& grid_str) {
  SweepKind kind = sweep_kind_from(experiment);
  std::vector<double> grid;
  if (!grid_str.empty()) {
    std::stringstream ss(grid_str);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) grid.push_back(std::stod(tok));
  } else {
    grid = default_sweep_grid(kind);
  }

  DatasetBundle bundle = build_dataset(rc, o.seed);
  SplitIndices split = split_dataset(bundle);
  ModelParams params = load_checkpoint(ckpt_path);
  auto sweep_rows = run_sweep(bundle, split, params, kind, grid, o.threads);

  fs::create_directories(o.out);
  MetaInfo meta{&rc, o.seed, {{"experiment", experiment}}};
  std::vector<std::string> cols = {"value"};
  for (int k = 1; k <= 9; ++k) cols.push_back("top" + std::to_string(k));
  std::vector<std::vector<std::string>> rows;
  SvgSeries top1{"top-1", {}, {}};
  for (const SweepRow& r : sweep_rows) {
    std::vector<std::string> row = {fmt6(r.value)};
    int G = static_cast<int>(r.cmc.top_k.size());
    for (int k = 1; k <= 9; ++k) row.push_back(fmt6(r.cmc.top_k[std::min(k, G) - 1]));
    rows.push_back(std::move(row));
    top1.x.push_back(r.value);
    top1.y.push_back(r.cmc.top_k.empty() ? 0.0 : r.cmc.top_k[0]);
  }
  std::string base = "sweep_" + experiment;
  auto f = open_out(fs::path(o.out) / (base + ".csv"));
  write_csv(f, &meta, cols, rows);
  auto svg = open_out(fs::path(o.out) / (base + ".svg"));
  write_line_plot_svg(svg, base, experiment, "accuracy", {top1}, &meta);
  std::cout << "wrote " << base << ".csv with " << rows.size() << " rows to " << o.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cross-modal gait re-identification pipeline"};
  app.require_subcommand(1);

  CommonOpts o;
  std::string mesh_path, radar_path, data_dir, ckpt_path, query_path, gallery_path;
  std::string experiment, grid_str;
  int expected = 0;

  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  add_common(gen, o);
  CLI::App* synth = app.add_subcommand("synth", "synthesize signatures from mesh records");
  add_common(synth, o);
  synth->add_option("--mesh", mesh_path, "mesh JSONL file")->required();
  synth->add_option("--radar", radar_path, "radar JSONL for trajectory alignment");
  CLI::App* prep = app.add_subcommand("preprocess", "filter, cluster, and track radar frames");
  add_common(prep, o);
  prep->add_option("--radar", radar_path, "radar JSONL file")->required();
  prep->add_option("--expected", expected, "expected subject count (0 = keep all)");
  CLI::App* train_cmd = app.add_subcommand("train", "train the metric network");
  add_common(train_cmd, o);
  train_cmd->add_option("--data", data_dir, "dataset directory from gen")->required();
  CLI::App* rank = app.add_subcommand("rank", "rank a gallery for each query");
  add_common(rank, o);
  rank->add_option("--checkpoint", ckpt_path, "model checkpoint");
  rank->add_option("--query", query_path, "query radar JSONL")->required();
  rank->add_option("--gallery", gallery_path, "gallery signature JSONL")->required();
  CLI::App* eval_cmd = app.add_subcommand("eval", "CMC and feasibility metrics");
  add_common(eval_cmd, o);
  eval_cmd->add_option("--data", data_dir, "dataset directory from gen")->required();
  eval_cmd->add_option("--checkpoint", ckpt_path, "model checkpoint")->required();
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "sensitivity sweep over one factor");
  add_common(sweep_cmd, o);
  sweep_cmd->add_option("--checkpoint", ckpt_path, "model checkpoint")->required();
  sweep_cmd->add_option("--experiment", experiment,
                        "epsilon | view_angle | frame_count | gallery_size | records_per_subject")
      ->required();
  sweep_cmd->add_option("--grid", grid_str, "comma-separated grid values");

  CLI11_PARSE(app, argc, argv);

  if (const char* env_out = std::getenv("XREID_OUT")) o.out = env_out;

  try {
    RunConfig rc = load_config(o);
    if (*gen) cmd_gen(rc, o);
    if (*synth) cmd_synth(rc, o, mesh_path, radar_path);
    if (*prep) cmd_preprocess(rc, o, radar_path, expected);
    if (*train_cmd) cmd_train(rc, o, data_dir);
    if (*rank) {
      require(o.scorer == "emd" || !ckpt_path.empty(), Err::ConfigError,
              "rank with the model scorer needs --checkpoint");
      cmd_rank(rc, o, ckpt_path, query_path, gallery_path);
    }
    if (*eval_cmd) cmd_eval(rc, o, data_dir, ckpt_path);
    if (*sweep_cmd) cmd_sweep(rc, o, ckpt_path, experiment, grid_str);
  } catch (const Error& e) {
    std::cerr << "error [" << err_name(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
