// panoflow: multi-projection 360-degree optical flow toolkit.
//
// Subcommands: generate, convert, estimate, fuse, eval, pipeline, visualize,
// propagate-edit. Exit codes: 0 ok, 2 config error, 3 data error, 4 internal.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "panoflow/errors.hpp"
#include "panoflow/estimate.hpp"
#include "panoflow/fusion.hpp"
#include "panoflow/metrics.hpp"
#include "panoflow/parallel.hpp"
#include "panoflow/synth.hpp"
#include "panoflow/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace panoflow;

namespace {

constexpr const char* kVersion = "0.1.0";

struct ManifestRecord {
  fs::path frame_a, frame_b, flow_ab, flow_ba, occlusion;
  ProjectionSpec spec;
  std::string schedule;
};

std::vector<ManifestRecord> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  const fs::path root = path.parent_path();
  std::vector<ManifestRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("bad manifest line: " + std::string(e.what()));
    }
    ManifestRecord r;
    r.frame_a = root / rec.at("frame_a").get<std::string>();
    r.frame_b = root / rec.at("frame_b").get<std::string>();
    r.flow_ab = root / rec.at("flow_ab").get<std::string>();
    if (rec.contains("flow_ba")) r.flow_ba = root / rec.at("flow_ba").get<std::string>();
    if (rec.contains("occlusion")) r.occlusion = root / rec.at("occlusion").get<std::string>();
    r.spec = parse_spec(rec.at("spec").get<std::string>());
    r.schedule = rec.value("schedule", "dataset");
    records.push_back(std::move(r));
  }
  if (records.empty()) throw DataError("manifest has no records: " + path.string());
  return records;
}

/// Result-affecting flags only; thread count deliberately excluded so runs
/// with different parallelism stay byte-identical.
void write_run_manifest(const fs::path& dir, const std::string& command, const json& flags) {
  json run;
  run["command"] = command;
  run["version"] = kVersion;
  run["flags"] = flags;
  std::ofstream out(dir / "run.json");
  if (!out) throw DataError("cannot write run manifest in " + dir.string());
  out << run.dump(2) << "\n";
}

ProjectionSpec default_cyl(const ProjectionSpec& eq) {
  const double h_max = std::asinh(std::tan(kPi / 4));
  const int hb = static_cast<int>(std::lround(eq.width * h_max / kPi));
  return ProjectionSpec::tri_cylinder(eq.width, 3 * hb);
}

ProjectionSpec default_cube(const ProjectionSpec& eq) {
  const int f = 8 * static_cast<int>(std::lround(eq.width / (8.0 * kPi)));
  return ProjectionSpec::cube_padding(f, f / 8);
}

struct EstimatorFlags {
  std::string method = "blockmatch";
  std::string config_file;
  int levels = 3, search_radius = 4, block = 7;
  double hs_alpha = 1.0;
  int hs_iterations = 100;
  double pole_exclude = 0.05;
  std::string perturb_profile = "uniform";
  double perturb_base = 0.0, perturb_gain = 0.0, perturb_power = 1.0, perturb_noise = 0.35;
  uint64_t seed = 0;
};

void add_estimator_flags(CLI::App* cmd, EstimatorFlags& ef) {
  cmd->add_option("--method", ef.method, "blockmatch | hornschunck | perturbgt")
      ->check(CLI::IsMember({"blockmatch", "hornschunck", "perturbgt"}));
  cmd->add_option("--estimator-config", ef.config_file,
                  "key = value file; overrides the estimator flags");
  cmd->add_option("--levels", ef.levels, "pyramid levels");
  cmd->add_option("--search-radius", ef.search_radius, "block match search radius (px/level)");
  cmd->add_option("--block", ef.block, "block match window (odd)");
  cmd->add_option("--hs-alpha", ef.hs_alpha, "Horn-Schunck smoothness weight");
  cmd->add_option("--hs-iterations", ef.hs_iterations, "Horn-Schunck sweeps per level");
  cmd->add_option("--pole-exclude", ef.pole_exclude,
                  "equirect row fraction excluded from matching at each pole");
  cmd->add_option("--perturb-profile", ef.perturb_profile, "uniform | equator | pole")
      ->check(CLI::IsMember({"uniform", "equator", "pole"}));
  cmd->add_option("--perturb-base", ef.perturb_base, "perturbation floor (px)");
  cmd->add_option("--perturb-gain", ef.perturb_gain, "perturbation ramp gain (px)");
  cmd->add_option("--perturb-power", ef.perturb_power, "perturbation ramp power");
  cmd->add_option("--perturb-noise", ef.perturb_noise, "white-noise fraction of the amplitude");
}

EstimatorConfig make_estimator_config(const EstimatorFlags& ef) {
  EstimatorConfig cfg;
  if (ef.method == "blockmatch") cfg.kind = EstimatorKind::BlockMatch;
  else if (ef.method == "hornschunck") cfg.kind = EstimatorKind::HornSchunck;
  else cfg.kind = EstimatorKind::PerturbedGT;
  cfg.levels = ef.levels;
  cfg.search_radius = ef.search_radius;
  cfg.block = ef.block;
  cfg.hs_alpha = ef.hs_alpha;
  cfg.hs_iterations = ef.hs_iterations;
  cfg.pole_exclude = ef.pole_exclude;
  if (ef.perturb_profile == "equator") cfg.perturb.profile = PerturbModel::Profile::EquatorFavoring;
  else if (ef.perturb_profile == "pole") cfg.perturb.profile = PerturbModel::Profile::PoleFavoring;
  else cfg.perturb.profile = PerturbModel::Profile::Uniform;
  cfg.perturb.base_px = ef.perturb_base;
  cfg.perturb.gain_px = ef.perturb_gain;
  cfg.perturb.power = ef.perturb_power;
  cfg.perturb.noise = ef.perturb_noise;
  cfg.seed = ef.seed;
  validate(cfg);
  if (!ef.config_file.empty()) {
    std::ifstream in(ef.config_file);
    if (!in) throw DataError("cannot open estimator config " + ef.config_file);
    const std::string text((std::istreambuf_iterator<char>(in)), {});
    cfg = parse_estimator_config(text, cfg);
  }
  return cfg;
}

json estimator_flags_json(const EstimatorFlags& ef) {
  json j;
  j["method"] = ef.method;
  j["levels"] = ef.levels;
  j["search_radius"] = ef.search_radius;
  j["block"] = ef.block;
  j["hs_alpha"] = ef.hs_alpha;
  j["hs_iterations"] = ef.hs_iterations;
  j["pole_exclude"] = ef.pole_exclude;
  j["perturb"] = {{"profile", ef.perturb_profile},
                  {"base", ef.perturb_base},
                  {"gain", ef.perturb_gain},
                  {"power", ef.perturb_power},
                  {"noise", ef.perturb_noise}};
  if (!ef.config_file.empty()) j["config_file"] = ef.config_file;
  return j;
}

bool is_flow_path(const fs::path& p) {
  const std::string ext = p.extension().string();
  return ext == ".sfl1" || ext == ".flo";
}

FlowField load_flow_any(const fs::path& p) {
  return p.extension() == ".flo" ? read_flo(p) : read_flow(p);
}

void save_flow_any(const FlowField& f, const fs::path& p) {
  if (p.extension() == ".flo") write_flo(f, p);
  else write_flow(f, p);
}

// ---------------------------------------------------------------- commands

int cmd_generate(const std::string& schedule, int pairs, int objects, const std::string& spec_str,
                 uint64_t seed, const fs::path& out, bool backward) {
  GenerateConfig cfg;
  cfg.schedule = schedule;
  cfg.pairs = pairs;
  cfg.objects = objects;
  cfg.spec = parse_spec(spec_str);
  cfg.seed = seed;
  cfg.out_dir = out;
  cfg.backward_flows = backward;
  const GenerateResult res = generate_dataset(cfg);
  json flags;
  flags["schedule"] = schedule;
  flags["pairs"] = pairs;
  flags["objects"] = objects;
  flags["spec"] = spec_str;
  flags["seed"] = seed;
  flags["backward"] = backward;
  write_run_manifest(out, "generate", flags);
  std::cout << "manifest: " << res.manifest_path.string() << "\n"
            << "pairs: " << res.pairs << "\n";
  return 0;
}

int cmd_convert(const fs::path& in, const fs::path& out, const std::string& from,
                const std::string& to) {
  const ProjectionSpec dst = parse_spec(to);
  if (is_flow_path(in)) {
    const FlowField f = load_flow_any(in);
    save_flow_any(reproject_flow(f, dst), out);
  } else {
    if (from.empty()) throw ConfigError("convert: --from is required for images");
    const ProjectionSpec src = parse_spec(from);
    const Image img = read_png(in);
    write_png(resample(src, img, dst), out);
  }
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

int cmd_estimate(const fs::path& a_path, const fs::path& b_path, const std::string& spec_str,
                 const fs::path& out, const EstimatorFlags& ef, const fs::path& gt_path) {
  const ProjectionSpec spec = parse_spec(spec_str);
  const EstimatorConfig cfg = make_estimator_config(ef);
  const Image a = read_png(a_path);
  const Image b = read_png(b_path);
  std::optional<FlowField> gt;
  if (!gt_path.empty()) gt = load_flow_any(gt_path);
  const FlowField f = estimate(a, b, spec, cfg, gt ? &*gt : nullptr);
  save_flow_any(f, out);
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

int cmd_fuse(const fs::path& a_path, const fs::path& b_path, const fs::path& out,
             const std::string& mode, const fs::path& gt_path, const std::string& src_a,
             const std::string& src_b, const fs::path& bwd_a, const fs::path& bwd_b,
             const fs::path& confidence_out, const fs::path& lower_out,
             const fs::path& upper_out) {
  const FlowField a = load_flow_any(a_path);
  const FlowField b = load_flow_any(b_path);
  FlowField fused = make_flow(a.spec);
  if (mode == "blend") {
    const ProjectionSpec sa = src_a.empty() ? a.spec : parse_spec(src_a);
    const ProjectionSpec sb = src_b.empty() ? b.spec : parse_spec(src_b);
    std::optional<FlowField> ba, bb;
    if (!bwd_a.empty()) ba = load_flow_any(bwd_a);
    if (!bwd_b.empty()) bb = load_flow_any(bwd_b);
    const FusionCues cues_a = compute_cues(sa, a.spec, &a, ba ? &*ba : nullptr);
    const FusionCues cues_b = compute_cues(sb, b.spec, &b, bb ? &*bb : nullptr);
    const ConfidenceMap t = heuristic_confidence(cues_a, cues_b);
    if (!confidence_out.empty()) write_pfm(t, confidence_out);
    fused = blend(a, b, t);
  } else {
    if (gt_path.empty()) throw ConfigError("fuse: oracle modes need --gt");
    const FlowField gt = load_flow_any(gt_path);
    OracleBounds bounds = oracle_bounds(a, b, gt);
    if (!lower_out.empty()) write_flow(bounds.lower, lower_out);
    if (!upper_out.empty()) write_flow(bounds.upper, upper_out);
    fused = mode == "oracle-lower" ? std::move(bounds.lower) : std::move(bounds.upper);
  }
  save_flow_any(fused, out);
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

int cmd_eval(const fs::path& pred_path, const fs::path& gt_path, const fs::path& occ_path,
             const std::string& method, const std::string& dataset, const fs::path& csv_path,
             const fs::path& heatmap_prefix) {
  const FlowField pred = load_flow_any(pred_path);
  const FlowField gt = load_flow_any(gt_path);
  std::optional<Image> occ;
  if (!occ_path.empty()) occ = read_pfm(occ_path);
  const WeightMap wm = solid_angle_weights(gt.spec);
  const EvalReport rep = evaluate(pred, gt, &wm, occ ? &*occ : nullptr);

  TableRow row{method, dataset, rep.sd_mean,      rep.epe_mean,
               rep.sd_weighted,  rep.epe_weighted, rep.n_valid};
  std::cout << compare_table_text({row});
  if (!csv_path.empty()) {
    const bool fresh = !fs::exists(csv_path);
    std::ofstream out(csv_path, std::ios::app);
    if (!out) throw DataError("cannot write " + csv_path.string());
    const std::string csv = compare_table_csv({row});
    out << (fresh ? csv : csv.substr(csv.find('\n') + 1));
  }
  if (!heatmap_prefix.empty()) {
    const auto epe_hm = error_map_image(rep.epe_map, &rep.valid_mask);
    const auto sd_hm = error_map_image(rep.sd_map, &rep.valid_mask);
    write_png(epe_hm.image, heatmap_prefix.string() + "_epe.png");
    write_pfm(rep.epe_map, heatmap_prefix.string() + "_epe.pfm");
    write_png(sd_hm.image, heatmap_prefix.string() + "_sd.png");
    write_pfm(rep.sd_map, heatmap_prefix.string() + "_sd.pfm");
    json meta;
    meta["epe_max"] = epe_hm.max_used;
    meta["sd_max"] = sd_hm.max_used;
    std::ofstream m(heatmap_prefix.string() + "_norm.json");
    m << meta.dump(2) << "\n";
  }
  return 0;
}

struct PipelineBranch {
  char code;  // 'E', 'C', 'P'
  std::string name;
  ProjectionSpec spec;
};

int cmd_pipeline(const fs::path& manifest_path, const std::string& projections,
                 const fs::path& out, uint64_t seed, const EstimatorFlags& ef,
                 const std::string& fusion_mode, const std::string& cyl_str,
                 const std::string& cube_str, int max_pairs, bool fb_cues) {
  const auto records = read_manifest(manifest_path);
  const ProjectionSpec eq = records.front().spec;
  if (eq.kind != Projection::Equirect) throw DataError("pipeline: dataset must be equirect");

  if (projections.size() != 3 || projections[1] != '+')
    throw ConfigError("pipeline: --projections must look like E+C, E+P or C+P");
  const auto branch = [&](char c) -> PipelineBranch {
    switch (c) {
      case 'E': return {'E', "equirect", eq};
      case 'C': return {'C', "tricyl", cyl_str.empty() ? default_cyl(eq) : parse_spec(cyl_str)};
      case 'P': return {'P', "cubepad", cube_str.empty() ? default_cube(eq) : parse_spec(cube_str)};
      default: throw ConfigError("pipeline: unknown projection code in " + projections);
    }
  };
  PipelineBranch branches[2] = {branch(projections[0]), branch(projections[2])};
  if (branches[0].code == branches[1].code)
    throw ConfigError("pipeline: the two projections must differ");

  fs::create_directories(out / "pairs");
  if (!fs::exists(out / "pairs")) throw DataError("pipeline: cannot create " + out.string());

  const WeightMap eq_weights = solid_angle_weights(eq);
  const std::string fused_name = "fused(" + projections + ":" + fusion_mode + ")";
  std::vector<TableRow> rows;
  struct Acc {
    double sd = 0, epe = 0, sdw = 0, epew = 0;
    long n = 0, pairs = 0;
  };
  std::map<std::string, Acc> acc;
  int done = 0, quarantined = 0;

  const int limit = max_pairs > 0 ? std::min<int>(max_pairs, records.size()) : records.size();
  for (int idx = 0; idx < limit; ++idx) {
    const ManifestRecord& rec = records[idx];
    char pair_name[32];
    std::snprintf(pair_name, sizeof pair_name, "%06d", idx);
    const fs::path pair_dir = out / "pairs" / pair_name;
    try {
      if (rec.spec != eq) throw DataError("pipeline: mixed specs in manifest");
      const Image frame_a = read_png(rec.frame_a);
      const Image frame_b = read_png(rec.frame_b);
      const FlowField gt = read_flow(rec.flow_ab);
      std::optional<Image> occ;
      if (!rec.occlusion.empty() && fs::exists(rec.occlusion)) occ = read_pfm(rec.occlusion);

      fs::create_directories(pair_dir);
      FlowField eq_flows[2] = {make_flow(eq), make_flow(eq)};
      std::optional<FlowField> bwd_flows[2];
      for (int s = 0; s < 2; ++s) {
        const PipelineBranch& br = branches[s];
        EstimatorConfig cfg = make_estimator_config(ef);
        // per-pair, per-branch isolated streams
        cfg.seed = derive_seed(seed, idx * 2 + s);
        const Image a_s = br.spec == eq ? frame_a : resample(eq, frame_a, br.spec);
        const Image b_s = br.spec == eq ? frame_b : resample(eq, frame_b, br.spec);
        const FlowField est = estimate(a_s, b_s, br.spec, cfg, &gt);
        eq_flows[s] = br.spec == eq ? est : reproject_flow(est, eq);
        write_flow(eq_flows[s], pair_dir / (br.name + "_eq.sfl1"));
        if (fb_cues && fusion_mode == "blend") {
          const FlowField est_b = estimate(b_s, a_s, br.spec, cfg, nullptr);
          bwd_flows[s] = br.spec == eq ? est_b : reproject_flow(est_b, eq);
        }
      }

      FlowField fused = make_flow(eq);
      if (fusion_mode == "blend") {
        const FusionCues ca = compute_cues(branches[0].spec, eq, &eq_flows[0],
                                           bwd_flows[0] ? &*bwd_flows[0] : nullptr);
        const FusionCues cb = compute_cues(branches[1].spec, eq, &eq_flows[1],
                                           bwd_flows[1] ? &*bwd_flows[1] : nullptr);
        const ConfidenceMap t = heuristic_confidence(ca, cb);
        write_pfm(t, pair_dir / "confidence.pfm");
        fused = blend(eq_flows[0], eq_flows[1], t);
      } else if (fusion_mode == "oracle-lower" || fusion_mode == "oracle-upper") {
        OracleBounds bounds = oracle_bounds(eq_flows[0], eq_flows[1], gt);
        fused = fusion_mode == "oracle-lower" ? std::move(bounds.lower) : std::move(bounds.upper);
      } else {
        throw ConfigError("pipeline: unknown fusion mode " + fusion_mode);
      }
      write_flow(fused, pair_dir / "fused.sfl1");

      const auto add_eval = [&](const std::string& name, const FlowField& f) {
        const EvalReport rep = evaluate(f, gt, &eq_weights, occ ? &*occ : nullptr);
        Acc& a = acc[name];
        a.sd += rep.sd_mean;
        a.epe += rep.epe_mean;
        a.sdw += rep.sd_weighted;
        a.epew += rep.epe_weighted;
        a.n += rep.n_valid;
        a.pairs += 1;
        const auto hm = error_map_image(rep.epe_map, &rep.valid_mask);
        write_png(hm.image, pair_dir / ("epe_" + name + ".png"));
        return rep;
      };
      add_eval(branches[0].name, eq_flows[0]);
      add_eval(branches[1].name, eq_flows[1]);
      add_eval(fused_name, fused);
      ++done;
    } catch (const std::exception& e) {
      std::cerr << "pair " << idx << " quarantined: " << e.what() << "\n";
      std::error_code ec;
      fs::remove_all(pair_dir, ec);
      ++quarantined;
    }
  }
  if (done == 0) throw DataError("pipeline: all pairs failed");

  const std::string dataset = records.front().schedule;
  for (const auto& [name, a] : acc)
    rows.push_back({name, dataset, a.sd / a.pairs, a.epe / a.pairs, a.sdw / a.pairs,
                    a.epew / a.pairs, a.n});
  {
    std::ofstream csv(out / "table.csv");
    csv << compare_table_csv(rows);
    std::ofstream txt(out / "table.txt");
    txt << compare_table_text(rows);
  }
  json flags;
  flags["manifest"] = manifest_path.string();
  flags["projections"] = projections;
  flags["fusion_mode"] = fusion_mode;
  flags["seed"] = seed;
  flags["estimator"] = estimator_flags_json(ef);
  flags["cyl"] = to_string(branches[0].code == 'C' ? branches[0].spec
                           : branches[1].code == 'C' ? branches[1].spec : default_cyl(eq));
  flags["cube"] = to_string(branches[0].code == 'P' ? branches[0].spec
                            : branches[1].code == 'P' ? branches[1].spec : default_cube(eq));
  flags["pairs_done"] = done;
  flags["pairs_quarantined"] = quarantined;
  flags["fb_cues"] = fb_cues;
  write_run_manifest(out, "pipeline", flags);
  std::cout << compare_table_text(rows);
  return 0;
}

int cmd_visualize(const fs::path& flow_path, const std::string& weights_spec, const fs::path& out,
                  double max_mag, bool mask_owned) {
  if (!flow_path.empty()) {
    const FlowField f = load_flow_any(flow_path);
    const auto res = flow_to_color(f, max_mag);
    write_png(res.image, out);
    std::cout << "wrote " << out.string() << " (max magnitude " << res.max_magnitude << " px)\n";
    return 0;
  }
  if (weights_spec.empty()) throw ConfigError("visualize: need --flow or --weights");
  const ProjectionSpec spec = parse_spec(weights_spec);
  const WeightMap wm = solid_angle_weights(spec);
  Image img(spec.width, spec.height, 1);
  float mx = 0;
  for (size_t i = 0; i < wm.weight.size(); ++i) {
    const float v = (mask_owned && !wm.owned[i]) ? 0.0f : wm.weight[i];
    img.data[i] = v;
    mx = std::max(mx, v);
  }
  if (out.extension() == ".pfm") {
    write_pfm(img, out);
  } else {
    if (mx > 0)
      for (auto& v : img.data) v /= mx;
    write_png(img, out, 16);
  }
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

int cmd_propagate_edit(const fs::path& manifest_path, const fs::path& sprite_path, int anchor,
                       double pos_x, double pos_y, int n_frames, const fs::path& out,
                       const fs::path& track_csv) {
  const auto records = read_manifest(manifest_path);
  const ProjectionSpec eq = records.front().spec;
  for (const auto& r : records)
    if (r.flow_ba.empty())
      throw DataError("propagate-edit: manifest lacks backward flows (flow_ba)");

  Image sprite = read_png(sprite_path);
  if (sprite.channels != 4) throw DataError("propagate-edit: sprite must be RGBA");
  if (anchor < 0 || anchor >= static_cast<int>(records.size()))
    throw ConfigError("propagate-edit: anchor frame out of range");
  const int last = std::min<int>(anchor + n_frames, records.size());

  fs::create_directories(out);
  // paint the sprite into an RGBA layer centered at (pos_x, pos_y)
  Image layer(eq.width, eq.height, 4);
  for (int sy = 0; sy < sprite.height; ++sy)
    for (int sx = 0; sx < sprite.width; ++sx) {
      const int x = static_cast<int>(posmod(
          static_cast<int64_t>(std::lround(pos_x - sprite.width / 2.0 + sx)), eq.width));
      const int y = static_cast<int>(std::lround(pos_y - sprite.height / 2.0 + sy));
      if (y < 0 || y >= eq.height) continue;
      for (int c = 0; c < 4; ++c) layer.at(x, y, c) = sprite.at(sx, sy, c);
    }

  std::ofstream track;
  if (!track_csv.empty()) {
    track.open(track_csv);
    track << "frame,centroid_x,centroid_y,alpha_sum\n";
  }
  const auto emit = [&](int frame_idx, const fs::path& frame_png) {
    const Image frame = read_png(frame_png);
    Image composed = frame;
    for (int y = 0; y < eq.height; ++y)
      for (int x = 0; x < eq.width; ++x) {
        const float a = layer.at(x, y, 3);
        if (a <= 0) continue;
        for (int c = 0; c < 3; ++c)
          composed.at(x, y, c) = layer.at(x, y, c) * a + frame.at(x, y, c) * (1 - a);
      }
    char name[32];
    std::snprintf(name, sizeof name, "edited_%06d.png", frame_idx);
    write_png(composed, out / name);
    if (track.is_open()) {
      // alpha centroid with a circular mean in x
      double cx_c = 0, cx_s = 0, cy = 0, total = 0;
      for (int y = 0; y < eq.height; ++y)
        for (int x = 0; x < eq.width; ++x) {
          const double a = layer.at(x, y, 3);
          if (a <= 0) continue;
          const double ang = kTwoPi * x / eq.width;
          cx_c += a * std::cos(ang);
          cx_s += a * std::sin(ang);
          cy += a * y;
          total += a;
        }
      double cx = 0;
      if (total > 0) {
        cx = std::atan2(cx_s / total, cx_c / total) / kTwoPi * eq.width;
        if (cx < 0) cx += eq.width;
        cy /= total;
      }
      char row[128];
      std::snprintf(row, sizeof row, "%d,%.6f,%.6f,%.6f\n", frame_idx, cx, cy, total);
      track << row;
    }
  };

  emit(anchor, records[anchor].frame_a);
  for (int t = anchor + 1; t <= last; ++t) {
    // backward flow of pair (t-1, t): frame t -> frame t-1
    const FlowField bwd = read_flow(records[t - 1].flow_ba);
    Image next(eq.width, eq.height, 4);
    parallel_for(0, eq.height, [&](int y) {
      std::vector<float> px(4);
      for (int x = 0; x < eq.width; ++x) {
        const size_t i = bwd.index(x, y);
        if (!(bwd.valid[i] & FlowField::kValid)) continue;
        double dx, dy;
        flow_to_pixel_delta(eq, bwd.u[i], bwd.v[i], &dx, &dy);
        if (!sample_bilinear(layer, eq, 0, x + dx, y + dy, px.data())) continue;
        for (int c = 0; c < 4; ++c) next.at(x, y, c) = px[c];
      }
    });
    layer = std::move(next);
    emit(t, t < static_cast<int>(records.size()) ? records[t].frame_a : records[t - 1].frame_b);
  }

  json flags;
  flags["manifest"] = manifest_path.string();
  flags["sprite"] = sprite_path.string();
  flags["anchor"] = anchor;
  flags["x"] = pos_x;
  flags["y"] = pos_y;
  flags["frames"] = n_frames;
  write_run_manifest(out, "propagate-edit", flags);
  std::cout << "wrote " << (last - anchor + 1) << " edited frames to " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"panoflow: multi-projection 360 optical flow toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = all cores)")->capture_default_str();

  // generate
  auto* gen = app.add_subcommand("generate", "render a synthetic dataset with exact GT flow");
  std::string g_schedule = "eft", g_spec = "equirect:512x256";
  int g_pairs = 8, g_objects = 30;
  uint64_t g_seed = 0;
  fs::path g_out;
  bool g_no_backward = false;
  gen->add_option("--schedule", g_schedule, "city | eft")
      ->check(CLI::IsMember({"city", "eft"}));
  gen->add_option("--pairs", g_pairs, "number of frame pairs")->capture_default_str();
  gen->add_option("--objects", g_objects, "object count")->capture_default_str();
  gen->add_option("--spec", g_spec, "equirect spec of the frames")->capture_default_str();
  gen->add_option("--seed", g_seed, "master RNG seed")->required();
  gen->add_option("--out", g_out, "output directory")->required();
  gen->add_flag("--no-backward", g_no_backward, "skip backward flows");

  // convert
  auto* conv = app.add_subcommand("convert", "resample an image or flow between projections");
  fs::path c_in, c_out;
  std::string c_from, c_to;
  conv->add_option("--in", c_in, "input .png / .sfl1 / .flo")->required();
  conv->add_option("--out", c_out, "output path")->required();
  conv->add_option("--from", c_from, "source spec (images only; flows carry theirs)");
  conv->add_option("--to", c_to, "destination spec")->required();

  // estimate
  auto* est = app.add_subcommand("estimate", "run a classical flow estimator on a frame pair");
  fs::path e_a, e_b, e_out, e_gt;
  std::string e_spec;
  EstimatorFlags e_flags;
  est->add_option("--a", e_a, "first frame (PNG)")->required();
  est->add_option("--b", e_b, "second frame (PNG)")->required();
  est->add_option("--spec", e_spec, "projection the frames are in")->required();
  est->add_option("--out", e_out, "output flow (.sfl1/.flo)")->required();
  est->add_option("--gt", e_gt, "equirect GT flow (required by perturbgt)");
  est->add_option("--seed", e_flags.seed, "estimator seed");
  add_estimator_flags(est, e_flags);

  // fuse
  auto* fuse = app.add_subcommand("fuse", "fuse two equirect flow fields");
  fs::path f_a, f_b, f_out, f_gt, f_bwd_a, f_bwd_b, f_conf, f_lower, f_upper;
  std::string f_mode = "blend", f_src_a, f_src_b;
  fuse->add_option("--a", f_a, "first prediction (.sfl1)")->required();
  fuse->add_option("--b", f_b, "second prediction (.sfl1)")->required();
  fuse->add_option("--out", f_out, "fused output (.sfl1)")->required();
  fuse->add_option("--mode", f_mode, "blend | oracle-lower | oracle-upper")
      ->check(CLI::IsMember({"blend", "oracle-lower", "oracle-upper"}));
  fuse->add_option("--gt", f_gt, "ground truth (oracle modes)");
  fuse->add_option("--src-spec-a", f_src_a, "projection prediction A was estimated in");
  fuse->add_option("--src-spec-b", f_src_b, "projection prediction B was estimated in");
  fuse->add_option("--bwd-a", f_bwd_a, "backward flow of A for the consistency cue");
  fuse->add_option("--bwd-b", f_bwd_b, "backward flow of B for the consistency cue");
  fuse->add_option("--confidence", f_conf, "write the blend weights (PFM)");
  fuse->add_option("--lower", f_lower, "write the oracle lower bound (.sfl1)");
  fuse->add_option("--upper", f_upper, "write the oracle upper bound (.sfl1)");

  // eval
  auto* ev = app.add_subcommand("eval", "EPE / spherical-distance report");
  fs::path v_pred, v_gt, v_occ, v_csv, v_heat;
  std::string v_method = "method", v_dataset = "dataset";
  ev->add_option("--pred", v_pred, "predicted flow")->required();
  ev->add_option("--gt", v_gt, "ground-truth flow")->required();
  ev->add_option("--occlusion", v_occ, "visibility mask (PFM, 1 = visible)");
  ev->add_option("--method", v_method, "method label");
  ev->add_option("--dataset", v_dataset, "dataset label");
  ev->add_option("--csv", v_csv, "append the report row to this CSV");
  ev->add_option("--heatmap", v_heat, "prefix for error heatmaps (PNG+PFM)");

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "estimate per projection, fuse, evaluate");
  fs::path p_manifest, p_out;
  std::string p_proj = "E+C", p_fusion = "blend", p_cyl, p_cube;
  uint64_t p_seed = 0;
  int p_max_pairs = 0;
  bool p_fb = false;
  EstimatorFlags p_flags;
  pipe->add_option("--manifest", p_manifest, "dataset manifest (JSON lines)")->required();
  pipe->add_option("--projections", p_proj, "E+C | E+P | C+P")->capture_default_str();
  pipe->add_option("--fusion-mode", p_fusion, "blend | oracle-lower | oracle-upper")
      ->check(CLI::IsMember({"blend", "oracle-lower", "oracle-upper"}))
      ->capture_default_str();
  pipe->add_option("--out", p_out, "run directory")->required();
  pipe->add_option("--seed", p_seed, "run seed")->required();
  pipe->add_option("--cyl", p_cyl, "tri-cylinder spec override");
  pipe->add_option("--cube", p_cube, "cube-padding spec override");
  pipe->add_option("--pairs", p_max_pairs, "limit the number of pairs (0 = all)");
  pipe->add_flag("--fb-cues", p_fb, "estimate backward flows for the consistency cue");
  add_estimator_flags(pipe, p_flags);  // per-pair estimator seeds derive from --seed

  // visualize
  auto* vis = app.add_subcommand("visualize", "flow color wheel / weight map export");
  fs::path z_flow, z_out;
  std::string z_weights;
  double z_max = 0.0;
  bool z_mask_owned = false;
  vis->add_option("--flow", z_flow, "flow to render (.sfl1/.flo)");
  vis->add_option("--weights", z_weights, "projection spec whose weight map to export");
  vis->add_option("--out", z_out, "output (.png or .pfm)")->required();
  vis->add_option("--max", z_max, "fixed magnitude normalization (px)");
  vis->add_flag("--mask-owned", z_mask_owned, "zero non-owned pixels in the weight map");

  // propagate-edit
  auto* prop = app.add_subcommand("propagate-edit", "push a sprite through backward flows");
  fs::path r_manifest, r_sprite, r_out, r_track;
  int r_anchor = 0, r_frames = 30;
  double r_x = 0, r_y = 0;
  prop->add_option("--manifest", r_manifest, "dataset manifest with backward flows")->required();
  prop->add_option("--sprite", r_sprite, "RGBA sprite PNG")->required();
  prop->add_option("--anchor", r_anchor, "frame index to anchor the sprite at")
      ->capture_default_str();
  prop->add_option("--x", r_x, "sprite center x (px)")->required();
  prop->add_option("--y", r_y, "sprite center y (px)")->required();
  prop->add_option("--frames", r_frames, "how many frames to propagate")->capture_default_str();
  prop->add_option("--out", r_out, "output directory")->required();
  prop->add_option("--track", r_track, "write the sprite centroid track (CSV)");

  // allow global flags (--threads) after the subcommand name
  for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    set_max_threads(threads);
    if (*gen)
      return cmd_generate(g_schedule, g_pairs, g_objects, g_spec, g_seed, g_out, !g_no_backward);
    if (*conv) return cmd_convert(c_in, c_out, c_from, c_to);
    if (*est) return cmd_estimate(e_a, e_b, e_spec, e_out, e_flags, e_gt);
    if (*fuse)
      return cmd_fuse(f_a, f_b, f_out, f_mode, f_gt, f_src_a, f_src_b, f_bwd_a, f_bwd_b, f_conf,
                      f_lower, f_upper);
    if (*ev) return cmd_eval(v_pred, v_gt, v_occ, v_method, v_dataset, v_csv, v_heat);
    if (*pipe) {
      p_flags.seed = p_seed;
      return cmd_pipeline(p_manifest, p_proj, p_out, p_seed, p_flags, p_fusion, p_cyl, p_cube,
                          p_max_pairs, p_fb);
    }
    if (*vis) return cmd_visualize(z_flow, z_weights, z_out, z_max, z_mask_owned);
    if (*prop)
      return cmd_propagate_edit(r_manifest, r_sprite, r_anchor, r_x, r_y, r_frames, r_out, r_track);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}
