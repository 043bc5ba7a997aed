#include <fstream>

#include <json.hpp>

#include "thermesh/pipeline.hpp"

namespace thermesh::pipeline {

using nlohmann::json;

namespace {

nn::LatentRgnnConfig latent_rgnn_defaults(bool paper, bool interlayer) {
  nn::LatentRgnnConfig c;
  c.geometry.in_channels = 2;
  c.geometry.hidden = {8, 16, 16};
  c.geometry.pool_hidden = 16;
  c.geometry.pool_layers = 2;
  c.geometry.out = 16;
  c.latent_dim = 16;
  if (paper) {
    c.hidden = interlayer ? 48 : 32;
    c.mp_hidden = interlayer ? 48 : 32;
    c.mp_blocks = interlayer ? 2 : 1;
    c.mp_depth = 2;
    c.mp_layers = 2;
  } else {
    c.hidden = 24;
    c.mp_hidden = 24;
    c.mp_blocks = 1;
    c.mp_depth = 1;
    c.mp_layers = 2;
  }
  c.global_dim = interlayer ? 3 : 4;
  return c;
}

train::TrainConfig train_defaults(bool paper, double lr, int batch, int t_max, double eta_min,
                                  int subsample) {
  train::TrainConfig t;
  t.learning_rate = lr;
  t.batch_size = batch;
  t.tbptt_steps = 8;
  t.warmup_start_factor = 0.1;
  t.warmup_epochs = paper ? 8 : 4;
  t.cosine_t_max = t_max;
  t.eta_min = eta_min;
  t.patience = paper ? 25 : 12;
  t.max_epochs = t.warmup_epochs + t_max;
  t.subsample_rate = subsample;
  return t;
}

}  // namespace

PipelineConfig PipelineConfig::preset(const std::string& scale) {
  PipelineConfig c;
  c.scale = scale;
  if (scale == "paper") {
    c.generate_count = 140;
    c.part_height_mm = 50.0;
    c.layers = 100;
    c.design_box.bounds = {{{10.0, 90.0},
                            {5.0, 45.0},
                            {5.0, 45.0},
                            {kPi / 4, 3 * kPi / 4},
                            {kPi / 4, 3 * kPi / 4},
                            {kPi / 4, 3 * kPi / 4},
                            {kPi / 4, 3 * kPi / 4}}};
    c.mesh.domain_width_mm = 270.0;
    c.mesh.metal_elem_mm = 0.75;
    c.mesh.rows_per_layer = 1;
    c.process.dt_s = 0.25;
    c.process.cooling_time_s = 10.0;
    c.vgae.encoder_hidden = {12, 24, 32};
    c.vgae.decoder_hidden = {32, 24, 12};
    c.vgae.pool_hidden = 32;
    c.interlayer = latent_rgnn_defaults(true, true);
    c.intralayer = latent_rgnn_defaults(true, false);
    c.baseline.window = 50;
    c.baseline.embed = 48;
    c.baseline.gcn_layers = 10;
    c.baseline.gru_layers = 2;
    c.baseline.gru_hidden = 48;
    c.train_vgae = train_defaults(true, 1e-3, 64, 130, 1e-4, 7);
    c.train_interlayer = train_defaults(true, 2e-3, 4, 140, 1e-5, 1);
    c.train_intralayer = train_defaults(true, 4e-3, 64, 180, 1e-5, 7);
    c.train_baseline = train_defaults(true, 1e-3, 4, 130, 1e-3, 7);
    c.rollout_subsample = 7;
  } else if (scale == "desk") {
    c.generate_count = 12;
    c.part_height_mm = 8.0;
    c.layers = 8;
    c.design_box.bounds = {{{12.0, 30.0},
                            {1.6, 6.4},
                            {1.6, 6.4},
                            {kPi / 3, 2 * kPi / 3},
                            {kPi / 3, 2 * kPi / 3},
                            {kPi / 3, 2 * kPi / 3},
                            {kPi / 3, 2 * kPi / 3}}};
    c.mesh.domain_width_mm = 90.0;
    c.mesh.metal_elem_mm = 1.25;
    c.mesh.rows_per_layer = 2;
    c.process.dt_s = 0.2;
    c.process.cooling_time_s = 4.0;
    c.vgae.encoder_hidden = {8, 12, 16};
    c.vgae.decoder_hidden = {16, 12, 8};
    c.vgae.pool_hidden = 16;
    c.interlayer = latent_rgnn_defaults(false, true);
    c.intralayer = latent_rgnn_defaults(false, false);
    c.baseline.window = 12;
    c.baseline.embed = 24;
    c.baseline.gcn_layers = 4;
    c.baseline.gru_layers = 1;
    c.baseline.gru_hidden = 24;
    c.train_vgae = train_defaults(false, 2e-3, 8, 40, 1e-4, 7);
    c.train_interlayer = train_defaults(false, 2e-3, 1, 60, 1e-5, 1);
    c.train_intralayer = train_defaults(false, 4e-3, 1, 60, 1e-5, 2);
    c.train_baseline = train_defaults(false, 1e-3, 1, 50, 1e-4, 2);
    c.rollout_subsample = 2;
  } else {
    throw ValidationError("unknown scale preset: " + scale + " (expected desk or paper)");
  }
  c.tables = default_material_tables();
  return c;
}

namespace {

void apply_train(train::TrainConfig& t, const json& j) {
  if (j.contains("learning_rate")) t.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("batch_size")) t.batch_size = j["batch_size"].get<int>();
  if (j.contains("tbptt_steps")) t.tbptt_steps = j["tbptt_steps"].get<int>();
  if (j.contains("warmup_start_factor")) t.warmup_start_factor = j["warmup_start_factor"].get<double>();
  if (j.contains("warmup_epochs")) t.warmup_epochs = j["warmup_epochs"].get<int>();
  if (j.contains("cosine_t_max")) t.cosine_t_max = j["cosine_t_max"].get<int>();
  if (j.contains("eta_min")) t.eta_min = j["eta_min"].get<double>();
  if (j.contains("patience")) t.patience = j["patience"].get<int>();
  if (j.contains("max_epochs")) t.max_epochs = j["max_epochs"].get<int>();
  if (j.contains("subsample_rate")) t.subsample_rate = j["subsample_rate"].get<int>();
}

void apply_latent_rgnn(nn::LatentRgnnConfig& c, const json& j) {
  if (j.contains("hidden")) c.hidden = j["hidden"].get<int>();
  if (j.contains("latent_dim")) c.latent_dim = j["latent_dim"].get<int>();
  if (j.contains("global_dim")) c.global_dim = j["global_dim"].get<int>();
  if (j.contains("mp_hidden")) c.mp_hidden = j["mp_hidden"].get<int>();
  if (j.contains("mp_blocks")) c.mp_blocks = j["mp_blocks"].get<int>();
  if (j.contains("mp_depth")) c.mp_depth = j["mp_depth"].get<int>();
  if (j.contains("mp_layers")) c.mp_layers = j["mp_layers"].get<int>();
  if (j.contains("geometry_hidden")) c.geometry.hidden = j["geometry_hidden"].get<std::vector<int>>();
  if (j.contains("geometry_out")) c.geometry.out = j["geometry_out"].get<int>();
  if (j.contains("geometry_pool_hidden")) c.geometry.pool_hidden = j["geometry_pool_hidden"].get<int>();
}

}  // namespace

PipelineConfig PipelineConfig::load(const std::string& config_path,
                                    const std::string& scale_override,
                                    std::optional<std::uint64_t> seed_override) {
  json j = json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ValidationError("cannot open config file: " + config_path);
    j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ValidationError("config file is not valid JSON: " + config_path);
  }
  std::string scale = !scale_override.empty()        ? scale_override
                      : j.contains("scale")          ? j["scale"].get<std::string>()
                                                     : "desk";
  PipelineConfig c = preset(scale);

  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (seed_override.has_value()) c.seed = *seed_override;
  if (j.contains("dataset_dir")) c.dataset_dir = j["dataset_dir"].get<std::string>();
  if (j.contains("checkpoint_dir")) c.checkpoint_dir = j["checkpoint_dir"].get<std::string>();
  if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
  if (j.contains("generate_count")) c.generate_count = j["generate_count"].get<int>();
  if (j.contains("workers")) c.workers = j["workers"].get<int>();
  if (j.contains("part_height_mm")) c.part_height_mm = j["part_height_mm"].get<double>();
  if (j.contains("layers")) c.layers = j["layers"].get<int>();
  if (j.contains("hierarchy_depth")) c.hierarchy_depth = j["hierarchy_depth"].get<int>();
  if (j.contains("rollout_subsample")) c.rollout_subsample = j["rollout_subsample"].get<int>();
  if (j.contains("design_box")) {
    auto arr = j["design_box"].get<std::vector<std::vector<double>>>();
    if (arr.size() != 7) throw ValidationError("config: design_box needs 7 [lo, hi] pairs");
    for (std::size_t d = 0; d < 7; ++d) {
      if (arr[d].size() != 2) throw ValidationError("config: design_box entries are [lo, hi]");
      c.design_box.bounds[d] = {arr[d][0], arr[d][1]};
    }
  }
  if (j.contains("mesh")) {
    const json& m = j["mesh"];
    if (m.contains("domain_width_mm")) c.mesh.domain_width_mm = m["domain_width_mm"].get<double>();
    if (m.contains("metal_elem_mm")) c.mesh.metal_elem_mm = m["metal_elem_mm"].get<double>();
    if (m.contains("powder_growth")) c.mesh.powder_growth = m["powder_growth"].get<double>();
    if (m.contains("powder_max_elem_mm")) c.mesh.powder_max_elem_mm = m["powder_max_elem_mm"].get<double>();
    if (m.contains("rows_per_layer")) c.mesh.rows_per_layer = m["rows_per_layer"].get<int>();
  }
  if (j.contains("process")) {
    const json& p = j["process"];
    if (p.contains("laser_power_w")) c.process.laser_power_w = p["laser_power_w"].get<double>();
    if (p.contains("beam_radius_mm")) c.process.beam_radius_mm = p["beam_radius_mm"].get<double>();
    if (p.contains("scan_speed_mm_s")) c.process.scan_speed_mm_s = p["scan_speed_mm_s"].get<double>();
    if (p.contains("cooling_time_s")) c.process.cooling_time_s = p["cooling_time_s"].get<double>();
    if (p.contains("convection_w_m2k")) c.process.convection_w_m2k = p["convection_w_m2k"].get<double>();
    if (p.contains("ambient_c")) c.process.ambient_c = p["ambient_c"].get<double>();
    if (p.contains("dt_s")) c.process.dt_s = p["dt_s"].get<double>();
  }
  if (j.contains("solver")) {
    const json& s = j["solver"];
    if (s.contains("picard_tol")) c.solver.picard_tol = s["picard_tol"].get<double>();
    if (s.contains("picard_max_iters")) c.solver.picard_max_iters = s["picard_max_iters"].get<int>();
    if (s.contains("lumped_mass")) c.solver.lumped_mass = s["lumped_mass"].get<bool>();
  }
  if (j.contains("material")) {
    const json& m = j["material"];
    auto table = [&](const char* key, PiecewiseLinear& dst) {
      if (!m.contains(key)) return;
      auto temps = m[key]["temps_c"].get<std::vector<double>>();
      auto values = m[key]["values"].get<std::vector<double>>();
      dst = PiecewiseLinear(temps, values);
    };
    if (m.contains("density_kg_m3")) c.tables.density_kg_m3 = m["density_kg_m3"].get<double>();
    table("cp_j_kgk", c.tables.cp_j_kgk);
    table("lambda_metal", c.tables.lambda_metal);
    table("lambda_powder", c.tables.lambda_powder);
    table("latent_heat", c.tables.latent_heat);
    c.tables.validate();
  }
  if (j.contains("vgae")) {
    const json& v = j["vgae"];
    if (v.contains("depth")) c.vgae.depth = v["depth"].get<int>();
    if (v.contains("latent_dim")) c.vgae.latent_dim = v["latent_dim"].get<int>();
    if (v.contains("encoder_hidden")) c.vgae.encoder_hidden = v["encoder_hidden"].get<std::vector<int>>();
    if (v.contains("decoder_hidden")) c.vgae.decoder_hidden = v["decoder_hidden"].get<std::vector<int>>();
    if (v.contains("pool_hidden")) c.vgae.pool_hidden = v["pool_hidden"].get<int>();
    if (v.contains("pool_layers")) c.vgae.pool_layers = v["pool_layers"].get<int>();
    if (v.contains("beta")) c.vgae.beta = v["beta"].get<double>();
    if (v.contains("normalize_kl")) c.vgae.normalize_kl = v["normalize_kl"].get<bool>();
  }
  if (j.contains("interlayer")) apply_latent_rgnn(c.interlayer, j["interlayer"]);
  if (j.contains("intralayer")) apply_latent_rgnn(c.intralayer, j["intralayer"]);
  if (j.contains("baseline")) {
    const json& b = j["baseline"];
    if (b.contains("window")) c.baseline.window = b["window"].get<int>();
    if (b.contains("embed")) c.baseline.embed = b["embed"].get<int>();
    if (b.contains("gcn_layers")) c.baseline.gcn_layers = b["gcn_layers"].get<int>();
    if (b.contains("gru_layers")) c.baseline.gru_layers = b["gru_layers"].get<int>();
    if (b.contains("gru_hidden")) c.baseline.gru_hidden = b["gru_hidden"].get<int>();
  }
  if (j.contains("trainer")) {
    const json& t = j["trainer"];
    if (t.contains("vgae")) apply_train(c.train_vgae, t["vgae"]);
    if (t.contains("interlayer")) apply_train(c.train_interlayer, t["interlayer"]);
    if (t.contains("intralayer")) apply_train(c.train_intralayer, t["intralayer"]);
    if (t.contains("baseline")) apply_train(c.train_baseline, t["baseline"]);
  }
  // keep the latent dims of the downstream models in lockstep with the VGAE
  c.interlayer.latent_dim = c.vgae.latent_dim;
  c.intralayer.latent_dim = c.vgae.latent_dim;
  return c;
}

}  // namespace thermesh::pipeline
