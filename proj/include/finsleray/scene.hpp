#pragma once

#include <atomic>
#include <filesystem>
#include <thread>

#include "finsleray/io.hpp"

namespace finsleray {

struct SceneResult {
  std::vector<Trajectory> trajectories;  // by ray index
  bool all_singular() const {
    for (const auto& t : trajectories)
      if (t.termination != Termination::SingularLocusHit) return false;
    return !trajectories.empty();
  }
};

inline RayRhs make_scene_rhs(const SceneConfig& cfg, const Metric& metric, double spin_sign = 1.0) {
  switch (cfg.model) {
    case RayModel::Geodesic:
      return make_geodesic_rhs(metric);
    case RayModel::Fermat:
      return make_fermat_rhs(Metric(MediumSpec{EuclideanSpec{}}),
                             std::get<ConformalSpec>(cfg.medium.value).index);
    case RayModel::Spin: {
      SpinConstants k = cfg.constants;
      k.spin = spin_sign * k.spin;
      return make_spin_rhs(metric, k);
    }
  }
  throw ConfigError("unknown ray model");
}

// constraint function used for renormalization: the base |u| for the
// refractive-index model, the medium metric otherwise
inline std::function<double(const Vec3&, const Vec3&)> scene_f_value(const SceneConfig& cfg,
                                                                     const Metric& metric) {
  if (cfg.model == RayModel::Fermat)
    return [](const Vec3&, const Vec3& u) { return norm(u); };
  return [metric](const Vec3& x, const Vec3& u) { return metric.f(x, u); };
}

inline SceneResult run_scene(const SceneConfig& cfg, double spin_sign = 1.0) {
  Metric metric(cfg.medium);
  RayRhs rhs = make_scene_rhs(cfg, metric, spin_sign);
  auto f_value = scene_f_value(cfg, metric);

  SceneResult result;
  result.trajectories.resize(cfg.rays.size());

  int threads = cfg.threads;
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads <= 0) threads = 1;
  threads = std::min<int>(threads, static_cast<int>(cfg.rays.size()));

  std::atomic<std::size_t> cursor{0};
  std::vector<std::string> errors(cfg.rays.size());
  auto worker = [&]() {
    for (;;) {
      std::size_t i = cursor.fetch_add(1);
      if (i >= cfg.rays.size()) return;
      try {
        RayState start{cfg.rays[i].x0, cfg.rays[i].u0, 0.0};
        result.trajectories[i] = integrate(rhs, f_value, start, cfg.integrator);
      } catch (const Error& e) {
        errors[i] = e.what();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty())
      throw ConfigError("ray " + std::to_string(i) + " failed: " + errors[i]);
  return result;
}

inline std::string ray_file_name(const std::string& prefix, std::size_t index,
                                 OutputFormat format) {
  char num[8];
  std::snprintf(num, sizeof(num), "%03zu", index);
  return prefix + "_ray" + num + (format == OutputFormat::Csv ? ".csv" : ".json");
}

// one trajectory file per ray; returns the file names written
inline std::vector<std::string> write_scene_output(const SceneConfig& cfg,
                                                   const SceneResult& result) {
  namespace fs = std::filesystem;
  fs::path prefix(cfg.output_path);
  if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
  std::vector<std::string> files;
  for (std::size_t i = 0; i < result.trajectories.size(); ++i) {
    std::string name = ray_file_name(cfg.output_path, i, cfg.output_format);
    std::ofstream out(name, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + name);
    if (cfg.output_format == OutputFormat::Csv)
      write_trajectory_csv(out, result.trajectories[i], cfg.model == RayModel::Spin);
    else
      write_trajectory_json(out, result.trajectories[i], cfg.model == RayModel::Spin);
    files.push_back(name);
  }
  return files;
}

// runs the scene with +|s| and -|s| and measures the per-ray shift
inline json compare_scene(const SceneConfig& cfg) {
  if (cfg.model != RayModel::Spin) throw ConfigError("compare requires a spin-model scene");
  SceneConfig c = cfg;
  c.constants.spin = std::abs(c.constants.spin);
  if (!c.integrator.sample_dt) c.integrator.sample_dt = c.integrator.t_end / 100.0;
  SceneResult plus = run_scene(c, +1.0);
  SceneResult minus = run_scene(c, -1.0);
  if (plus.all_singular() || minus.all_singular())
    throw SingularLocus("all rays terminated on the singular locus", 0.0, 0.0);

  std::optional<Vec3> grad_dir;
  if (const auto* conf = std::get_if<ConformalSpec>(&cfg.medium.value)) {
    // reference axis: index gradient at the first ray start
    Vec3T<Jet> xj;
    for (int i = 0; i < 3; ++i) xj[i] = Jet::variable(i, cfg.rays[0].x0[i], 1);
    Jet nj = eval_expr(*conf->index, xj);
    Vec3 g;
    for (int i = 0; i < 3; ++i) g[i] = nj.partial(MultiIndex::unit(i));
    if (norm(g) > 1e-14) grad_dir = normalized(g);
  }

  json rays = json::array();
  for (std::size_t i = 0; i < cfg.rays.size(); ++i) {
    ShiftReport sr = transverse_shift(plus.trajectories[i], minus.trajectories[i], grad_dir);
    json e{{"ray", i},
           {"shift", {sr.separation[0], sr.separation[1], sr.separation[2]}},
           {"shift_magnitude", sr.magnitude}};
    if (sr.has_transverse) e["transverse"] = sr.transverse_signed;
    rays.push_back(e);
  }
  return json{{"spin", std::abs(cfg.constants.spin)}, {"color", cfg.constants.color}, {"rays", rays}};
}

}  // namespace finsleray
