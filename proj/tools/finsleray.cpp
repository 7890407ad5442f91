// finsleray: Finsler-geometry ray tracing and identity verification CLI
//
// subcommands:
//   trace <config.json>                     integrate the configured rays
//   verify <spec.json> --samples N --seed S structural-identity battery
//   compare <config.json>                   +/- helicity shift report
//   compare --files plus.csv minus.csv      shift between saved trajectories
//   tensors <spec.json> --x a,b,c --y d,e,f tensor dump at a support element
//
// exit codes: 0 ok, 1 identity failure (verify), 2 config/parse/domain
// error, 3 all rays terminated on the singular locus (trace/compare)

#include <CLI11.hpp>

#include "finsleray/scene.hpp"

using namespace finsleray;

namespace {

Vec3 parse_triplet(const std::string& text, const char* what) {
  Vec3 v{};
  std::istringstream is(text);
  std::string cell;
  for (int i = 0; i < 3; ++i) {
    if (!std::getline(is, cell, ',')) throw ConfigError(std::string(what) + ": expected a,b,c");
    v[i] = std::stod(cell);
  }
  if (std::getline(is, cell, ',')) throw ConfigError(std::string(what) + ": expected 3 components");
  return v;
}

int resolve_threads(int cli_threads) {
  // FINSLER_THREADS overrides the command-line flag
  if (const char* env = std::getenv("FINSLER_THREADS")) {
    try {
      return std::max(1, std::stoi(env));
    } catch (...) {
      throw ConfigError("FINSLER_THREADS must be an integer");
    }
  }
  return cli_threads;
}

json tensor3_json(const double t[3][3][3]) {
  json out = json::array();
  for (int i = 0; i < 3; ++i) {
    json mi = json::array();
    for (int j = 0; j < 3; ++j) {
      json mj = json::array();
      for (int k = 0; k < 3; ++k) mj.push_back(format_sig17(t[i][j][k]));
      mi.push_back(mj);
    }
    out.push_back(mi);
  }
  return out;
}

json tensor4_json(const double t[3][3][3][3]) {
  json out = json::array();
  for (int i = 0; i < 3; ++i) {
    json mi = json::array();
    for (int j = 0; j < 3; ++j) {
      json mj = json::array();
      for (int k = 0; k < 3; ++k) {
        json mk = json::array();
        for (int l = 0; l < 3; ++l) mk.push_back(format_sig17(t[i][j][k][l]));
        mj.push_back(mk);
      }
      mi.push_back(mj);
    }
    out.push_back(mi);
  }
  return out;
}

json mat3_json(const double m[3][3]) {
  json out = json::array();
  for (int i = 0; i < 3; ++i) {
    json row = json::array();
    for (int j = 0; j < 3; ++j) row.push_back(format_sig17(m[i][j]));
    out.push_back(row);
  }
  return out;
}

json mat3_json(const Mat3& m) {
  json out = json::array();
  for (int i = 0; i < 3; ++i) {
    json row = json::array();
    for (int j = 0; j < 3; ++j) row.push_back(format_sig17(m[i][j]));
    out.push_back(row);
  }
  return out;
}

json vec3_json(const Vec3& v) {
  return json::array({format_sig17(v[0]), format_sig17(v[1]), format_sig17(v[2])});
}

int cmd_trace(const std::string& config_path, int threads) {
  SceneConfig cfg = scene_config_from_file(config_path);
  if (threads > 0) cfg.threads = threads;
  SceneResult result = run_scene(cfg);
  std::vector<std::string> files = write_scene_output(cfg, result);
  for (std::size_t i = 0; i < files.size(); ++i) {
    const char* term = result.trajectories[i].termination == Termination::SingularLocusHit
                           ? " [singular locus]"
                           : "";
    std::cout << files[i] << " (" << result.trajectories[i].samples.size() << " samples)" << term
              << "\n";
  }
  return result.all_singular() ? 3 : 0;
}

int cmd_verify(const std::string& spec_path, int samples, std::uint64_t seed,
               const std::string& json_path, double spin, double color) {
  MediumSpec spec = medium_spec_from_file(spec_path);
  VerifyOptions opt;
  opt.samples = samples;
  opt.seed = seed;
  opt.constants = SpinConstants{color, spin};
  VerifyReport report = run_verify(spec, opt, spec_path);
  for (const auto& r : report.identities) {
    if (r.skipped) {
      std::printf("SKIP  %-18s (%s)\n", r.key.c_str(), r.note.c_str());
      continue;
    }
    std::printf("%s  %-18s max_residual=%.3e tol=%.0e%s%s\n", r.pass ? "PASS" : "FAIL",
                r.key.c_str(), r.max_residual, r.tolerance, r.note.empty() ? "" : "  ",
                r.note.c_str());
  }
  if (!json_path.empty()) {
    std::ofstream out(json_path);
    out << verify_report_to_json(report).dump(2) << "\n";
  }
  return report.all_pass() ? 0 : 1;
}

int cmd_compare(const std::string& config_path, const std::vector<std::string>& files,
                int threads) {
  if (!files.empty()) {
    if (files.size() != 2) throw ConfigError("--files expects exactly two trajectory files");
    std::ifstream a(files[0]), b(files[1]);
    if (!a || !b) throw ConfigError("cannot open trajectory files");
    Trajectory plus = read_trajectory_csv(a);
    Trajectory minus = read_trajectory_csv(b);
    ShiftReport sr = transverse_shift(plus, minus);
    json out{{"shift", {sr.separation[0], sr.separation[1], sr.separation[2]}},
             {"shift_magnitude", sr.magnitude}};
    std::cout << out.dump(2) << "\n";
    return 0;
  }
  SceneConfig cfg = scene_config_from_file(config_path);
  if (threads > 0) cfg.threads = threads;
  json out = compare_scene(cfg);
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_tensors(const std::string& spec_path, const std::string& xs, const std::string& ys,
                double spin, double color, bool with_spin) {
  MediumSpec spec = medium_spec_from_file(spec_path);
  SupportElement se{parse_triplet(xs, "--x"), parse_triplet(ys, "--y")};
  if (norm(se.y) == 0.0) throw ConfigError("--y must be nonzero");
  Metric metric(spec);
  GeometrySample gs = geometry_sample(metric, se);
  json out{{"x", vec3_json(se.x)},
           {"y", vec3_json(se.y)},
           {"F", format_sig17(gs.metric.F)},
           {"g", mat3_json(gs.metric.g)},
           {"g_inv", mat3_json(gs.metric.g_inv)},
           {"u", vec3_json(gs.metric.u)},
           {"A", tensor3_json(gs.cartan.A)},
           {"G", vec3_json(gs.conn.G)},
           {"N", mat3_json(gs.conn.N)},
           {"Gamma", tensor3_json(gs.conn.Gamma)},
           {"R", tensor4_json(gs.chern.R)},
           {"P", tensor4_json(gs.chern.P)},
           {"Rhat", tensor4_json(gs.hat.Rhat)},
           {"Phat", tensor4_json(gs.hat.Phat)},
           {"Qhat", tensor4_json(gs.hat.Qhat)}};
  if (with_spin) {
    SpinConstants k{color, spin};
    k.validate();
    SpinTensorSample st = spin_tensor(gs.metric, k.spin);
    CouplingSample c = couplings(gs, st, k);
    out["S"] = mat3_json(st.S_lo);
    out["Delta"] = format_sig17(c.Delta);
    out["Sigma"] = format_sig17(c.Sigma);
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finsler-geometry engine and spin-ray tracer"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads for ray batches (default: logical cores)");

  std::string trace_config;
  auto* trace = app.add_subcommand("trace", "integrate the rays of a scene config");
  trace->add_option("config", trace_config, "scene config JSON")->required();

  std::string verify_spec, verify_json;
  int verify_samples = 100;
  std::uint64_t verify_seed = 1;
  double verify_spin = 0.01, verify_color = 1.0;
  auto* verify = app.add_subcommand("verify", "run the structural-identity battery");
  verify->add_option("spec", verify_spec, "medium spec JSON")->required();
  verify->add_option("--samples", verify_samples, "sample count (default 100)");
  verify->add_option("--seed", verify_seed, "PRNG seed (default 1)");
  verify->add_option("--json", verify_json, "also write a machine-readable report");
  verify->add_option("--spin", verify_spin, "spin constant used by the spin identities");
  verify->add_option("--color", verify_color, "color constant used by the spin identities");

  std::string compare_config;
  std::vector<std::string> compare_files;
  auto* compare = app.add_subcommand("compare", "helicity-pair shift report");
  compare->add_option("config", compare_config, "spin scene config JSON");
  compare->add_option("--files", compare_files, "two saved trajectory CSV files")->expected(2);

  std::string tensors_spec, tensors_x, tensors_y;
  double tensors_spin = 0.0, tensors_color = 1.0;
  auto* tensors = app.add_subcommand("tensors", "dump all tensors at a support element");
  tensors->add_option("spec", tensors_spec, "medium spec JSON")->required();
  tensors->add_option("--x", tensors_x, "position a,b,c")->required();
  tensors->add_option("--y", tensors_y, "direction d,e,f")->required();
  tensors->add_option("--spin", tensors_spin, "include spin tensor and Delta/Sigma");
  tensors->add_option("--color", tensors_color, "color constant (with --spin)");

  CLI11_PARSE(app, argc, argv);

  try {
    threads = resolve_threads(threads);
    if (trace->parsed()) return cmd_trace(trace_config, threads);
    if (verify->parsed())
      return cmd_verify(verify_spec, verify_samples, verify_seed, verify_json, verify_spin,
                        verify_color);
    if (compare->parsed()) {
      if (compare_files.empty() && compare_config.empty())
        throw ConfigError("compare needs a config or --files");
      return cmd_compare(compare_config, compare_files, threads);
    }
    if (tensors->parsed())
      return cmd_tensors(tensors_spec, tensors_x, tensors_y, tensors_spin, tensors_color,
                         tensors->count("--spin") > 0);
  } catch (const SingularLocus& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
