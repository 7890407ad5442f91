#pragma once

#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "finsleray/verify.hpp"

namespace finsleray {

using json = nlohmann::json;

inline ExprPtr expr_from_json(const json& j, const char* what) {
  if (j.is_number()) return make_number(j.get<double>());
  if (j.is_string()) {
    try {
      return parse_field(j.get<std::string>());
    } catch (const ParseError& e) {
      throw ConfigError(std::string(what) + ": " + e.what());
    }
  }
  throw ConfigError(std::string(what) + ": expected number or expression string");
}

inline SymFormExpr sym_form_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 6)
    throw ConfigError(std::string(what) + ": expected 6 entries [q11,q12,q13,q22,q23,q33]");
  SymFormExpr f;
  for (int i = 0; i < 6; ++i) f[static_cast<std::size_t>(i)] = expr_from_json(j[i], what);
  return f;
}

inline MediumSpec medium_spec_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type")) throw ConfigError("medium: missing \"type\"");
  std::string type = j.at("type").get<std::string>();
  auto branch_of = [&](const json& o) {
    std::string b = o.value("branch", "+");
    if (b == "+" || b == "plus") return Branch::Plus;
    if (b == "-" || b == "minus") return Branch::Minus;
    throw ConfigError("branch must be \"+\" or \"-\"");
  };
  if (type == "euclidean") return MediumSpec{EuclideanSpec{}};
  if (type == "conformal")
    return MediumSpec{ConformalSpec{expr_from_json(j.at("index"), "conformal.index")}};
  if (type == "riemannian")
    return MediumSpec{RiemannianSpec{sym_form_from_json(j.at("g"), "riemannian.g")}};
  if (type == "uniaxial")
    return MediumSpec{UniaxialSpec{sym_form_from_json(j.at("a"), "uniaxial.a"),
                                   sym_form_from_json(j.at("b"), "uniaxial.b")}};
  if (type == "biaxial")
    return MediumSpec{BiaxialSpec{sym_form_from_json(j.at("a"), "biaxial.a"),
                                  sym_form_from_json(j.at("b_plus"), "biaxial.b_plus"),
                                  sym_form_from_json(j.at("b_minus"), "biaxial.b_minus"),
                                  branch_of(j)}};
  if (type == "crystal") {
    CrystalSpec c;
    c.v1 = expr_from_json(j.at("v1"), "crystal.v1");
    c.v2 = expr_from_json(j.at("v2"), "crystal.v2");
    c.v3 = expr_from_json(j.at("v3"), "crystal.v3");
    const json& e1 = j.at("e_prime");
    const json& e2 = j.at("e_double_prime");
    if (!e1.is_array() || e1.size() != 3 || !e2.is_array() || e2.size() != 3)
      throw ConfigError("crystal axes must be 3-vectors");
    for (int i = 0; i < 3; ++i) {
      c.e_prime[static_cast<std::size_t>(i)] = expr_from_json(e1[i], "crystal.e_prime");
      c.e_double_prime[static_cast<std::size_t>(i)] = expr_from_json(e2[i], "crystal.e_double_prime");
    }
    c.branch = branch_of(j);
    return MediumSpec{std::move(c)};
  }
  throw ConfigError("unknown medium type \"" + type + "\"");
}

inline MediumSpec medium_spec_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open medium spec file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("medium spec is not valid JSON: ") + e.what());
  }
  // accept either a bare medium object or a scene-style {"medium": {...}}
  if (j.contains("medium")) return medium_spec_from_json(j.at("medium"));
  return medium_spec_from_json(j);
}

// ---------------------------------------------------------------------------
// scene configuration

enum class RayModel { Geodesic, Fermat, Spin };

struct RaySpec {
  Vec3 x0{}, u0{};
};

enum class OutputFormat { Csv, Json };

struct SceneConfig {
  MediumSpec medium;
  RayModel model = RayModel::Geodesic;
  SpinConstants constants{};
  std::vector<RaySpec> rays;
  IntegratorConfig integrator;
  std::string output_path = "out";
  OutputFormat output_format = OutputFormat::Csv;
  std::uint64_t seed = 0;
  int threads = 0;  // 0: hardware concurrency
};

inline Vec3 vec3_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(std::string(what) + ": expected 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline SceneConfig scene_config_from_json(const json& j) {
  SceneConfig c;
  if (!j.contains("medium")) throw ConfigError("scene: missing \"medium\"");
  c.medium = medium_spec_from_json(j.at("medium"));

  std::string model = j.value("model", "geodesic");
  if (model == "geodesic")
    c.model = RayModel::Geodesic;
  else if (model == "fermat")
    c.model = RayModel::Fermat;
  else if (model == "spin")
    c.model = RayModel::Spin;
  else
    throw ConfigError("model must be geodesic | fermat | spin");

  if (c.model == RayModel::Fermat && !std::holds_alternative<ConformalSpec>(c.medium.value))
    throw ConfigError("fermat model requires a conformal medium (index over a euclidean base)");

  if (j.contains("constants")) {
    const json& k = j.at("constants");
    c.constants.color = k.value("color", 1.0);
    c.constants.spin = k.value("spin", 0.01);
  }
  if (c.model == RayModel::Spin) c.constants.validate();

  if (!j.contains("rays") || !j.at("rays").is_array() || j.at("rays").empty())
    throw ConfigError("scene: at least one ray required");
  for (const json& r : j.at("rays")) {
    RaySpec rs{vec3_from_json(r.at("x0"), "ray.x0"), vec3_from_json(r.at("u0"), "ray.u0")};
    if (norm(rs.u0) == 0.0) throw ConfigError("ray.u0 must be nonzero");
    c.rays.push_back(rs);
  }

  if (j.contains("integrator")) {
    const json& g = j.at("integrator");
    std::string method = g.value("method", "rk45");
    if (method == "rk4")
      c.integrator.method = IntegratorMethod::RK4;
    else if (method == "rk45")
      c.integrator.method = IntegratorMethod::RK45;
    else
      throw ConfigError("integrator.method must be rk4 | rk45");
    c.integrator.t_end = g.value("t_end", 10.0);
    c.integrator.h_init = g.value("h_init", 1e-2);
    c.integrator.h_fixed = g.value("h_fixed", 1e-3);
    c.integrator.abs_tol = g.value("abs_tol", 1e-10);
    c.integrator.rel_tol = g.value("rel_tol", 1e-10);
    c.integrator.renormalize = g.value("renormalize", true);
    c.integrator.max_steps = g.value("max_steps", 2000000L);
    if (g.contains("sample_dt")) c.integrator.sample_dt = g.at("sample_dt").get<double>();
    if (g.contains("box")) {
      c.integrator.box_lo = vec3_from_json(g.at("box").at("lo"), "box.lo");
      c.integrator.box_hi = vec3_from_json(g.at("box").at("hi"), "box.hi");
    }
    c.integrator.validate();
  }

  if (j.contains("output")) {
    c.output_path = j.at("output").value("path", "out");
    std::string fmt = j.at("output").value("format", "csv");
    if (fmt == "csv")
      c.output_format = OutputFormat::Csv;
    else if (fmt == "json")
      c.output_format = OutputFormat::Json;
    else
      throw ConfigError("output.format must be csv | json");
  }
  c.seed = j.value("seed", 0ULL);
  c.threads = j.value("threads", 0);
  return c;
}

inline SceneConfig scene_config_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scene config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scene config is not valid JSON: ") + e.what());
  }
  try {
    return scene_config_from_json(j);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scene config: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// trajectory files

inline const char* kCsvHeader = "t,x1,x2,x3,u1,u2,u3,F,Delta,Sigma";

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj, bool spin_model) {
  os << kCsvHeader << "\n";
  for (const auto& s : traj.samples) {
    os << format_shortest(s.t);
    for (int i = 0; i < 3; ++i) os << ',' << format_shortest(s.x[i]);
    for (int i = 0; i < 3; ++i) os << ',' << format_shortest(s.u[i]);
    os << ',' << format_shortest(s.F) << ',';
    if (spin_model && std::isfinite(s.delta)) os << format_shortest(s.delta);
    os << ',';
    if (spin_model && std::isfinite(s.sigma)) os << format_shortest(s.sigma);
    os << "\n";
  }
}

inline Trajectory read_trajectory_csv(std::istream& is) {
  Trajectory traj;
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("empty trajectory file");
  if (line != kCsvHeader) throw ConfigError("unexpected trajectory header: " + line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    TrajectorySample s;
    std::istringstream ls(line);
    std::string cell;
    auto next = [&](bool required) {
      if (!std::getline(ls, cell, ',')) {
        if (required) throw ConfigError("truncated trajectory row: " + line);
        cell.clear();
      }
      return cell.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(cell);
    };
    s.t = next(true);
    for (int i = 0; i < 3; ++i) s.x[i] = next(true);
    for (int i = 0; i < 3; ++i) s.u[i] = next(true);
    s.F = next(true);
    s.delta = next(false);
    s.sigma = next(false);
    traj.samples.push_back(s);
  }
  if (traj.samples.empty()) throw ConfigError("trajectory file has no samples");
  traj.t_final = traj.samples.back().t;
  return traj;
}

inline void write_trajectory_json(std::ostream& os, const Trajectory& traj, bool spin_model) {
  json rows = json::array();
  for (const auto& s : traj.samples) {
    json row{{"t", s.t},           {"x", {s.x[0], s.x[1], s.x[2]}},
             {"u", {s.u[0], s.u[1], s.u[2]}}, {"F", s.F}};
    if (spin_model && std::isfinite(s.delta)) {
      row["Delta"] = s.delta;
      row["Sigma"] = s.sigma;
    }
    rows.push_back(row);
  }
  const char* term = traj.termination == Termination::ReachedEnd      ? "reached_t_end"
                     : traj.termination == Termination::SingularLocusHit ? "singular_locus"
                     : traj.termination == Termination::LeftDomain    ? "left_domain"
                     : traj.termination == Termination::MaxSteps      ? "max_steps"
                                                                      : "step_underflow";
  json out{{"termination", term}, {"t_final", traj.t_final}, {"samples", rows}};
  os << out.dump(2) << "\n";
}

inline json verify_report_to_json(const VerifyReport& report) {
  json ids = json::array();
  for (const auto& r : report.identities) {
    json e{{"key", r.key},
           {"pass", r.pass},
           {"skipped", r.skipped},
           {"max_residual", r.max_residual},
           {"tolerance", r.tolerance}};
    if (!r.skipped) {
      e["worst_x"] = {r.worst.x[0], r.worst.x[1], r.worst.x[2]};
      e["worst_y"] = {r.worst.y[0], r.worst.y[1], r.worst.y[2]};
    }
    if (!r.note.empty()) e["note"] = r.note;
    ids.push_back(e);
  }
  return json{{"medium", report.medium},
              {"samples", report.samples},
              {"seed", report.seed},
              {"pass", report.all_pass()},
              {"identities", ids}};
}

}  // namespace finsleray
