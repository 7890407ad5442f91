#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "finsleray/io.hpp"

// Drives the installed binary end to end: exit codes, file formats,
// determinism, and the frozen CSV header.

namespace fs = std::filesystem;
using namespace finsleray;

namespace {

const std::string kCli = FINSLERAY_CLI_PATH;
const std::string kData = FINSLERAY_TEST_DATA;

struct RunResult {
  int exit_code;
  std::string out;
};

RunResult run(const std::string& args, const std::string& env = "") {
  fs::path outfile = fs::temp_directory_path() / "finsleray_cli_out.txt";
  std::string cmd = env + " " + kCli + " " + args + " > " + outfile.string() + " 2>&1";
  int rc = std::system(cmd.c_str());
  std::ifstream in(outfile);
  std::stringstream ss;
  ss << in.rdbuf();
  int code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  return {code, ss.str()};
}

// copies a scene config into a scratch dir, pointing its output there
std::string stage_scene(const std::string& name, const fs::path& dir) {
  fs::create_directories(dir);
  std::ifstream in(kData + "/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  std::string marker = "OUTDIR";
  for (std::size_t at = text.find(marker); at != std::string::npos; at = text.find(marker))
    text.replace(at, marker.size(), dir.string());
  fs::path staged = dir / name;
  std::ofstream out(staged);
  out << text;
  return staged.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("trace: straight euclidean ray, frozen header, unit F column") {
  fs::path dir = fs::temp_directory_path() / "finsleray_test_trace";
  fs::remove_all(dir);
  std::string cfg = stage_scene("scene_euclidean.json", dir);
  RunResult r = run("trace " + cfg);
  CHECK(r.exit_code == 0);
  fs::path csv = dir / "euclid_ray000.csv";
  REQUIRE(fs::exists(csv));
  std::ifstream in(csv);
  Trajectory t = read_trajectory_csv(in);
  CHECK(t.samples.size() == 11);
  for (const auto& s : t.samples) {
    CHECK(s.F == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(s.x[0]) < 1e-12);
    CHECK(std::abs(s.x[2] - s.t) < 1e-10);
  }
  std::string text = slurp(csv);
  CHECK(text.rfind("t,x1,x2,x3,u1,u2,u3,F,Delta,Sigma\n", 0) == 0);
}

TEST_CASE("trace is byte-deterministic for a fixed config") {
  fs::path dir1 = fs::temp_directory_path() / "finsleray_det1";
  fs::path dir2 = fs::temp_directory_path() / "finsleray_det2";
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  RunResult r1 = run("trace " + stage_scene("scene_compare_conformal.json", dir1));
  RunResult r2 = run("trace " + stage_scene("scene_compare_conformal.json", dir2));
  CHECK(r1.exit_code == 0);
  CHECK(r2.exit_code == 0);
  // note the staged configs differ only in output paths
  CHECK(slurp(dir1 / "cmp_ray000.csv") == slurp(dir2 / "cmp_ray000.csv"));
  CHECK(slurp(dir1 / "cmp_ray001.csv") == slurp(dir2 / "cmp_ray001.csv"));
}

TEST_CASE("trace against the golden file") {
  fs::path dir = fs::temp_directory_path() / "finsleray_golden";
  fs::remove_all(dir);
  std::string cfg = stage_scene("scene_golden.json", dir);
  RunResult r = run("trace " + cfg);
  CHECK(r.exit_code == 0);
  std::string got = slurp(dir / "golden_ray000.csv");
  std::string want = slurp(fs::path(kData) / "golden_ray000.csv");
  REQUIRE(!want.empty());
  CHECK(got == want);
}

TEST_CASE("spin rays in vacuum trace the geodesic coordinates") {
  fs::path dir = fs::temp_directory_path() / "finsleray_spinvac";
  fs::remove_all(dir);
  RunResult r1 = run("trace " + stage_scene("scene_euclidean.json", dir));
  RunResult r2 = run("trace " + stage_scene("scene_spin_vacuum.json", dir));
  CHECK(r1.exit_code == 0);
  CHECK(r2.exit_code == 0);
  std::ifstream a(dir / "euclid_ray000.csv"), b(dir / "spinvac_ray000.csv");
  Trajectory ta = read_trajectory_csv(a), tb = read_trajectory_csv(b);
  REQUIRE(ta.samples.size() == tb.samples.size());
  for (std::size_t i = 0; i < ta.samples.size(); ++i)
    CHECK(norm(ta.samples[i].x - tb.samples[i].x) < 1e-9);
  // spin columns populated only in the spin trace
  std::string text = slurp(dir / "spinvac_ray000.csv");
  CHECK(text.find(",,\n") == std::string::npos);
  std::string geo = slurp(dir / "euclid_ray000.csv");
  CHECK(geo.find(",,\n") != std::string::npos);
}

TEST_CASE("trace exit codes: parse error 2, all-singular 3") {
  fs::path dir = fs::temp_directory_path() / "finsleray_codes";
  fs::remove_all(dir);
  RunResult bad = run("trace " + stage_scene("scene_bad_expr.json", dir));
  CHECK(bad.exit_code == 2);
  CHECK(bad.out.find("parse error") != std::string::npos);
  RunResult missing = run("trace /nonexistent/path.json");
  CHECK(missing.exit_code == 2);
  RunResult sing = run("trace " + stage_scene("scene_all_singular.json", dir));
  CHECK(sing.exit_code == 3);
}

TEST_CASE("verify: identities pass on sound media and fail on a corrupted one") {
  fs::path report = fs::temp_directory_path() / "finsleray_verify.json";
  RunResult ok = run("verify " + kData + "/spec_euclidean.json --samples 60 --seed 5 --json " +
                     report.string());
  CHECK(ok.exit_code == 0);
  CHECK(ok.out.find("FAIL") == std::string::npos);
  std::ifstream in(report);
  json j;
  in >> j;
  CHECK(j.at("pass").get<bool>());
  CHECK(j.at("identities").size() >= 12);

  RunResult uni = run("verify " + kData + "/spec_uniaxial.json --samples 40 --seed 5");
  CHECK(uni.exit_code == 0);

  RunResult corrupt = run("verify " + kData + "/spec_uniaxial_nonconvex.json --samples 40 --seed 5");
  CHECK(corrupt.exit_code == 1);
  CHECK(corrupt.out.find("NonPositiveDefinite") != std::string::npos);

  RunResult badspec = run("verify " + kData + "/spec_bad.json");
  CHECK(badspec.exit_code == 2);
}

TEST_CASE("compare: vacuum shifts vanish, conformal shifts split") {
  fs::path dir = fs::temp_directory_path() / "finsleray_cmp";
  fs::remove_all(dir);
  RunResult vac = run("compare " + stage_scene("scene_compare_vacuum.json", dir));
  CHECK(vac.exit_code == 0);
  json jv = json::parse(vac.out);
  for (const auto& ray : jv.at("rays"))
    CHECK(ray.at("shift_magnitude").get<double>() < 1e-9);

  RunResult conf = run("compare " + stage_scene("scene_compare_conformal.json", dir));
  CHECK(conf.exit_code == 0);
  json jc = json::parse(conf.out);
  for (const auto& ray : jc.at("rays"))
    CHECK(ray.at("shift_magnitude").get<double>() > 1e-9);
}

TEST_CASE("compare --files detects grid mismatches") {
  fs::path dir = fs::temp_directory_path() / "finsleray_cmpfiles";
  fs::remove_all(dir);
  RunResult r = run("trace " + stage_scene("scene_compare_conformal.json", dir));
  REQUIRE(r.exit_code == 0);
  fs::path a = dir / "cmp_ray000.csv";
  fs::path b = dir / "cmp_ray001.csv";
  RunResult same = run("compare --files " + a.string() + " " + a.string());
  CHECK(same.exit_code == 0);
  json js = json::parse(same.out);
  CHECK(js.at("shift_magnitude").get<double>() == 0.0);

  // hand-edit one file: drop its last row
  std::string text = slurp(b);
  text.erase(text.find_last_of('\n', text.size() - 2) + 1);
  std::ofstream out(dir / "edited.csv", std::ios::binary);
  out << text;
  out.close();
  RunResult mism = run("compare --files " + a.string() + " " + (dir / "edited.csv").string());
  CHECK(mism.exit_code == 2);
}

TEST_CASE("tensors: flat, refractive, and anisotropic dumps") {
  RunResult flat = run("tensors " + kData + "/spec_euclidean.json --x 0,0,0 --y 0,0,1");
  CHECK(flat.exit_code == 0);
  json jf = json::parse(flat.out);
  CHECK(jf.at("g")[0][0].get<std::string>() == "1");
  CHECK(jf.at("g")[0][1].get<std::string>() == "0");
  CHECK(jf.at("Gamma")[0][0][0].get<std::string>() == "0");
  CHECK(jf.at("R")[0][1][0][1].get<std::string>() == "0");

  RunResult fermat = run("tensors " + kData + "/spec_fermat.json --x 0,0,0 --y 0,0,1");
  CHECK(fermat.exit_code == 0);
  json jm = json::parse(fermat.out);
  CHECK(std::stod(jm.at("G")[0].get<std::string>()) == doctest::Approx(-1.0).epsilon(1e-12));

  RunResult uni = run("tensors " + kData + "/spec_uniaxial.json --x 0,0,0 --y 0,0,1 --spin 0.5");
  CHECK(uni.exit_code == 0);
  json ju = json::parse(uni.out);
  CHECK(std::stod(ju.at("g")[0][0].get<std::string>()) == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(std::stod(ju.at("g")[1][1].get<std::string>()) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(ju.contains("S"));
  CHECK(ju.contains("Delta"));

  RunResult dom = run("tensors " + kData + "/spec_fermat.json --x -2,0,0 --y 0,0,1");
  CHECK(dom.exit_code == 2);  // index not positive there
}

TEST_CASE("json output format carries the termination reason") {
  fs::path dir = fs::temp_directory_path() / "finsleray_json_out";
  fs::remove_all(dir);
  RunResult r = run("trace " + stage_scene("scene_json_output.json", dir));
  CHECK(r.exit_code == 0);
  std::ifstream in(dir / "jout_ray000.json");
  json j;
  in >> j;
  CHECK(j.at("termination").get<std::string>() == "reached_t_end");
  CHECK(j.at("samples").size() == 5);
  CHECK(j.at("samples").back().at("x")[0].get<double>() == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("compare exits 3 when every ray hits the singular locus") {
  fs::path dir = fs::temp_directory_path() / "finsleray_cmp_sing";
  fs::remove_all(dir);
  RunResult r = run("compare " + stage_scene("scene_all_singular.json", dir));
  CHECK(r.exit_code == 3);
}

TEST_CASE("tensors on a crystal medium spec") {
  RunResult r = run("tensors " + kData + "/spec_crystal.json --x 0.1,0,0 --y 0,1,0");
  CHECK(r.exit_code == 0);
  json j = json::parse(r.out);
  // direction orthogonal to both axes: F = 1/v3 along it
  double f = std::stod(j.at("F").get<std::string>());
  CHECK(f == doctest::Approx(1.0 / 0.95).epsilon(1e-12));
  // on an optical axis the square-root factors are not differentiable
  RunResult axis = run("tensors " + kData +
                       "/spec_crystal.json --x 0,0,0 --y 0.7158910531638176,0,0.6982120021884471");
  CHECK(axis.exit_code == 2);
}

TEST_CASE("FINSLER_THREADS overrides --threads; output independent of workers") {
  fs::path dir = fs::temp_directory_path() / "finsleray_threads";
  fs::remove_all(dir);
  std::string cfg = stage_scene("scene_compare_conformal.json", dir);
  RunResult r = run("--threads 7 trace " + cfg, "FINSLER_THREADS=1");
  CHECK(r.exit_code == 0);
  std::string serial0 = slurp(dir / "cmp_ray000.csv");
  std::string serial1 = slurp(dir / "cmp_ray001.csv");
  RunResult r4 = run("trace " + cfg, "FINSLER_THREADS=4");
  CHECK(r4.exit_code == 0);
  CHECK(slurp(dir / "cmp_ray000.csv") == serial0);
  CHECK(slurp(dir / "cmp_ray001.csv") == serial1);
  RunResult bad = run("trace " + cfg, "FINSLER_THREADS=nope");
  CHECK(bad.exit_code == 2);
}
