#include <doctest.h>

#include <cmath>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gdlab/experiments.hpp"

namespace fs = std::filesystem;
using namespace gdlab::cli;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    return dir;
}

const char* kBoundaryConfig = R"({
  "kind": "scalar_boundary",
  "seed": 3,
  "out_dir": "OUTDIR",
  "params": {
    "rel_tol": 0.02,
    "cases": [
      {"depth": 1, "lambda": 2.0, "sigma": 1.0},
      {"depth": 2, "lambda": 4.0, "sigma": 1.0}
    ]
  }
})";

std::string boundary_config(const fs::path& dir) {
    std::string text = kBoundaryConfig;
    return text.replace(text.find("OUTDIR"), 6, dir.string());
}

}  // namespace

TEST_CASE("validate catches precondition violations") {
    const char* zero_lambda = R"({
      "kind": "scalar_sweep", "seed": 1, "out_dir": "x",
      "params": {"depth": 2, "lambda": 0.0, "sigma": 1.0, "steps": [0.1]}
    })";
    auto v = validate(zero_lambda);
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("lambda must be nonzero") != std::string::npos);

    const char* negative_step = R"({
      "kind": "scalar_sweep", "seed": 1, "out_dir": "x",
      "params": {"depth": 2, "lambda": 2.0, "sigma": 1.0, "steps": [0.1, -0.2]}
    })";
    v = validate(negative_step);
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("step must be positive") != std::string::npos);
}

TEST_CASE("validate rejects unknown keys and bad kinds") {
    const char* unknown = R"({
      "kind": "scalar_sweep", "seed": 1, "out_dir": "x",
      "params": {"depth": 2, "lambda": 2.0, "sigma": 1.0, "steps": [0.1], "lamda": 3.0}
    })";
    auto v = validate(unknown);
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("unknown key") != std::string::npos);

    CHECK_FALSE(validate(R"({"kind": "mystery", "seed": 1, "out_dir": "x", "params": {}})")
                    .empty());
    CHECK_FALSE(validate("this is not json").empty());
}

TEST_CASE("a Figure-3 style config validates cleanly") {
    const char* fig3 = R"({
      "kind": "matrix_single_vs_double", "seed": 1, "out_dir": "out/fig3",
      "params": {"n": 20, "depth": 20, "eig_low": -1.5, "eig_high": 1.5,
                 "num_seeds": 10, "iters": 10000}
    })";
    CHECK(validate(fig3).empty());
}

TEST_CASE("boundary run writes artifacts, digests, and a manifest") {
    const fs::path dir = fresh_dir("gdlab_boundary_run");
    const ExperimentConfig cfg = parse_config(boundary_config(dir));
    const RunManifest manifest = run(cfg);

    REQUIRE(manifest.artifacts.size() == 1);
    CHECK(manifest.artifacts[0].name == "boundary.csv");
    const std::string bytes = slurp(dir / "boundary.csv");
    CHECK(manifest.artifacts[0].digest == fnv1a64_hex(bytes));

    // rows carry predicted vs empirical boundaries; L=2 lambda=4 -> 0.25 within 5%
    std::istringstream is(bytes);
    std::string header, row1, row2;
    std::getline(is, header);
    std::getline(is, row1);
    std::getline(is, row2);
    CHECK(header == "L,lambda,predicted,empirical");
    double L, lambda, predicted, empirical;
    char comma;
    std::istringstream(row2) >> L >> comma >> lambda >> comma >> predicted >> comma >> empirical;
    CHECK(predicted == doctest::Approx(0.25));
    CHECK(std::fabs(empirical - predicted) / predicted < 0.05);

    const RunManifest parsed = manifest_from_json(slurp(dir / "manifest.json"));
    CHECK(parsed.artifacts.size() == manifest.artifacts.size());
    CHECK(parsed.seed == 3);
}

TEST_CASE("identical config and seed reproduce byte-identical CSVs") {
    const fs::path dir_a = fresh_dir("gdlab_det_a");
    const fs::path dir_b = fresh_dir("gdlab_det_b");
    run(parse_config(boundary_config(dir_a)));
    run(parse_config(boundary_config(dir_b)));
    CHECK(slurp(dir_a / "boundary.csv") == slurp(dir_b / "boundary.csv"));
}

TEST_CASE("out_dir override replaces the configured directory") {
    const fs::path dir = fresh_dir("gdlab_override");
    const ExperimentConfig cfg = parse_config(boundary_config("ignored_dir"), dir.string());
    CHECK(cfg.out_dir == dir.string());
}

TEST_CASE("emit_plotdata reshapes boundary output") {
    const fs::path dir = fresh_dir("gdlab_plotdata");
    const RunManifest manifest = run(parse_config(boundary_config(dir)));
    const auto files = emit_plotdata(manifest);
    REQUIRE(files.size() == 1);
    CHECK(slurp(files[0]) == slurp(dir / "boundary.csv"));
}

TEST_CASE("scalar sweep classifies steps on both sides of the bound") {
    const fs::path dir = fresh_dir("gdlab_sweep");
    const std::string cfg_text = R"({
      "kind": "scalar_sweep", "seed": 1, "out_dir": ")" + dir.string() + R"(",
      "params": {"depth": 2, "lambda": 4.0, "sigma": 1.0,
                 "steps": [0.05, 0.125], "max_iters": 100000,
                 "write_trajectories": true}
    })";
    REQUIRE(validate(cfg_text).empty());
    const RunManifest manifest = run(parse_config(cfg_text));

    const std::string sweep = slurp(dir / "sweep.csv");
    CHECK(sweep.find("converged") != std::string::npos);
    CHECK(fs::exists(dir / "traj_0.csv"));
    const std::string traj = slurp(dir / "traj_0.csv");
    CHECK(traj.rfind("iter,error", 0) == 0);

    const auto files = emit_plotdata(manifest);
    REQUIRE(files.size() == 1);
    CHECK(slurp(files[0]).rfind("series,x,y", 0) == 0);
}

TEST_CASE("manifest JSON round trip") {
    RunManifest m;
    m.config_echo = R"({"kind": "scalar_sweep"})";
    m.seed = 17;
    m.out_dir = "somewhere";
    m.started_at = "2026-01-01T00:00:00Z";
    m.finished_at = "2026-01-01T00:00:05Z";
    m.artifacts = {{"a.csv", "0123456789abcdef"}};
    const RunManifest back = manifest_from_json(manifest_to_json(m));
    CHECK(back.seed == m.seed);
    CHECK(back.out_dir == m.out_dir);
    REQUIRE(back.artifacts.size() == 1);
    CHECK(back.artifacts[0].name == "a.csv");
    CHECK(back.artifacts[0].digest == "0123456789abcdef");
}
