#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "fixtures.hpp"
#include "pycnoflow/geometry.hpp"
#include "pycnoflow/io.hpp"

using namespace pycnoflow;
using namespace pycnoflow::test;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int exit_code = -1;
  std::string out;
  std::string err;
};

fs::path work_dir()
{
  const fs::path dir = fs::temp_directory_path() / "pycnoflow_cli_test";
  fs::create_directories(dir);
  return dir;
}

CliRun run_cli(const std::string &args)
{
  const fs::path dir = work_dir();
  const fs::path out_path = dir / "stdout.txt";
  const fs::path err_path = dir / "stderr.txt";
  const std::string cmd = std::string(PYCNOFLOW_CLI_PATH) + " " + args +
                          " >" + out_path.string() + " 2>" +
                          err_path.string();
  const int status = std::system(cmd.c_str());
  CliRun result;
  result.exit_code = WEXITSTATUS(status);
  result.out = read_text_file(out_path.string());
  result.err = read_text_file(err_path.string());
  return result;
}

std::string fx(const std::string &name)
{
  return fixture_path(name);
}

}  // namespace

TEST_CASE("cartogram subcommand produces a 3:1 cartogram")
{
  const fs::path dir = work_dir();
  const std::string out = (dir / "cart.geojson").string();
  const std::string report_path = (dir / "cart_report.json").string();

  const CliRun run = run_cli("cartogram --geojson " + fx("half_split.geojson") +
                             " --values " + fx("half_split.csv") + " --out " +
                             out + " --grid 128 --report " + report_path);
  REQUIRE_MESSAGE(run.exit_code == 0, run.err);

  // Re-ingest the emitted GeoJSON and check the area split.
  std::map<std::string, double> values{{"L", 3.0}, {"R", 1.0}};
  const RegionMap back = load_regions(read_text_file(out), values);
  const double total = back.regions[0].area + back.regions[1].area;
  CHECK(std::abs(back.regions[0].area / total - 0.75) < 0.01);
  CHECK(std::abs(back.regions[1].area / total - 0.25) < 0.01);

  const auto report = nlohmann::json::parse(read_text_file(report_path));
  CHECK(report["converged"] == true);
  CHECK(report["regions"].size() == 2);
  CHECK(report["roughness"].contains("plateau"));

  // Report areas agree with the re-ingested geometry.
  for (const auto &region : report["regions"]) {
    const std::string id = region["id"];
    for (const auto &r : back.regions) {
      if (r.id == id) {
        CHECK(std::abs(r.area - region["achieved_area"].get<double>()) <=
              1e-9 * r.area);
      }
    }
  }
}

TEST_CASE("missing value exits 1 and names the id")
{
  const fs::path dir = work_dir();
  const CliRun run =
    run_cli("cartogram --geojson " + fx("half_split.geojson") + " --values " +
            fx("half_split_missing.csv") + " --out " +
            (dir / "x.geojson").string());
  CHECK(run.exit_code == 1);
  CHECK(run.err.find("R") != std::string::npos);
}

TEST_CASE("forced non-convergence exits 2 with converged=false")
{
  const fs::path dir = work_dir();
  const std::string report_path = (dir / "nc_report.json").string();
  const CliRun run = run_cli(
    "cartogram --geojson " + fx("half_split.geojson") + " --values " +
    fx("half_split.csv") + " --out " + (dir / "nc.geojson").string() +
    " --grid 128 --max-iters 1 --report " + report_path);
  CHECK(run.exit_code == 2);
  const auto report = nlohmann::json::parse(read_text_file(report_path));
  CHECK(report["converged"] == false);
}

TEST_CASE("pycno flow method writes a mass-preserving raster")
{
  const fs::path dir = work_dir();
  const std::string raster_path = (dir / "density.asc").string();
  const std::string report_path = (dir / "pycno_report.json").string();
  const CliRun run = run_cli(
    "pycno --geojson " + fx("half_split.geojson") + " --values " +
    fx("half_split.csv") + " --out " + (dir / "p.geojson").string() +
    " --grid 128 --density-out " + raster_path + " --report " + report_path);
  REQUIRE_MESSAGE(run.exit_code == 0, run.err);

  const DensityGrid raster = read_ascii_grid_file(raster_path);
  CHECK(raster.frame.nx == 128);
  CHECK(raster.min_value() > 0.0);
  // The raster is in input coordinates; its mass over the whole frame is
  // rho_bar * frame area = total population * frame/map ratio.
  CHECK(raster.mass() > 0.0);

  const auto report = nlohmann::json::parse(read_text_file(report_path));
  for (const auto &region : report["regions"]) {
    CHECK(region["pycno_error"].get<double>() < 0.05);
  }
  CHECK(report["roughness"]["flow"].get<double>() <
        report["roughness"]["plateau"].get<double>());
}

TEST_CASE("pycno at default grid keeps per-region errors below 2%")
{
  const fs::path dir = work_dir();
  const std::string report_path = (dir / "full_report.json").string();
  const CliRun run = run_cli(
    "pycno --geojson " + fx("half_split.geojson") + " --values " +
    fx("half_split.csv") + " --out " + (dir / "full.geojson").string() +
    " --density-out " + (dir / "full.asc").string() + " --report " +
    report_path);
  REQUIRE_MESSAGE(run.exit_code == 0, run.err);
  const auto report = nlohmann::json::parse(read_text_file(report_path));
  CHECK(report["converged"] == true);
  for (const auto &region : report["regions"]) {
    CHECK(region["pycno_error"].get<double>() < 0.02);
  }
}

TEST_CASE("pycno on the uniform fixture emits a constant raster")
{
  const fs::path dir = work_dir();
  const std::string raster_path = (dir / "uniform.asc").string();
  const CliRun run = run_cli(
    "pycno --geojson " + fx("uniform.geojson") + " --values " +
    fx("uniform.csv") + " --out " + (dir / "u.geojson").string() +
    " --grid 64 --density-out " + raster_path);
  REQUIRE_MESSAGE(run.exit_code == 0, run.err);

  const DensityGrid raster = read_ascii_grid_file(raster_path);
  // rho_bar in input units is 4 (population 4 over unit area).
  CHECK(std::abs(raster.min_value() - 4.0) < 1e-6 * 4.0);
  CHECK(std::abs(raster.max_value() - 4.0) < 1e-6 * 4.0);
}

TEST_CASE("pycno hybrid reports roughness no worse than flow")
{
  const fs::path dir = work_dir();
  const std::string report_path = (dir / "hybrid_report.json").string();
  const CliRun run = run_cli(
    "pycno --geojson " + fx("half_split.geojson") + " --values " +
    fx("half_split.csv") + " --out " + (dir / "h.geojson").string() +
    " --grid 128 --method hybrid --density-out " +
    (dir / "h.asc").string() + " --report " + report_path);
  REQUIRE_MESSAGE(run.exit_code == 0, run.err);
  const auto report = nlohmann::json::parse(read_text_file(report_path));
  CHECK(report["roughness"]["hybrid"].get<double>() <=
        report["roughness"]["flow"].get<double>());
}

TEST_CASE("pycno tobler runs the baseline without a projection")
{
  const fs::path dir = work_dir();
  const std::string raster_path = (dir / "tobler.asc").string();
  const std::string report_path = (dir / "tobler_report.json").string();
  const CliRun run = run_cli(
    "pycno --geojson " + fx("half_split.geojson") + " --values " +
    fx("half_split.csv") + " --out " + (dir / "t.geojson").string() +
    " --jacobian-grid 128 --method tobler --density-out " + raster_path +
    " --report " + report_path);
  REQUIRE_MESSAGE(run.exit_code == 0, run.err);

  const auto report = nlohmann::json::parse(read_text_file(report_path));
  CHECK(report["roughness"]["tobler"].get<double>() <
        report["roughness"]["plateau"].get<double>());
  for (const auto &region : report["regions"]) {
    CHECK(region["pycno_error"].get<double>() < 1e-6);
  }

  // Boundaries pass through unchanged.
  std::map<std::string, double> values{{"L", 3.0}, {"R", 1.0}};
  const RegionMap back =
    load_regions(read_text_file((dir / "t.geojson").string()), values);
  CHECK(back.regions[0].area == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("svg output is byte-deterministic")
{
  const fs::path dir = work_dir();
  const std::string svg1 = (dir / "m1.svg").string();
  const std::string svg2 = (dir / "m2.svg").string();
  for (const std::string &svg : {svg1, svg2}) {
    const CliRun run = run_cli(
      "pycno --geojson " + fx("uniform.geojson") + " --values " +
      fx("uniform.csv") + " --out " + (dir / "s.geojson").string() +
      " --grid 64 --density-out " + (dir / "s.asc").string() + " --svg " +
      svg);
    REQUIRE_MESSAGE(run.exit_code == 0, run.err);
  }
  CHECK(read_text_file(svg1) == read_text_file(svg2));
}
