#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "kdvw/common.hpp"
#include "kdvw/hierarchy.hpp"
#include "kdvw/solver.hpp"
#include "kdvw/spectral.hpp"

using kdvw::contract_violation;
using kdvw::CsvWriter;
using kdvw::format_double;
using kdvw::Manifest;
using kdvw::spectral::EnergyMultiplier;
using kdvw::spectral::PeriodicGrid;
using kdvw::spectral::SpectralField;

namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const char* leaf) {
  const fs::path dir = fs::temp_directory_path() / "kdvw_format_tests" / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Fit {
  double slope = 0.0;
  double stderr_slope = 0.0;
};

Fit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  REQUIRE(n == ys.size());
  REQUIRE(n >= 3);
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  Fit f;
  f.slope = sxy / sxx;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - (my + f.slope * (lx[i] - mx));
    ss += r * r;
  }
  f.stderr_slope = std::sqrt(ss / static_cast<double>(n - 2) / sxx);
  return f;
}

}  // namespace

TEST_CASE("manifest round-trips through save and load") {
  Manifest mf;
  mf.set("kind", "decay-scan");
  mf.set("format_version", "1");
  mf.set_double("dt", 1e-4);
  mf.set_double("period", 2.0 * kdvw::spectral::kPi);
  mf.set_int("mode_count", 64);
  mf.set("cutoffs", "4,8,16,32");
  mf.set("dt", "2e-4");  // replaces in place, keeps position

  const fs::path dir = scratch_dir("manifest");
  mf.save(dir / "manifest.txt");
  const Manifest back = Manifest::load(dir / "manifest.txt");

  REQUIRE(back.entries.size() == mf.entries.size());
  for (std::size_t i = 0; i < mf.entries.size(); ++i) {
    CHECK(back.entries[i].first == mf.entries[i].first);
    CHECK(back.entries[i].second == mf.entries[i].second);
  }
  CHECK(back.get("kind") == "decay-scan");
  CHECK(back.get_double("dt") == 2e-4);
  CHECK(back.get_double("period") == 2.0 * kdvw::spectral::kPi);  // exact round-trip
  CHECK(back.get_int_or("mode_count", 0) == 64);
  CHECK(back.get_or("missing", "fallback") == "fallback");
  CHECK(back.find("missing") == nullptr);
  CHECK_THROWS_AS((void)back.get("missing"), contract_violation);
}

TEST_CASE("manifest load skips comments and blank lines") {
  const fs::path dir = scratch_dir("manifest_comments");
  {
    std::ofstream out(dir / "m.txt");
    out << "# experiment configuration\n"
        << "\n"
        << "kind=solve\n"
        << "  \n"
        << "dt=1e-4\n"
        << "# trailing note\n";
  }
  const Manifest mf = Manifest::load(dir / "m.txt");
  REQUIRE(mf.entries.size() == 2);
  CHECK(mf.get("kind") == "solve");
  CHECK(mf.get_double("dt") == 1e-4);
}

TEST_CASE("doubles print as the lowest-precision exact decimal") {
  // integers render as plain integers
  CHECK(format_double(0.0) == "0");
  CHECK(format_double(10.0) == "10");
  CHECK(format_double(-3.0) == "-3");
  CHECK(format_double(1048576.0) == "1048576");
  // non-integers round-trip exactly through strtod
  for (const double v : {0.1, 1.0 / 3.0, kdvw::spectral::kPi, 1e-300, -2.718281828459045,
                         6.022e23, 0.25, 5e-324}) {
    const std::string text = format_double(v);
    CHECK(std::strtod(text.c_str(), nullptr) == v);
  }
}

TEST_CASE("csv writer emits the declared header and exact cells") {
  const fs::path dir = scratch_dir("csv");
  {
    CsvWriter csv(dir / "t.csv", {"a", "b", "c"});
    csv.row_values({1.0, 0.5, 1e-9});
    csv.row({"x", "y", "z"});
  }
  CHECK(slurp(dir / "t.csv") == "a,b,c\n1,0.5,1e-09\nx,y,z\n");
}

TEST_CASE("decay slope estimate is stable under doubling the time-sample density") {
  // One solve per cutoff at the denser stride; the coarser series is the
  // even-index subsequence, so the two sup-increment ledgers are nested by
  // construction and the fitted slopes must agree within fit noise.
  const PeriodicGrid grid(kdvw::spectral::kPi, 64);
  const int keep = kdvw::solver::dealias_mode_limit(kdvw::solver::Equation::kdv, 64);
  const double eps0 = 0.25;

  std::vector<double> cutoffs = {4.0, 8.0, 16.0, 32.0};
  std::vector<double> sup_dense, sup_coarse;
  for (const double n : cutoffs) {
    const EnergyMultiplier m(n, -0.5);
    SpectralField datum = kdvw::solver::generate_datum(grid, keep, 1.5, 1.0, 11);
    const double scale = eps0 / std::sqrt(kdvw::hierarchy::eval_E2(m, datum));
    for (kdvw::complexd& c : datum.raw()) c *= scale;

    kdvw::solver::EvolutionSpec spec;
    spec.dt = 1e-4;
    spec.t_end = 0.4;
    spec.output_stride = 200;
    const kdvw::solver::Trajectory traj = kdvw::solver::solve(spec, grid, datum);
    const kdvw::hierarchy::Hierarchy h =
        kdvw::hierarchy::build_hierarchy(m, traj.band_frequency_limit());

    const double e4_0 = kdvw::hierarchy::eval_E4(h, traj.samples.front());
    double dense = 0.0, coarse = 0.0;
    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
      const double inc = std::abs(kdvw::hierarchy::eval_E4(h, traj.samples[i]) - e4_0);
      dense = std::max(dense, inc);
      if (i % 2 == 0) coarse = std::max(coarse, inc);
    }
    CHECK(dense >= coarse);  // nested sampling can only raise the sup
    REQUIRE(dense > 0.0);
    REQUIRE(coarse > 0.0);
    sup_dense.push_back(dense);
    sup_coarse.push_back(coarse);
  }

  const Fit dense_fit = fit_loglog(cutoffs, sup_dense);
  const Fit coarse_fit = fit_loglog(cutoffs, sup_coarse);
  const double tolerance = std::max(dense_fit.stderr_slope, coarse_fit.stderr_slope);
  CHECK(std::abs(dense_fit.slope - coarse_fit.slope) <= tolerance);
}
