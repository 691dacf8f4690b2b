// Timing comparison of the OpenMP hyperplane evaluator against the serial
// reference on the energy-hierarchy multipliers.  Both paths share the
// fixed-block enumeration and pairwise reduction, so their results are
// bit-identical; this target reports wall time and speedup per arity.
//
// Usage: bench_lambda [mode_count] [repeats]   (defaults: 48 3)

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "kdvw/hierarchy.hpp"
#include "kdvw/multilinear.hpp"
#include "kdvw/solver.hpp"
#include "kdvw/spectral.hpp"

using kdvw::complexd;
using kdvw::spectral::EnergyMultiplier;
using kdvw::spectral::PeriodicGrid;
using kdvw::spectral::SpectralField;

namespace {

double time_best_of(int repeats, double& value, const auto& fn) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto start = std::chrono::steady_clock::now();
    value = fn();
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    best = std::min(best, elapsed.count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  const int mode_count = argc > 1 ? std::atoi(argv[1]) : 48;
  const int repeats = argc > 2 ? std::atoi(argv[2]) : 3;
  if (mode_count < 8 || repeats < 1) {
    std::fprintf(stderr, "usage: bench_lambda [mode_count >= 8] [repeats >= 1]\n");
    return 2;
  }

  const PeriodicGrid grid(2.0 * kdvw::spectral::kPi, mode_count);
  const int band = kdvw::solver::dealias_mode_limit(kdvw::solver::Equation::kdv, mode_count);
  const SpectralField u = kdvw::solver::generate_datum(grid, band, 0.5, 0.8, 42);
  const EnergyMultiplier m(8.0, -0.5);
  const kdvw::hierarchy::Hierarchy h =
      kdvw::hierarchy::build_hierarchy(m, kdvw::hierarchy::band_threshold(grid, band));

  std::printf("M = %d (retained band |n| <= %d), %d OpenMP threads, best of %d\n\n",
              mode_count, band, omp_get_max_threads(), repeats);
  std::printf("%-28s %12s %12s %9s %9s\n", "form", "serial [ms]", "openmp [ms]", "speedup",
              "bitwise");

  struct Case {
    const char* name;
    const kdvw::forms::KMultiplier* mult;
  };
  const Case cases[] = {
      {"Lambda_3(M3)", &h.m3},
      {"Lambda_4(M4)", &h.m4},
      {"Lambda_5(M5)", &h.m5},
  };
  for (const Case& c : cases) {
    double serial_value = 0.0, parallel_value = 0.0;
    const double t_serial = time_best_of(repeats, serial_value, [&] {
      return std::abs(kdvw::forms::eval_lambda_serial(*c.mult, u));
    });
    const double t_parallel = time_best_of(repeats, parallel_value, [&] {
      return std::abs(kdvw::forms::eval_lambda(*c.mult, u, /*parallel=*/true));
    });
    std::printf("%-28s %12.3f %12.3f %8.2fx %9s\n", c.name, 1e3 * t_serial, 1e3 * t_parallel,
                t_serial / t_parallel, serial_value == parallel_value ? "yes" : "NO");
  }
  return 0;
}
