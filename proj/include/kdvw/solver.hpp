#pragma once

// Pseudospectral time integration of periodic KdV-type flows.
//
// Physical-space equations on a period-lambda torus (mean-zero data):
//
//   kdv:              u_t + u_xxx + u u_x       = 0   (real-valued)
//   mkdv_focusing:    u_t + u_xxx + 6 u^2 u_x   = 0   (real-valued)
//   mkdv_defocusing:  u_t + u_xxx - 6 u^2 u_x   = 0   (real-valued)
//   kdv_complex:      v_t + v_xxx - 6 i v v_x   = 0   (complex-valued; the
//                     image equation of the focusing Riccati map v = u_x + i u^2)
//
// In Fourier variables the linear part is d/dt u_hat(xi) = i xi^3 u_hat(xi).
// The integrating factor e^{-i xi^3 t} removes it exactly; the remaining
// nonlinear system is advanced with classical fourth-order Runge-Kutta
// (integrating-factor RK4). Nonlinear products are formed on the
// collocation grid and the result is Galerkin-truncated to mode indices
// |n| <= dealias_mode_limit, chosen so that aliased images of products of
// retained modes never land back on retained modes:
//
//   quadratic nonlinearity: keep |n| <= floor((M - 1) / 3),
//   cubic nonlinearity:     keep |n| <= floor((M - 1) / 4).
//
// With that truncation the scheme is the exact Galerkin flow of the
// equation on the retained band (up to time-discretization error), so the
// semi-discrete invariants (mass, L^2 norm, Hamiltonian) are conserved to
// O(dt^4) and the banded multilinear derivative identities hold exactly
// along sampled trajectories.

#include <complex>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string_view>
#include <vector>

#include "kdvw/common.hpp"
#include "kdvw/spectral.hpp"

namespace kdvw::solver {

enum class Equation { kdv, mkdv_focusing, mkdv_defocusing, kdv_complex };

[[nodiscard]] std::string_view equation_name(Equation eq);
[[nodiscard]] Equation equation_from_name(std::string_view name);  // throws on unknown
/// True for equations with a cubic nonlinearity (the two mKdV flavors).
[[nodiscard]] bool has_cubic_nonlinearity(Equation eq);
/// True for equations whose solutions stay real-valued.
[[nodiscard]] bool is_real_equation(Equation eq);

/// Largest retained mode index for alias-free grid products on M points.
[[nodiscard]] int dealias_mode_limit(Equation eq, int mode_count);

struct EvolutionSpec {
  Equation equation = Equation::kdv;
  double dt = 1e-4;            // step size, > 0
  double t_end = 1.0;          // final time; must be an integer number of steps
  int output_stride = 1;       // keep every stride-th state (t = 0 included)
  double blowup_threshold = 1e8;  // abort when the L^2 norm exceeds this
  bool nonlinearity_off = false;  // integrate the Airy part alone (testing)
};

struct RunDiagnostics {
  std::int64_t steps = 0;
  double l2_initial = 0.0;
  double l2_final = 0.0;
  double l2_max = 0.0;
};

struct Trajectory {
  EvolutionSpec spec;
  spectral::PeriodicGrid grid;
  int band_mode_limit = 0;  // dealias band used by the run
  std::vector<double> times;
  std::vector<spectral::SpectralField> samples;  // Fourier-side snapshots
  RunDiagnostics diag;

  /// Frequency threshold separating retained from discarded modes,
  /// spacing * (band_mode_limit + 1/2); this is the band limit the
  /// banded boundary operators and hierarchy must be built with.
  [[nodiscard]] double band_frequency_limit() const {
    return grid.spacing() * (static_cast<double>(band_mode_limit) + 0.5);
  }
};

/// Advance the datum. Contract: the datum lives on `grid`, is mean-zero,
/// is supported inside the dealias band, is real-valued for the real
/// equations, t_end = n * dt for integer n divisible by output_stride.
/// Throws numeric_error if the L^2 norm passes spec.blowup_threshold or a
/// coefficient stops being finite.
[[nodiscard]] Trajectory solve(const EvolutionSpec& spec, const spectral::PeriodicGrid& grid,
                               const spectral::SpectralField& datum);

/// Scaling symmetry of KdV: u(x) on period lambda maps to c^{-2} u(x / c)
/// on period c * lambda (coefficient at mode index n becomes c^{-1} times
/// the old one). Evolving the rescaled datum for time c^3 t reproduces the
/// rescaling of the original solution at time t.
[[nodiscard]] spectral::SpectralField rescale(const spectral::SpectralField& u, double c);

/// Random real mean-zero datum: independent complex Gaussian coefficients
/// at modes 1..band_mode_limit shaped by <xi>^{-(s + 1/2)} (a typical
/// H^s-regular sample), mirrored to negative modes, then normalized so the
/// H^s norm equals `amplitude` exactly up to round-off. Draw order is
/// mode-major (real part then imaginary part), so data are reproducible
/// across runs and platforms with the same seed.
[[nodiscard]] spectral::SpectralField generate_datum(const spectral::PeriodicGrid& grid,
                                                     int band_mode_limit, double sobolev_exponent,
                                                     double amplitude, std::uint64_t seed);

/// On-disk run layout (directory):
///   meta.json      - spec, grid, band, diagnostics, exact sample times
///   snapshots.bin  - [f64 period][u32 mode_count][u32 sample_count] then
///                    sample_count records of mode_count (re, im) f64 pairs,
///                    native little-endian byte order
///   samples.csv    - index, t, L2 norm per retained snapshot
void save_run(const std::filesystem::path& dir, const Trajectory& traj);
[[nodiscard]] Trajectory load_run(const std::filesystem::path& dir);

}  // namespace kdvw::solver
