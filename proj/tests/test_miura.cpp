#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "kdvw/miura.hpp"
#include "kdvw/solver.hpp"
#include "kdvw/spectral.hpp"

using kdvw::complexd;
using kdvw::contract_violation;
using namespace kdvw::miura;
using kdvw::spectral::PeriodicGrid;
using kdvw::spectral::SpectralField;

namespace {

constexpr double kPi = kdvw::spectral::kPi;

/// Subsample a trajectory's stored states by an integer factor.
std::vector<SpectralField> every_nth(const std::vector<SpectralField>& samples, int n) {
  std::vector<SpectralField> out;
  for (std::size_t i = 0; i < samples.size(); i += static_cast<std::size_t>(n)) {
    out.push_back(samples[i]);
  }
  return out;
}

}  // namespace

TEST_CASE("the transform of zero is zero and inputs must be real") {
  const PeriodicGrid grid(2.0 * kPi, 16);
  for (Flavor flavor : {Flavor::defocusing, Flavor::focusing}) {
    const SpectralField v = miura_transform(SpectralField(grid), flavor);
    CHECK(v.mode_count() == 32);
    CHECK(v.period() == grid.period);
    for (const complexd& c : v.raw()) CHECK(c == complexd{0.0, 0.0});
  }
  CHECK_THROWS_AS(
      (void)miura_transform(SpectralField(grid, /*real_valued=*/false), Flavor::defocusing),
      contract_violation);
}

TEST_CASE("cosine input reproduces the hand-computed image") {
  // u = cos x: u_x + u^2 = -sin x + (1 + cos 2x) / 2, and the focusing
  // image puts the square into the imaginary part.
  const PeriodicGrid grid(2.0 * kPi, 16);
  SpectralField u(grid);
  u.set_coeff(1, complexd{kPi, 0.0});
  u.set_coeff(-1, complexd{kPi, 0.0});

  const SpectralField vd = miura_transform(u, Flavor::defocusing);
  CHECK(vd.is_real_valued());
  CHECK(std::abs(vd.coeff(0) - complexd{kPi, 0.0}) < 1e-12);
  CHECK(std::abs(vd.coeff(1) - complexd{0.0, kPi}) < 1e-12);
  CHECK(std::abs(vd.coeff(-1) - complexd{0.0, -kPi}) < 1e-12);
  CHECK(std::abs(vd.coeff(2) - complexd{kPi / 2.0, 0.0}) < 1e-12);
  CHECK(std::abs(vd.coeff(-2) - complexd{kPi / 2.0, 0.0}) < 1e-12);
  CHECK(std::abs(vd.coeff(3)) < 1e-12);

  const SpectralField vf = miura_transform(u, Flavor::focusing);
  CHECK(!vf.is_real_valued());
  CHECK(std::abs(vf.coeff(0) - complexd{0.0, kPi}) < 1e-12);
  CHECK(std::abs(vf.coeff(1) - complexd{0.0, kPi}) < 1e-12);
  CHECK(std::abs(vf.coeff(-1) - complexd{0.0, -kPi}) < 1e-12);
  CHECK(std::abs(vf.coeff(2) - complexd{0.0, kPi / 2.0}) < 1e-12);
  CHECK(std::abs(vf.coeff(-2) - complexd{0.0, kPi / 2.0}) < 1e-12);
}

TEST_CASE("the derivative and the square contribute orthogonally to the L2 size") {
  // integral u_x u^2 dx = (1/3) integral (u^3)_x dx = 0, so
  // ||v||^2 = ||u_x||^2 + ||u^2||^2 for both flavors.
  const PeriodicGrid grid(2.0 * kPi, 64);
  const SpectralField u = kdvw::solver::generate_datum(grid, 15, 0.5, 2.0, 77);

  const SpectralField big = kdvw::spectral::upsample(u, 128);
  std::vector<double> s = kdvw::spectral::to_real_samples(big);
  for (double& x : s) x = x * x;
  const SpectralField usq = kdvw::spectral::from_real_samples(big.grid(), s);
  const SpectralField ux = kdvw::spectral::derivative(big);

  const double cross = kdvw::spectral::inner_product(ux, usq).real();
  CHECK(std::abs(cross) < 1e-12 * kdvw::spectral::l2_norm(ux) * kdvw::spectral::l2_norm(usq));

  const double pythagoras = std::sqrt(std::pow(kdvw::spectral::l2_norm(ux), 2) +
                                      std::pow(kdvw::spectral::l2_norm(usq), 2));
  for (Flavor flavor : {Flavor::defocusing, Flavor::focusing}) {
    const SpectralField v = miura_transform(u, flavor);
    CHECK(kdvw::spectral::l2_norm(v) == doctest::Approx(pythagoras).epsilon(1e-13));
  }
}

TEST_CASE("transformed trajectories satisfy the image equation at second order") {
  // The datum's support is kept at a third of the dealias band, so the
  // cubic term of the truncated flow is initially exact and the sampled
  // trajectory follows the untruncated equation closely; the measured
  // residual is then dominated by the time-differencing error.
  const PeriodicGrid grid(2.0 * kPi, 64);
  const int band = kdvw::solver::dealias_mode_limit(kdvw::solver::Equation::mkdv_focusing, 64);
  const SpectralField datum = kdvw::solver::generate_datum(grid, 5, 0.5, 0.3, 3);
  REQUIRE(3 * 5 <= band);

  for (Flavor flavor : {Flavor::defocusing, Flavor::focusing}) {
    kdvw::solver::EvolutionSpec spec;
    spec.equation = flavor == Flavor::defocusing ? kdvw::solver::Equation::mkdv_defocusing
                                                 : kdvw::solver::Equation::mkdv_focusing;
    spec.dt = 1e-4;
    spec.t_end = 0.04;
    spec.output_stride = 2;  // finest sampling h = 2e-4

    const kdvw::solver::Trajectory traj = kdvw::solver::solve(spec, grid, datum);
    REQUIRE(traj.samples.size() == 201);

    const auto r1 = miura_residual(traj.samples, 2e-4, flavor);
    const auto r2 = miura_residual(every_nth(traj.samples, 2), 4e-4, flavor);
    const auto r4 = miura_residual(every_nth(traj.samples, 4), 8e-4, flavor);

    const double order21 = std::log2(r2.max_residual_l2 / r1.max_residual_l2);
    const double order42 = std::log2(r4.max_residual_l2 / r2.max_residual_l2);
    CAPTURE(static_cast<int>(flavor));
    CAPTURE(r1.max_relative);
    CAPTURE(r2.max_relative);
    CAPTURE(r4.max_relative);
    CAPTURE(order21);
    CAPTURE(order42);
    CHECK(r1.max_relative < 2e-2);  // the stencil error dominates at this period
    CHECK(order21 > 1.9);
    CHECK(order21 < 2.1);
    CHECK(order42 > 1.9);
    CHECK(order42 < 2.1);

    // the mismatched flavor is not a solution of the image equation:
    // its residual does not shrink with the stride
    const Flavor wrong = flavor == Flavor::defocusing ? Flavor::focusing : Flavor::defocusing;
    const auto rw1 = miura_residual(traj.samples, 1e-4, wrong);
    const auto rw2 = miura_residual(every_nth(traj.samples, 2), 2e-4, wrong);
    CAPTURE(rw1.max_relative);
    CHECK(rw1.max_relative > 50.0 * r1.max_relative);
    CHECK(rw2.max_residual_l2 / rw1.max_residual_l2 < 1.5);
  }
}

TEST_CASE("residual contracts are enforced") {
  const PeriodicGrid grid(2.0 * kPi, 16);
  const std::vector<SpectralField> two(2, SpectralField(grid));
  CHECK_THROWS_AS((void)miura_residual(two, 1e-3, Flavor::defocusing), contract_violation);
  const std::vector<SpectralField> three(3, SpectralField(grid));
  CHECK_THROWS_AS((void)miura_residual(three, 0.0, Flavor::defocusing), contract_violation);
}

TEST_CASE("datum size transfers quadratically through the map") {
  for (double s : {0.5, 1.0}) {
    const auto a = probe_square_bounds(Flavor::defocusing, s, 2.0 * kPi, 64, 501, 400);
    const auto b = probe_square_bounds(Flavor::focusing, s, 2.0 * kPi, 64, 501, 400);
    const auto a_again = probe_square_bounds(Flavor::defocusing, s, 2.0 * kPi, 64, 501, 400);
    CAPTURE(s);
    CAPTURE(a.max_quadratic_constant);
    CAPTURE(a.median_quadratic_constant);
    CAPTURE(b.max_quadratic_constant);
    CHECK(a.samples == 400);
    CHECK(a.max_quadratic_constant == a_again.max_quadratic_constant);  // deterministic
    // Observed maxima: 0.113 at s = 1/2 and 0.055 at s = 1, so a single
    // modest cap witnesses the quadratic transfer bound at both exponents.
    CHECK(a.max_quadratic_constant > 0.01);
    CHECK(a.max_quadratic_constant < 0.15);
    CHECK(a.median_quadratic_constant <= a.max_quadratic_constant);
    // The factor carried by the quadratic term has unit modulus either way,
    // so the constant cannot depend on the flavor.
    CHECK(b.max_quadratic_constant == doctest::Approx(a.max_quadratic_constant).epsilon(1e-12));
  }
}
