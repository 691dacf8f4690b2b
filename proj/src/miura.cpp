#include "kdvw/miura.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "kdvw/solver.hpp"

namespace kdvw::miura {

namespace {

using spectral::PeriodicGrid;
using spectral::SpectralField;

/// Square of a field, computed alias-free on a grid with twice the mode
/// count (any representable input has support <= M/2 - 1, so the product
/// support <= M - 2 fits strictly inside the doubled band).
SpectralField squared_on_doubled_grid(const SpectralField& u) {
  const SpectralField fine = spectral::upsample(u, 2 * u.mode_count());
  if (u.is_real_valued()) {
    std::vector<double> s = spectral::to_real_samples(fine);
    for (double& v : s) v = v * v;
    return spectral::from_real_samples(fine.grid(), s);
  }
  std::vector<complexd> s = spectral::to_samples(fine);
  for (complexd& v : s) v = v * v;
  return spectral::from_complex_samples(fine.grid(), s);
}

}  // namespace

SpectralField miura_transform(const SpectralField& u, Flavor flavor) {
  require(u.is_real_valued(), "miura_transform: input must be real-valued");
  const SpectralField usq = squared_on_doubled_grid(u);
  const SpectralField ux = spectral::derivative(spectral::upsample(u, 2 * u.mode_count()));

  SpectralField v(usq.grid(), flavor == Flavor::defocusing);
  const complexd unit =
      flavor == Flavor::defocusing ? complexd{1.0, 0.0} : complexd{0.0, 1.0};
  for (std::size_t i = 0; i < v.raw().size(); ++i) {
    v.raw()[i] = ux.raw()[i] + unit * usq.raw()[i];
  }
  return v;
}

MiuraResidualReport miura_residual(std::span<const SpectralField> samples, double sample_dt,
                                   Flavor flavor) {
  require(samples.size() >= 3, "miura_residual: need at least three samples");
  require(sample_dt > 0.0, "miura_residual: sample spacing must be positive");

  std::vector<SpectralField> v;
  v.reserve(samples.size());
  for (const SpectralField& u : samples) v.push_back(miura_transform(u, flavor));

  const PeriodicGrid& g = v.front().grid();
  // residuals live on the doubled grid again: the image's square reaches
  // past its own band
  const PeriodicGrid fine(g.period, 2 * g.mode_count);

  MiuraResidualReport report;
  for (std::size_t i = 0; i < v.size(); ++i) {
    report.max_v_l2 = std::max(report.max_v_l2, spectral::l2_norm(v[i]));
  }
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    SpectralField residual = squared_on_doubled_grid(v[i]);
    // quadratic part: -6 v v_x = -3 (v^2)_x, with the extra i for the
    // focusing target; then add v_t (centered stencil) and v_xxx
    const complexd quad_unit =
        flavor == Flavor::defocusing ? complexd{-3.0, 0.0} : complexd{0.0, -3.0};
    for (int slot = 0; slot < fine.mode_count; ++slot) {
      const double xi = fine.frequency(fine.mode_at_slot(slot));
      residual.raw()[slot] *= quad_unit * complexd{0.0, xi};
    }
    const double inv_2h = 1.0 / (2.0 * sample_dt);
    for (int mode = -(g.mode_count / 2 - 1); mode <= g.mode_count / 2 - 1; ++mode) {
      const double xi = g.frequency(mode);
      const complexd vt = (v[i + 1].coeff(mode) - v[i - 1].coeff(mode)) * inv_2h;
      const complexd vxxx = complexd{0.0, -xi * xi * xi} * v[i].coeff(mode);
      residual.set_coeff(mode, residual.coeff(mode) + vt + vxxx);
    }
    report.max_residual_l2 = std::max(report.max_residual_l2, spectral::l2_norm(residual));
    ++report.interior_samples;
  }
  report.max_relative =
      report.max_v_l2 > 0.0 ? report.max_residual_l2 / report.max_v_l2 : 0.0;
  return report;
}

SquareBoundReport probe_square_bounds(Flavor flavor, double sobolev_exponent, double period,
                                      int mode_count, std::uint64_t seed, int sample_count) {
  require(sample_count > 0, "probe_square_bounds: need a positive sample count");
  const PeriodicGrid grid(period, mode_count);
  const int max_band = grid.max_mode();
  GaussianSource noise(seed);

  SquareBoundReport report;
  std::vector<double> constants;
  constants.reserve(static_cast<std::size_t>(sample_count));
  for (int k = 0; k < sample_count; ++k) {
    const double amplitude = 0.05 * std::pow(4.0 / 0.05, noise.uniform01());
    const int band =
        1 + std::min(max_band - 1, static_cast<int>(noise.uniform01() * max_band));
    const std::uint64_t datum_seed = noise.raw();
    const SpectralField u =
        solver::generate_datum(grid, band, sobolev_exponent, amplitude, datum_seed);
    SpectralField quadratic = miura_transform(u, flavor);
    const SpectralField linear =
        spectral::derivative(spectral::upsample(u, quadratic.mode_count()));
    for (int n = -(quadratic.mode_count() / 2 - 1); n <= quadratic.mode_count() / 2 - 1;
         ++n) {
      quadratic.set_coeff(n, quadratic.coeff(n) - linear.coeff(n));
    }

    const double u_s = spectral::sobolev_norm(u, sobolev_exponent);
    const double q_s = spectral::sobolev_norm(quadratic, sobolev_exponent - 1.0);
    constants.push_back(q_s / (u_s * u_s));
  }
  report.samples = sample_count;
  report.max_quadratic_constant = *std::max_element(constants.begin(), constants.end());
  std::nth_element(constants.begin(), constants.begin() + constants.size() / 2,
                   constants.end());
  report.median_quadratic_constant = constants[constants.size() / 2];
  return report;
}

}  // namespace kdvw::miura
