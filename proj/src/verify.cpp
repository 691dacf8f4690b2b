#include "kdvw/verify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "kdvw/common.hpp"
#include "kdvw/hierarchy.hpp"
#include "kdvw/lattice.hpp"
#include "kdvw/miura.hpp"
#include "kdvw/multilinear.hpp"
#include "kdvw/solver.hpp"
#include "kdvw/spectral.hpp"

namespace kdvw::verify {
namespace {

using spectral::EnergyMultiplier;
using spectral::PeriodicGrid;
using spectral::SpectralField;

template <typename... Args>
std::string strf(const char* fmt, Args... args) {
  char buf[768];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return std::string(buf);
}

struct LineFit {
  double slope = 0.0;
  double stderr_slope = 0.0;
};

LineFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  LineFit fit;
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  if (x.size() > 2) {
    const double icept = (sy - fit.slope * sx) / n;
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = std::log(y[i]) - (icept + fit.slope * std::log(x[i]));
      rss += r * r;
    }
    fit.stderr_slope = std::sqrt(rss / (n - 2.0) / (sxx - sx * sx / n));
  }
  return fit;
}

/// Random integer tuple on the zero-sum hyperplane with all entries nonzero.
template <int K>
std::array<double, K> hyperplane_tuple(std::mt19937_64& rng, int range) {
  std::uniform_int_distribution<int> draw(-range, range);
  while (true) {
    std::array<double, K> xs{};
    long long sum = 0;
    bool ok = true;
    for (int i = 0; i + 1 < K; ++i) {
      const int v = draw(rng);
      ok = ok && v != 0;
      xs[i] = static_cast<double>(v);
      sum += v;
    }
    xs[K - 1] = static_cast<double>(-sum);
    if (ok && sum != 0) return xs;
  }
}

/// Scale u in place so that eval_E2(m, u) == eps0^2 (i.e. the smoothed mass
/// of the datum is eps0).
void normalize_smoothed_mass(SpectralField& u, const EnergyMultiplier& m, double eps0) {
  const double norm = std::sqrt(hierarchy::eval_E2(m, u));
  require(norm > 0.0, "normalize_smoothed_mass: datum has no smoothed mass");
  const double scale = eps0 / norm;
  const int half = u.mode_count() / 2 - 1;
  for (int n = -half; n <= half; ++n) u.set_coeff(n, u.coeff(n) * scale);
}

/// max_i |fd6(values)_i - rhs_i| / max_i |rhs_i| over the 6th-order interior.
double fd6_relative_error(std::span<const double> values, std::span<const double> rhs,
                          double sample_dt) {
  static constexpr double w[7] = {-1.0 / 60.0, 3.0 / 20.0,  -3.0 / 4.0, 0.0,
                                  3.0 / 4.0,   -3.0 / 20.0, 1.0 / 60.0};
  require(values.size() == rhs.size() && values.size() >= 7, "fd6: need at least 7 samples");
  double scale = 0.0;
  for (std::size_t i = 3; i + 3 < rhs.size(); ++i) scale = std::max(scale, std::abs(rhs[i]));
  require(scale > 0.0, "fd6: right-hand side vanishes on the interior");
  double worst = 0.0;
  for (std::size_t i = 3; i + 3 < values.size(); ++i) {
    double fd = 0.0;
    for (int j = -3; j <= 3; ++j) fd += w[j + 3] * values[i + j];
    fd /= sample_dt;
    worst = std::max(worst, std::abs(fd - rhs[i]));
  }
  return worst / scale;
}

}  // namespace

CheckResult check_exact_identities(Level level) {
  const std::size_t tuples = level == Level::full ? 100000 : 10000;
  std::mt19937_64 rng(4201);
  std::uniform_int_distribution<int> draw(-20000, 20000);

  // beta_3 = 3 xi1 xi2 xi3 on the triple hyperplane, in exact int64.
  std::size_t bad3 = 0;
  for (std::size_t i = 0; i < tuples; ++i) {
    const long long a = draw(rng), b = draw(rng), c = -a - b;
    if (a * a * a + b * b * b + c * c * c != 3 * a * b * c) ++bad3;
  }
  // beta_4 = 3 (xi1+xi2)(xi1+xi3)(xi1+xi4) on the quadruple hyperplane.
  std::size_t bad4 = 0;
  for (std::size_t i = 0; i < tuples; ++i) {
    const long long a = draw(rng), b = draw(rng), c = draw(rng), d = -a - b - c;
    const long long lhs = a * a * a + b * b * b + c * c * c + d * d * d;
    if (lhs != 3 * (a + b) * (a + c) * (a + d)) ++bad4;
  }

  // M4 vanishes exactly at pair-resonant points and on all-flat tuples.
  const EnergyMultiplier m(32.0, -0.5);
  const forms::KMultiplier m4 = hierarchy::m4_multiplier(m);
  std::uniform_int_distribution<int> mid(1, 10000);
  std::uniform_int_distribution<int> small(-7, 7);
  double max_abs = 0.0;
  for (std::size_t i = 0; i < tuples / 10; ++i) {
    const double a = static_cast<double>(mid(rng)), b = static_cast<double>(mid(rng));
    std::array<double, 4> xs = {a, -a, b, -b};
    std::shuffle(xs.begin(), xs.end(), rng);
    max_abs = std::max(max_abs, std::abs(m4(xs)));
    // all entries below cutoff/4: every q-value is 1, so M4 is exactly zero
    while (true) {
      const int p = small(rng), q = small(rng), r = small(rng), s = -p - q - r;
      if (p == 0 || q == 0 || r == 0 || s == 0 || std::abs(s) > 7) continue;
      const std::array<double, 4> flat = {double(p), double(q), double(r), double(s)};
      max_abs = std::max(max_abs, std::abs(m4(flat)));
      break;
    }
  }

  CheckResult res;
  res.name = "exact-identities";
  res.measured = max_abs;
  res.threshold = 0.0;
  res.pass = bad3 == 0 && bad4 == 0 && max_abs == 0.0;
  res.detail = strf(
      "factorization failures %zu+%zu of %zu tuples each; max |M4| on "
      "pair-resonant and all-flat strata %.3g (exact zero required)",
      bad3, bad4, tuples, max_abs);
  return res;
}

CheckResult check_derivative_chain(Level level) {
  (void)level;  // the keystone configuration is cheap enough to keep at both levels
  const PeriodicGrid grid(2.0 * spectral::kPi, 32);
  // Rough datum (shaped at the operator regularity s = -1/2) so the band
  // above the cutoff is saturated: the banded quartic and quintic fluxes
  // live entirely on fused pairs beyond N = 8, and a smooth datum leaves
  // their scale within roundoff of the energy columns, which the centered
  // difference then amplifies by 1/dt.
  const SpectralField datum = solver::generate_datum(grid, 10, -0.5, 1.0, 21);

  solver::EvolutionSpec spec;
  spec.equation = solver::Equation::kdv;
  spec.dt = 1e-4;
  spec.t_end = 8e-3;
  // The energy corrections oscillate at the cubic dispersive phases (|beta_5|
  // up to ~2e3 for band-10 data), so the stencil needs every step.
  spec.output_stride = 1;  // 81 samples, 1e-4 apart
  const solver::Trajectory traj = solver::solve(spec, grid, datum);
  const double sample_dt = spec.dt * spec.output_stride;

  const EnergyMultiplier m(8.0, -0.5);
  const hierarchy::Hierarchy h = hierarchy::build_hierarchy(m, traj.band_frequency_limit());

  const std::size_t n = traj.samples.size();
  std::vector<double> e2(n), e3(n), e4(n), r3(n), r4(n), r5(n);
  for (std::size_t i = 0; i < n; ++i) {
    const SpectralField& u = traj.samples[i];
    e2[i] = hierarchy::eval_E2(m, u);
    e3[i] = hierarchy::eval_E3(h, u);
    e4[i] = hierarchy::eval_E4(h, u);
    r3[i] = forms::eval_lambda_real(h.m3, u);
    r4[i] = forms::eval_lambda_real(h.m4, u);
    r5[i] = forms::eval_lambda_real(h.m5, u);
  }
  const double rel2 = fd6_relative_error(e2, r3, sample_dt);
  const double rel3 = fd6_relative_error(e3, r4, sample_dt);
  const double rel4 = fd6_relative_error(e4, r5, sample_dt);

  CheckResult res;
  res.name = "derivative-chain";
  res.measured = std::max({rel2, rel3, rel4});
  res.threshold = 1e-5;
  res.pass = res.measured < res.threshold;
  res.detail = strf(
      "max interior FD6 relative error: dE2 vs L3(M3) %.3g, dE3 vs L4(M4) %.3g, "
      "dE4 vs L5(M5) %.3g (limit 1e-5; %zu samples)",
      rel2, rel3, rel4, n);
  return res;
}

CheckResult check_hamiltonian_conservation(Level level) {
  const PeriodicGrid grid(2.0 * spectral::kPi, 64);
  const SpectralField datum = solver::generate_datum(grid, 21, 1.5, 0.5, 7);

  solver::EvolutionSpec spec;
  spec.equation = solver::Equation::kdv;
  spec.dt = 1e-4;
  spec.t_end = level == Level::full ? 1.0 : 0.1;
  spec.output_stride = 100;
  const solver::Trajectory traj = solver::solve(spec, grid, datum);

  const double h0 = hierarchy::hamiltonian_energy(traj.samples.front());
  const double l20 = spectral::l2_norm(traj.samples.front());
  double h_drift = 0.0, l2_drift = 0.0, mass = 0.0;
  for (const SpectralField& u : traj.samples) {
    h_drift = std::max(h_drift, std::abs(hierarchy::hamiltonian_energy(u) - h0));
    l2_drift = std::max(l2_drift, std::abs(spectral::l2_norm(u) - l20));
    mass = std::max(mass, std::abs(u.coeff(0)));
  }
  const double h_rel = h_drift / std::abs(h0);
  const double l2_rel = l2_drift / l20;

  CheckResult res;
  res.name = "hamiltonian-conservation";
  res.measured = h_rel;
  res.threshold = 1e-9;
  res.pass = h_rel < 1e-9 && l2_rel < 1e-10 && mass < 1e-10;
  res.detail = strf(
      "over t in [0,%g]: Hamiltonian drift %.3g rel (limit 1e-9), L2 drift %.3g rel "
      "(limit 1e-10), max |mean mode| %.3g (limit 1e-10)",
      spec.t_end, h_rel, l2_rel, mass);
  return res;
}

CheckResult check_almost_conservation_decay(Level level) {
  const PeriodicGrid grid(spectral::kPi, 64);
  const int keep = solver::dealias_mode_limit(solver::Equation::kdv, grid.mode_count);
  const double eps0 = 0.25;
  const std::vector<double> cutoffs =
      level == Level::full ? std::vector<double>{4.0, 8.0, 16.0, 32.0} : std::vector<double>{4.0, 16.0};
  const std::vector<std::uint64_t> seeds =
      level == Level::full ? std::vector<std::uint64_t>{11, 12, 13} : std::vector<std::uint64_t>{11};

  solver::EvolutionSpec spec;
  spec.equation = solver::Equation::kdv;
  spec.dt = 1e-4;
  spec.t_end = level == Level::full ? 1.0 : 0.25;
  spec.output_stride = level == Level::full ? 100 : 50;

  std::vector<double> sups;
  std::string table;
  for (const double cutoff : cutoffs) {
    const EnergyMultiplier m(cutoff, -0.5);
    double sup = 0.0;
    for (const std::uint64_t seed : seeds) {
      SpectralField datum = solver::generate_datum(grid, keep, 1.5, 1.0, seed);
      normalize_smoothed_mass(datum, m, eps0);
      const solver::Trajectory traj = solver::solve(spec, grid, datum);
      const hierarchy::Hierarchy h = hierarchy::build_hierarchy(m, traj.band_frequency_limit());
      const double e4_0 = hierarchy::eval_E4(h, traj.samples.front());
      for (std::size_t i = 1; i < traj.samples.size(); ++i)
        sup = std::max(sup, std::abs(hierarchy::eval_E4(h, traj.samples[i]) - e4_0));
    }
    sups.push_back(sup);
    table += strf(" N=%g:%.3g", cutoff, sup);
  }
  const LineFit fit = fit_loglog(cutoffs, sups);

  CheckResult res;
  res.name = "almost-conservation-decay";
  res.measured = fit.slope;
  res.threshold = -2.2;
  res.pass = fit.slope <= -2.2;
  res.detail = strf(
      "sup_t |E4(t)-E4(0)| per cutoff:%s; log-log slope %.3f +- %.3f (limit <= -2.2; "
      "eps0 %.2f, %zu seed(s), window [0,%g])",
      table.c_str(), fit.slope, fit.stderr_slope, eps0, seeds.size(), spec.t_end);
  return res;
}

CheckResult check_small_data_ratio(Level level) {
  const PeriodicGrid grid(2.0 * spectral::kPi, 32);
  const int keep = solver::dealias_mode_limit(solver::Equation::kdv, grid.mode_count);
  const EnergyMultiplier m(8.0, -0.5);
  const hierarchy::Hierarchy h = hierarchy::build_hierarchy(m, grid.frequency(keep));
  const std::uint64_t seed_count = level == Level::full ? 100 : 30;

  double global_sup = 0.0;
  std::vector<double> per_eps;
  std::string table;
  for (const double eps0 : {0.05, 0.1, 0.2}) {
    double sup = 0.0;
    for (std::uint64_t seed = 1; seed <= seed_count; ++seed) {
      SpectralField u = solver::generate_datum(grid, keep, -0.5, 1.0, seed);
      normalize_smoothed_mass(u, m, eps0);
      const double e2 = hierarchy::eval_E2(m, u);
      const double e4 = hierarchy::eval_E4(h, u);
      const double denom = eps0 * eps0 * eps0 * (1.0 + eps0);
      sup = std::max(sup, std::abs(e4 - e2) / denom);
    }
    per_eps.push_back(sup);
    global_sup = std::max(global_sup, sup);
    table += strf(" eps0=%.2f:%.3g", eps0, sup);
  }
  const double spread = *std::max_element(per_eps.begin(), per_eps.end()) /
                        *std::min_element(per_eps.begin(), per_eps.end());

  CheckResult res;
  res.name = "small-data-ratio";
  res.measured = spread;
  res.threshold = 10.0;
  res.pass = spread < 10.0 && global_sup <= 0.05;
  res.detail = strf(
      "sup |E4-E2|/(eps0^3+eps0^4) per datum size:%s; spread %.2f (limit < 10), "
      "single-constant witness %.3g <= 0.05 (%llu seeds each)",
      table.c_str(), spread, global_sup, static_cast<unsigned long long>(seed_count));
  return res;
}

CheckResult check_miura_residual(Level level) {
  const PeriodicGrid grid(8.0 * spectral::kPi, 64);
  const std::vector<int> strides =
      level == Level::full ? std::vector<int>{8, 4, 2} : std::vector<int>{8, 4};

  double min_order = 1e300, max_rel = 0.0;
  std::string table;
  for (const miura::Flavor flavor : {miura::Flavor::defocusing, miura::Flavor::focusing}) {
    const SpectralField datum = solver::generate_datum(grid, 5, 0.5, 0.03, 3);
    solver::EvolutionSpec spec;
    spec.equation = flavor == miura::Flavor::defocusing ? solver::Equation::mkdv_defocusing
                                                        : solver::Equation::mkdv_focusing;
    spec.dt = 1e-4;
    spec.t_end = 0.04;
    spec.output_stride = strides.back();  // densest run; coarser grids subsample it
    const solver::Trajectory traj = solver::solve(spec, grid, datum);

    std::vector<double> residuals;
    for (const int stride : strides) {
      const int step = stride / strides.back();
      std::vector<SpectralField> sub;
      for (std::size_t i = 0; i < traj.samples.size(); i += step) sub.push_back(traj.samples[i]);
      const miura::MiuraResidualReport rep =
          miura::miura_residual(sub, spec.dt * stride, flavor);
      residuals.push_back(rep.max_relative);
      max_rel = std::max(max_rel, rep.max_relative);
    }
    const char* tag = flavor == miura::Flavor::defocusing ? "defocusing" : "focusing";
    table += strf(" %s:", tag);
    for (std::size_t i = 0; i + 1 < residuals.size(); ++i) {
      const double order = std::log2(residuals[i] / residuals[i + 1]);
      min_order = std::min(min_order, order);
      table += strf(" order %.3f", order);
    }
  }

  CheckResult res;
  res.name = "miura-residual";
  res.measured = min_order;
  res.threshold = 1.9;
  res.pass = min_order >= 1.9 && max_rel < 1e-6;
  res.detail = strf(
      "image-equation residual convergence as the output stride halves:%s "
      "(limit >= 1.9 each); coarsest relative residual %.3g < 1e-6",
      table.c_str(), max_rel);
  return res;
}

CheckResult check_strichartz_counts(Level level) {
  const std::vector<double> shells =
      level == Level::full ? std::vector<double>{4.0, 16.0, 64.0} : std::vector<double>{4.0, 16.0};
  const std::vector<int> lambdas =
      level == Level::full ? std::vector<int>{1, 16, 64} : std::vector<int>{1, 16};

  double c_max = 0.0, fiber_max = 0.0;
  for (const double shell : shells)
    for (const int lam : lambdas) {
      const lattice::CountReport rep = lattice::strichartz_count(shell, lam);
      c_max = std::max(c_max, rep.ratio);
      fiber_max = std::max(fiber_max, rep.per_fiber_ratio_max);
    }
  const lattice::CountReport small = lattice::strichartz_count(0.5, 4);
  const lattice::CountReport regression = lattice::strichartz_count(4.0, 1);

  CheckResult res;
  res.name = "strichartz-counting";
  res.measured = c_max;
  res.threshold = 16.0;
  res.pass = c_max <= 16.0 && fiber_max <= 2.0 && small.normalized_sup <= 2.0 &&
             regression.sup_count == 2;
  res.detail = strf(
      "sup count / (1/sqrt(N)+1/lambda) <= %.2f over the %zux%zu grid (single constant, "
      "limit 16); per-fiber ratio <= %.2f (limit 2); sub-unit shell normalized sup %.2f "
      "(O(1) limit 2); unit-lattice regression count %lld == 2",
      c_max, shells.size(), lambdas.size(), fiber_max, small.normalized_sup,
      static_cast<long long>(regression.sup_count));
  return res;
}

CheckResult check_mu_measures(Level level) {
  const std::vector<double> xis =
      level == Level::full ? std::vector<double>{1.0, 2.0, 5.0} : std::vector<double>{1.0, 2.0};
  const std::vector<int> lambdas =
      level == Level::full ? std::vector<int>{1, 8} : std::vector<int>{1};
  const int max_pow = level == Level::full ? 12 : 8;

  double peak = 0.0, worst_slope = -1e300;
  bool tails_fall = true;
  for (const double xi : xis)
    for (const int lam : lambdas) {
      std::vector<double> sizes, ratios;
      for (int p = 4; p <= max_pow; ++p) {
        const double shell = static_cast<double>(1 << p);
        const lattice::MuSetReport rep = lattice::mu_set_measure(xi, shell, lam);
        sizes.push_back(shell);
        ratios.push_back(rep.ratio);
      }
      const double series_peak = *std::max_element(ratios.begin(), ratios.end());
      peak = std::max(peak, series_peak);
      tails_fall = tails_fall && ratios.back() < series_peak;
      worst_slope = std::max(worst_slope, fit_loglog(sizes, ratios).slope);
    }

  CheckResult res;
  res.name = "mu-set-measure";
  res.measured = peak;
  res.threshold = 0.5;
  res.pass = peak < 0.5 && worst_slope <= -0.15 && tails_fall;
  res.detail = strf(
      "measure / (lambda M^{3/4}) peak %.3f (limit < 0.5) over M in [2^4, 2^%d]; "
      "per-series log-log slope <= %.3f (limit -0.15); every tail below its peak: %s",
      peak, max_pow, worst_slope, tails_fall ? "yes" : "no");
  return res;
}

CheckResult check_oracle_equivalence(Level level) {
  const PeriodicGrid grid(2.0 * spectral::kPi, 16);
  const EnergyMultiplier m(4.0, -0.5);
  const hierarchy::Hierarchy h = hierarchy::build_hierarchy(m);
  const std::vector<std::uint64_t> seeds =
      level == Level::full ? std::vector<std::uint64_t>{31, 32, 33} : std::vector<std::uint64_t>{31};

  double eval_rel = 0.0;
  for (const std::uint64_t seed : seeds) {
    const SpectralField u = solver::generate_datum(grid, 5, 0.5, 0.8, seed);
    for (const forms::KMultiplier* mult : {&h.m3, &h.m4, &h.m5}) {
      const complexd fast = forms::eval_lambda(*mult, u);
      const complexd brute = forms::eval_lambda_bruteforce(*mult, u);
      eval_rel = std::max(eval_rel, std::abs(fast - brute) / std::max(std::abs(brute), 1e-30));
    }
  }

  std::mt19937_64 rng(905);
  const int tuples = level == Level::full ? 300 : 60;
  const forms::KMultiplier sigma3 = hierarchy::sigma3_multiplier(m);
  const forms::KMultiplier sigma4 = hierarchy::sigma4_multiplier(m);
  const forms::KMultiplier b3_reduced = forms::prop1_boundary(sigma3);
  const forms::KMultiplier b3_full = forms::prop1_boundary_full_sym(sigma3);
  const forms::KMultiplier m5_full = forms::prop1_boundary_full_sym(sigma4);
  double sym_rel = 0.0;
  for (int i = 0; i < tuples; ++i) {
    const auto x4 = hyperplane_tuple<4>(rng, 60);
    sym_rel = std::max(sym_rel, std::abs(b3_reduced(x4) - b3_full(x4)) / (1.0 + std::abs(b3_full(x4))));
    const auto x5 = hyperplane_tuple<5>(rng, 30);
    sym_rel = std::max(sym_rel, std::abs(h.m5(x5) - m5_full(x5)) / (1.0 + std::abs(m5_full(x5))));
  }

  const forms::KMultiplier m4_closed = hierarchy::m4_multiplier(m);
  const forms::KMultiplier m4_fused = hierarchy::m4_multiplier(m, 1e18);
  const forms::KMultiplier m3_boundary = forms::prop1_boundary(hierarchy::e2_multiplier(m));
  double closed_rel = 0.0;
  for (int i = 0; i < tuples; ++i) {
    const auto x4 = hyperplane_tuple<4>(rng, 60);
    const complexd a = m4_closed(x4);
    closed_rel = std::max(closed_rel, std::abs(a - m4_fused(x4)) / (1.0 + std::abs(a)));
    closed_rel = std::max(closed_rel, std::abs(a - b3_reduced(x4)) / (1.0 + std::abs(a)));
    const auto x3 = hyperplane_tuple<3>(rng, 60);
    closed_rel = std::max(closed_rel,
                          std::abs(h.m3(x3) - m3_boundary(x3)) / (1.0 + std::abs(h.m3(x3))));
  }

  CheckResult res;
  res.name = "oracle-equivalence";
  res.measured = eval_rel;
  res.threshold = 1e-12;
  res.pass = eval_rel <= 1e-12 && sym_rel <= 1e-11 && closed_rel <= 1e-10;
  res.detail = strf(
      "optimized vs brute-force Lambda_k (k=3,4,5): rel %.3g (limit 1e-12); reduced vs "
      "full-permutation boundary: %.3g (limit 1e-11); closed forms vs generated: %.3g "
      "(limit 1e-10)",
      eval_rel, sym_rel, closed_rel);
  return res;
}

CheckResult check_bound_scans(Level level) {
  const bool full = level == Level::full;
  const EnergyMultiplier m(8.0, -0.5);
  const hierarchy::BoundScanReport r3 =
      hierarchy::scan_m3_bound(m, 9001, full ? 20000 : 4000);
  const hierarchy::BoundScanReport r4 =
      hierarchy::scan_m4_bound(m, 9002, full ? 20000 : 4000);
  const hierarchy::BoundScanReport r5 =
      hierarchy::scan_m5_bound(m, 9003, full ? 4000 : 1000);
  const hierarchy::MvtReport mvt =
      hierarchy::verify_mvt_control(m, 42, full ? 50000 : 10000);

  CheckResult res;
  res.name = "pointwise-bound-scans";
  res.measured = std::max({r3.max_ratio, r4.max_ratio, r5.max_ratio});
  res.threshold = 1.0;
  res.pass = r3.violations == 0 && r3.max_ratio <= 1.0 + 1e-12 && r4.max_ratio <= 1.0 &&
             r4.block_uniform && r5.max_ratio <= 1.0 && r5.block_uniform &&
             mvt.max_first_ratio <= 4.0 / 3.0 + 1e-4 && mvt.max_second_ratio <= 16.0 / 3.0 + 1e-4;
  res.detail = strf(
      "|M3|/min(N1,N2,N3) max %.3f with 0 violations; M4 ratio max %.3f, M5 ratio max "
      "%.3f (limits 1, no dyadic block over 10x median: %s/%s); difference control of "
      "m^2: first %.3f <= 4/3, second %.3f <= 16/3",
      r3.max_ratio, r4.max_ratio, r5.max_ratio, r4.block_uniform ? "yes" : "no",
      r5.block_uniform ? "yes" : "no", mvt.max_first_ratio, mvt.max_second_ratio);
  return res;
}

std::vector<CheckResult> run_all(Level level) {
  return {check_exact_identities(level),
          check_derivative_chain(level),
          check_hamiltonian_conservation(level),
          check_almost_conservation_decay(level),
          check_small_data_ratio(level),
          check_miura_residual(level),
          check_strichartz_counts(level),
          check_mu_measures(level),
          check_oracle_equivalence(level),
          check_bound_scans(level)};
}

}  // namespace kdvw::verify
