#include "kdvw/hierarchy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>

namespace kdvw::hierarchy {

namespace {

using forms::KMultiplier;

// The six fused pairs of a 4-tuple, with the complementary rest indices.
struct Pair4 {
  int a, b, c, d;
};
constexpr std::array<Pair4, 6> kPairs4 = {{{0, 1, 2, 3},
                                           {0, 2, 1, 3},
                                           {0, 3, 1, 2},
                                           {1, 2, 0, 3},
                                           {1, 3, 0, 2},
                                           {2, 3, 0, 1}}};

inline double msq(const EnergyMultiplier& m, double x) { return m.squared(x); }
inline long double msq(const EnergyMultiplier& m, long double x) { return m.squared_ld(x); }

template <class T>
T sigma3_value_t(const EnergyMultiplier& m, T x1, T x2, T x3) {
  const T num = msq(m, x1) * x1 + msq(m, x2) * x2 + msq(m, x3) * x3;
  return -num / (T(9) * x1 * x2 * x3);
}

/// sum over kept fused pairs of sigma3(rest, fused) * fused.  On the
/// hyperplane M4 = -(i/4) * this and sigma4 = this / (4 beta4).
template <class T>
T fused_pair_sum(const EnergyMultiplier& m, const T* xs, const std::array<bool, 6>& keep) {
  T acc = T(0);
  for (int p = 0; p < 6; ++p) {
    if (!keep[p]) continue;
    const Pair4& pr = kPairs4[p];
    const T fused = xs[pr.a] + xs[pr.b];
    if (fused == T(0)) continue;
    acc += sigma3_value_t(m, xs[pr.c], xs[pr.d], fused) * fused;
  }
  return acc;
}

std::array<bool, 6> band_keep(const double* xs, double band) {
  std::array<bool, 6> keep;
  for (int p = 0; p < 6; ++p) {
    keep[p] = std::abs(xs[kPairs4[p].a] + xs[kPairs4[p].b]) <= band;
  }
  return keep;
}

/// All seven q-values of the tuple equal 1 (q is even, and on the
/// hyperplane the complementary pair sums share a magnitude, so the three
/// xi1-anchored sums cover all six pairs).
bool all_flat(const EnergyMultiplier& m, const double* xs) {
  return m.squared(xs[0]) == 1.0 && m.squared(xs[1]) == 1.0 && m.squared(xs[2]) == 1.0 &&
         m.squared(xs[3]) == 1.0 && m.squared(xs[0] + xs[1]) == 1.0 &&
         m.squared(xs[0] + xs[2]) == 1.0 && m.squared(xs[0] + xs[3]) == 1.0;
}

complexd m4_closed_value(const EnergyMultiplier& m, const double* xs) {
  const double s12 = xs[0] + xs[1];
  const double s13 = xs[0] + xs[2];
  const double s14 = xs[0] + xs[3];
  // pair resonance: both the fused-pair sum and the rational form collapse
  // to an exact zero (the T contributions cancel in complementary pairs)
  if (s12 == 0.0 || s13 == 0.0 || s14 == 0.0) return {0.0, 0.0};
  const double q1 = msq(m, xs[0]), q2 = msq(m, xs[1]), q3 = msq(m, xs[2]), q4 = msq(m, xs[3]);
  const double q12 = msq(m, s12), q13 = msq(m, s13), q14 = msq(m, s14);
  if (q1 == 1.0 && q2 == 1.0 && q3 == 1.0 && q4 == 1.0 && q12 == 1.0 && q13 == 1.0 &&
      q14 == 1.0) {
    return {0.0, 0.0};  // flat region: S and beta4*T/3 cancel identically
  }
  const double s_term = q1 + q2 + q3 + q4 - q12 - q13 - q14;
  const double t_term = q1 / xs[0] + q2 / xs[1] + q3 / xs[2] + q4 / xs[3];
  const double beta4 = 3.0 * s12 * s13 * s14;
  const double e4 = xs[0] * xs[1] * xs[2] * xs[3];
  return {0.0, -(-beta4 * s_term / (108.0 * e4) + t_term / 36.0)};
}

}  // namespace

double band_threshold(const PeriodicGrid& grid, int band_mode_limit) {
  require(band_mode_limit >= 0, "band_threshold: negative mode limit");
  return grid.spacing() * (static_cast<double>(band_mode_limit) + 0.5);
}

KMultiplier e2_multiplier(const EnergyMultiplier& m) {
  return {2, true, false,
          [m](const double* xs) { return complexd{m(xs[0]) * m(xs[1]), 0.0}; }};
}

KMultiplier m3_multiplier(const EnergyMultiplier& m) {
  return {3, true, false, [m](const double* xs) {
            const double q1 = msq(m, xs[0]), q2 = msq(m, xs[1]), q3 = msq(m, xs[2]);
            if (q1 == 1.0 && q2 == 1.0 && q3 == 1.0) return complexd{0.0, 0.0};
            return complexd{0.0, (q1 * xs[0] + q2 * xs[1] + q3 * xs[2]) / 3.0};
          }};
}

KMultiplier sigma3_multiplier(const EnergyMultiplier& m) {
  return {3, true, true, [m](const double* xs) {
            const double q1 = msq(m, xs[0]), q2 = msq(m, xs[1]), q3 = msq(m, xs[2]);
            if (q1 == 1.0 && q2 == 1.0 && q3 == 1.0) return complexd{0.0, 0.0};
            const double num = q1 * xs[0] + q2 * xs[1] + q3 * xs[2];
            return complexd{-num / (9.0 * xs[0] * xs[1] * xs[2]), 0.0};
          }};
}

KMultiplier m4_multiplier(const EnergyMultiplier& m, double band_frequency_limit) {
  if (std::isinf(band_frequency_limit)) {
    return {4, true, true, [m](const double* xs) { return m4_closed_value(m, xs); }};
  }
  require(band_frequency_limit > 0.0, "m4_multiplier: band limit must be positive");
  return {4, true, true, [m, band_frequency_limit](const double* xs) {
            if (all_flat(m, xs)) return complexd{0.0, 0.0};
            const auto keep = band_keep(xs, band_frequency_limit);
            return complexd{0.0, -0.25 * fused_pair_sum<double>(m, xs, keep)};
          }};
}

double sigma4_value(const EnergyMultiplier& m, const double* xs, double band_frequency_limit,
                    Sigma4Convention convention) {
  // canonical value-sorted copy: makes the result (including the resonant
  // extrapolation direction) invariant under argument permutations
  double s[4] = {xs[0], xs[1], xs[2], xs[3]};
  std::sort(s, s + 4);
  if (all_flat(m, s)) return 0.0;

  // the three complementary duos {01|23}, {02|13}, {03|12}; on the
  // hyperplane a pair vanishes iff its complement does, so these three
  // sums classify all six pairs
  const double d1 = s[0] + s[1];
  const double d2 = s[0] + s[2];
  const double d3 = s[0] + s[3];
  const auto keep = band_keep(s, band_frequency_limit);
  if (d1 != 0.0 && d2 != 0.0 && d3 != 0.0) {
    const double beta4 = 3.0 * d1 * d2 * d3;
    return fused_pair_sum<double>(m, s, keep) / (4.0 * beta4);
  }
  if (convention == Sigma4Convention::resonant_zero) return 0.0;

  // transversal limit.  Perturb within the first non-vanishing duo
  // (s[0] += h, s[c] -= h): this shifts all four resonant pair sums by
  // +-h while keeping the chosen duo's (nonzero) sums fixed, so the
  // perturbed tuple stays on the hyperplane and is fully nonresonant.
  // At least one duo survives: all three vanishing would force s = 0.
  int c = 0;
  if (d1 != 0.0) {
    c = 1;
  } else if (d2 != 0.0) {
    c = 2;
  } else {
    require(d3 != 0.0, "sigma4: degenerate zero tuple");
    c = 3;
  }
  const long double h1 = 1e-4L;
  const long double h2 = 1e-5L;
  const auto quotient = [&](long double h) -> long double {
    long double y[4] = {s[0], s[1], s[2], s[3]};
    y[0] += h;
    y[c] -= h;
    const long double acc = fused_pair_sum<long double>(m, y, keep);
    const long double beta = 3.0L * (y[0] + y[1]) * (y[0] + y[2]) * (y[0] + y[3]);
    return acc / (4.0L * beta);
  };
  const long double qa = quotient(h1);
  const long double qb = quotient(h2);
  return static_cast<double>((qb * h1 - qa * h2) / (h1 - h2));
}

KMultiplier sigma4_multiplier(const EnergyMultiplier& m, double band_frequency_limit,
                              Sigma4Convention convention) {
  require(band_frequency_limit > 0.0, "sigma4_multiplier: band limit must be positive");
  return {4, true, true, [m, band_frequency_limit, convention](const double* xs) {
            return complexd{sigma4_value(m, xs, band_frequency_limit, convention), 0.0};
          }};
}

KMultiplier m5_multiplier(const EnergyMultiplier& m, double band_frequency_limit,
                          Sigma4Convention convention) {
  return forms::prop1_boundary_banded(sigma4_multiplier(m, band_frequency_limit, convention),
                                      band_frequency_limit);
}

Hierarchy build_hierarchy(const EnergyMultiplier& m, double band_frequency_limit,
                          Sigma4Convention convention) {
  return Hierarchy{m,
                   band_frequency_limit,
                   convention,
                   m3_multiplier(m),
                   sigma3_multiplier(m),
                   m4_multiplier(m, band_frequency_limit),
                   sigma4_multiplier(m, band_frequency_limit, convention),
                   m5_multiplier(m, band_frequency_limit, convention)};
}

double eval_E2(const EnergyMultiplier& m, const SpectralField& u) {
  const double n = spectral::l2_norm(spectral::apply_I(u, m));
  return n * n;
}

double eval_E3(const Hierarchy& h, const SpectralField& u, bool parallel) {
  return eval_E2(h.m, u) + forms::eval_lambda_real(h.sigma3, u, parallel);
}

double eval_E4(const Hierarchy& h, const SpectralField& u, bool parallel) {
  return eval_E3(h, u, parallel) + forms::eval_lambda_real(h.sigma4, u, parallel);
}

double hamiltonian_energy(const SpectralField& u) {
  const double dn = spectral::l2_norm(spectral::derivative(u));
  const double cubic =
      forms::eval_lambda_real(forms::constant_multiplier(3, complexd{1.0, 0.0}), u);
  return dn * dn - cubic / 3.0;
}

void EnergyLedger::save_csv(const std::string& path) const {
  CsvWriter csv(path, {"t", "E2", "E4", "dE4_fd", "lambda5_M5", "residual"});
  for (const EnergyRow& r : rows) {
    csv.row_values({r.t, r.e2, r.e4, r.de4_fd, r.lambda5_m5, r.residual});
  }
}

EnergyLedger track_energy(const Hierarchy& h, std::span<const SpectralField> samples,
                          std::span<const double> times, bool parallel) {
  require(samples.size() == times.size(), "track_energy: samples/times size mismatch");
  require(!samples.empty(), "track_energy: no samples");
  const std::size_t n = samples.size();
  if (n >= 3) {
    const double dt = times[1] - times[0];
    for (std::size_t i = 0; i + 1 < n; ++i) {
      require(std::abs((times[i + 1] - times[i]) - dt) <= 1e-9 * std::max(std::abs(dt), 1e-12),
              "track_energy: sample times must be uniformly spaced");
    }
  }

  EnergyLedger ledger;
  ledger.rows.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    EnergyRow& r = ledger.rows[i];
    r.t = times[i];
    r.e2 = eval_E2(h.m, samples[i]);
    r.e4 = eval_E4(h, samples[i], parallel);
    r.lambda5_m5 = forms::eval_lambda_real(h.m5, samples[i], parallel);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  constexpr std::size_t kMargin = 3;  // 6th-order centred stencil
  static constexpr double w6[7] = {-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0,
                                   3.0 / 4.0,   -3.0 / 20.0, 1.0 / 60.0};
  const double dt = n >= 2 ? times[1] - times[0] : 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    EnergyRow& r = ledger.rows[i];
    if (i < kMargin || i + kMargin >= n) {
      r.de4_fd = nan;
      r.residual = nan;
      continue;
    }
    double acc = 0.0;
    for (std::size_t o = 0; o < 7; ++o) {
      acc += w6[o] * ledger.rows[i - kMargin + o].e4;
    }
    r.de4_fd = acc / dt;
    r.residual = r.de4_fd - r.lambda5_m5;
  }
  return ledger;
}

// --- bound scans ----------------------------------------------------------

namespace {

/// Deterministic bounded draw on top of the raw engine stream.
std::int64_t uniform_int(GaussianSource& g, std::int64_t lo, std::int64_t hi) {
  const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
  const std::uint64_t cut = UINT64_MAX - UINT64_MAX % range;
  std::uint64_t r = g.raw();
  while (r >= cut) r = g.raw();
  return lo + static_cast<std::int64_t>(r % range);
}

std::int64_t draw_shell(GaussianSource& g, int max_exponent2) {
  const int e = static_cast<int>(uniform_int(g, 0, max_exponent2));
  const std::int64_t mag = uniform_int(g, std::int64_t{1} << e, (std::int64_t{2} << e) - 1);
  return uniform_int(g, 0, 1) == 0 ? mag : -mag;
}

int shell_of(double magnitude) { return magnitude < 1.0 ? 0 : std::ilogb(magnitude); }

double median_of(std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  return v[mid];
}

struct RatioCollector {
  std::vector<double> ratios;
  std::vector<std::vector<double>> by_block;

  void add(int block, double ratio) {
    ratios.push_back(ratio);
    if (block >= static_cast<int>(by_block.size())) by_block.resize(block + 1);
    by_block[static_cast<std::size_t>(block)].push_back(ratio);
  }

  void finalize(BoundScanReport& report) {
    report.samples = ratios.size();
    for (double r : ratios) report.max_ratio = std::max(report.max_ratio, r);
    report.median_ratio = median_of(ratios);
    report.worst_block_median = 0.0;
    report.block_uniform = report.median_ratio > 0.0;
    constexpr std::size_t kMinBlock = 50;  // skip sparsely hit shells
    for (auto& blk : by_block) {
      if (blk.size() < kMinBlock) continue;
      const double bm = median_of(blk);
      report.worst_block_median = std::max(report.worst_block_median, bm);
      if (bm > 10.0 * report.median_ratio) report.block_uniform = false;
    }
  }
};

}  // namespace

BoundScanReport scan_m3_bound(const EnergyMultiplier& m, std::uint64_t seed, std::size_t samples,
                              int max_exponent2) {
  require(m.exponent >= -0.5 && m.exponent <= 0.0,
          "scan_m3_bound: constant-1 bound needs exponent in [-1/2, 0]");
  GaussianSource g(seed);
  const KMultiplier m3 = m3_multiplier(m);
  BoundScanReport report;
  RatioCollector collect;
  std::size_t produced = 0;
  while (produced < samples) {
    const std::int64_t n1 = draw_shell(g, max_exponent2);
    const std::int64_t n2 = draw_shell(g, max_exponent2);
    const std::int64_t n3 = -n1 - n2;
    if (n3 == 0) continue;
    ++produced;
    const double xs[3] = {double(n1), double(n2), double(n3)};
    const double bound =
        std::min({std::abs(xs[0]), std::abs(xs[1]), std::abs(xs[2])});
    const double ratio = std::abs(m3(xs)) / bound;
    if (ratio > 1.0 + 1e-12) ++report.violations;
    collect.add(shell_of(bound), ratio);
  }
  collect.finalize(report);
  return report;
}

BoundScanReport scan_m4_bound(const EnergyMultiplier& m, std::uint64_t seed, std::size_t samples,
                              int max_exponent2) {
  GaussianSource g(seed);
  const KMultiplier m4 = m4_multiplier(m);
  const double n_cut = m.cutoff;
  BoundScanReport report;
  RatioCollector collect;
  std::size_t produced = 0;
  while (produced < samples) {
    const std::int64_t n1 = draw_shell(g, max_exponent2);
    const std::int64_t n2 = draw_shell(g, max_exponent2);
    const std::int64_t n3 = draw_shell(g, max_exponent2);
    const std::int64_t n4 = -n1 - n2 - n3;
    if (n4 == 0) continue;
    const double xs[4] = {double(n1), double(n2), double(n3), double(n4)};
    const double s12 = xs[0] + xs[1], s13 = xs[0] + xs[2], s14 = xs[0] + xs[3];
    if (s12 == 0.0 || s13 == 0.0 || s14 == 0.0) {
      ++report.skipped_resonant;  // 0/0: both M4 and the alpha4 factor vanish
      continue;
    }
    ++produced;
    const double min_shell = std::min({std::abs(xs[0]), std::abs(xs[1]), std::abs(xs[2]),
                                       std::abs(xs[3]), std::abs(s12), std::abs(s13),
                                       std::abs(s14)});
    const double alpha_abs = 3.0 * std::abs(s12 * s13 * s14);
    const double denom = (n_cut + std::abs(xs[0])) * (n_cut + std::abs(xs[1])) *
                         (n_cut + std::abs(xs[2])) * (n_cut + std::abs(xs[3]));
    const double bound = alpha_abs * m.squared(min_shell) / denom;
    const double ratio = std::abs(m4(xs)) / bound;
    collect.add(shell_of(min_shell), ratio);
  }
  collect.finalize(report);
  return report;
}

BoundScanReport scan_m5_bound(const EnergyMultiplier& m, std::uint64_t seed, std::size_t samples,
                              int max_exponent2) {
  GaussianSource g(seed);
  const KMultiplier m5 = m5_multiplier(m);
  const double n_cut = m.cutoff;
  BoundScanReport report;
  RatioCollector collect;
  // the ten fused pairs of a 5-tuple with their rest indices
  static constexpr int kPairs5[10][5] = {
      {0, 1, 2, 3, 4}, {0, 2, 1, 3, 4}, {0, 3, 1, 2, 4}, {0, 4, 1, 2, 3}, {1, 2, 0, 3, 4},
      {1, 3, 0, 2, 4}, {1, 4, 0, 2, 3}, {2, 3, 0, 1, 4}, {2, 4, 0, 1, 3}, {3, 4, 0, 1, 2}};
  std::size_t produced = 0;
  while (produced < samples) {
    std::int64_t n[5];
    n[4] = 0;
    for (int i = 0; i < 4; ++i) {
      n[i] = draw_shell(g, max_exponent2);
      n[4] -= n[i];
    }
    if (n[4] == 0) continue;
    ++produced;
    double xs[5];
    for (int i = 0; i < 5; ++i) xs[i] = double(n[i]);
    double bound = 0.0;
    for (const auto& pr : kPairs5) {
      const double fused = xs[pr[0]] + xs[pr[1]];
      if (fused == 0.0) continue;
      const double c = xs[pr[2]], d = xs[pr[3]], e = xs[pr[4]];
      const double min_shell =
          std::min({std::abs(c), std::abs(d), std::abs(e), std::abs(fused), std::abs(c + d),
                    std::abs(c + e), std::abs(d + e)});
      bound += m.squared(min_shell) * std::abs(fused) /
               ((n_cut + std::abs(c)) * (n_cut + std::abs(d)) * (n_cut + std::abs(e)) *
                (n_cut + std::abs(fused)));
    }
    const double ratio = std::abs(m5(xs)) / bound;
    const double min_freq = std::min({std::abs(xs[0]), std::abs(xs[1]), std::abs(xs[2]),
                                      std::abs(xs[3]), std::abs(xs[4])});
    collect.add(shell_of(min_freq), ratio);
  }
  collect.finalize(report);
  return report;
}

MvtReport verify_mvt_control(const EnergyMultiplier& m, std::uint64_t seed, std::size_t samples) {
  require(!m.is_identity(), "verify_mvt_control: identity multiplier has no power regime");
  GaussianSource g(seed);
  MvtReport report;
  const int e_lo = static_cast<int>(std::ceil(std::log2(4.0 * m.cutoff)));
  const int e_hi = std::max(e_lo + 1, 24);
  for (std::size_t i = 0; i < samples; ++i) {
    const int e = static_cast<int>(uniform_int(g, e_lo, e_hi));
    const std::int64_t xi = uniform_int(g, std::int64_t{1} << e, (std::int64_t{2} << e) - 1);
    const std::int64_t cap = std::max<std::int64_t>(1, xi / 4);
    const std::int64_t a =
        (uniform_int(g, 0, 1) ? 1 : -1) * uniform_int(g, 1, cap);
    const std::int64_t b =
        (uniform_int(g, 0, 1) ? 1 : -1) * uniform_int(g, 1, cap);
    const double x = double(xi);
    const double q0 = m.squared(x);
    const double qa = m.squared(double(xi + a));
    const double qb = m.squared(double(xi + b));
    const double qab = m.squared(double(xi + a + b));
    const double first = std::abs(qa - q0) * x / (std::abs(double(a)) * q0);
    const double second = std::abs(qab - qa - qb + q0) * x * x /
                          (std::abs(double(a) * double(b)) * q0);
    report.max_first_ratio = std::max(report.max_first_ratio, first);
    report.max_second_ratio = std::max(report.max_second_ratio, second);
    ++report.samples;
  }
  return report;
}

}  // namespace kdvw::hierarchy
