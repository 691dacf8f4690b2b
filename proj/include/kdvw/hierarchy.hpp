#pragma once
// Modified-energy hierarchy for the periodic KdV flow.
//
// Given the renormalisation multiplier m (spectral::EnergyMultiplier) and
// q = m^2, the corrected energies are
//
//   E2(u) = ||I u||_{L2}^2 = Lambda_2(m(xi1) m(xi2))
//   E3(u) = E2(u) + Lambda_3(sigma3)
//   E4(u) = E3(u) + Lambda_4(sigma4)
//
// with the closed-form multipliers (all on the zero-sum hyperplane)
//
//   M3     = (i/3) * (q(xi1) xi1 + q(xi2) xi2 + q(xi3) xi3)
//   sigma3 = -(q(xi1) xi1 + q(xi2) xi2 + q(xi3) xi3) / (9 xi1 xi2 xi3)
//   M4     = -i * ( -beta4 * S / (108 e4) + T / 36 )
//            S = q(xi1)+...+q(xi4) - q(xi1+xi2) - q(xi1+xi3) - q(xi1+xi4)
//            T = q(xi1)/xi1 + ... + q(xi4)/xi4
//            beta4 = xi1^3+...+xi4^3 = 3 (xi1+xi2)(xi1+xi3)(xi1+xi4)
//            e4 = xi1 xi2 xi3 xi4
//   sigma4 = -M4 / alpha4, extended across pair resonances by convention
//   M5     = pair boundary of sigma4 (ten fused terms)
//
// They satisfy sigma_k * alpha_k + M_k = 0 pointwise, so that along the
// flow d/dt E2 = Lambda_3(M3), d/dt E3 = Lambda_4(M4), d/dt E4 =
// Lambda_5(M5).  For a Galerkin-truncated trajectory the identities hold
// exactly only with the band-limited multipliers, which insert the
// indicator |xi_a + xi_b| <= band on every fused pair; pass the
// trajectory's band frequency limit to get those.  (M3 is unaffected:
// fused pairs of an in-band triple are automatically in band.)
//
// sigma4 at a pair resonance (alpha4 = 0) is a removable singularity off
// double resonances; the `resonant_limit` convention extrapolates the
// transversal limit (Richardson in long double, on a value-sorted copy of
// the tuple, so the value is permutation invariant), `resonant_zero`
// substitutes 0.  Every energy/derivative identity holds under either
// convention; only the printed sigma4 samples differ.
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "kdvw/multilinear.hpp"
#include "kdvw/spectral.hpp"

namespace kdvw::hierarchy {

using spectral::EnergyMultiplier;
using spectral::PeriodicGrid;
using spectral::SpectralField;

enum class Sigma4Convention { resonant_limit, resonant_zero };

/// Frequency threshold classifying "mode index within band_mode_limit":
/// spacing * (band_mode_limit + 1/2), immune to round-off in spacing*j.
double band_threshold(const PeriodicGrid& grid, int band_mode_limit);

inline constexpr double kUnbanded = std::numeric_limits<double>::infinity();

// --- pointwise multipliers ---------------------------------------------

forms::KMultiplier e2_multiplier(const EnergyMultiplier& m);  // m(xi1) m(xi2)
forms::KMultiplier m3_multiplier(const EnergyMultiplier& m);
forms::KMultiplier sigma3_multiplier(const EnergyMultiplier& m);

/// band = kUnbanded: closed rational form with two exact-zero strata
/// (some xi_i + xi_j == 0, and all seven q-values == 1).  Finite band:
/// the six-term fused-pair form with indicators.
forms::KMultiplier m4_multiplier(const EnergyMultiplier& m, double band_frequency_limit = kUnbanded);

forms::KMultiplier sigma4_multiplier(const EnergyMultiplier& m,
                                     double band_frequency_limit = kUnbanded,
                                     Sigma4Convention convention = Sigma4Convention::resonant_limit);

forms::KMultiplier m5_multiplier(const EnergyMultiplier& m,
                                 double band_frequency_limit = kUnbanded,
                                 Sigma4Convention convention = Sigma4Convention::resonant_limit);

/// Pointwise sigma4 (exposed for convention tests). xs must sum to zero
/// and have nonzero entries.
double sigma4_value(const EnergyMultiplier& m, const double* xs, double band_frequency_limit,
                    Sigma4Convention convention);

// --- assembled hierarchy ------------------------------------------------

struct Hierarchy {
  EnergyMultiplier m;
  double band_frequency_limit;
  Sigma4Convention convention;
  forms::KMultiplier m3, sigma3, m4, sigma4, m5;
};

Hierarchy build_hierarchy(const EnergyMultiplier& m, double band_frequency_limit = kUnbanded,
                          Sigma4Convention convention = Sigma4Convention::resonant_limit);

/// ||I u||^2 (does not need the correction multipliers).
double eval_E2(const EnergyMultiplier& m, const SpectralField& u);
double eval_E3(const Hierarchy& h, const SpectralField& u, bool parallel = true);
double eval_E4(const Hierarchy& h, const SpectralField& u, bool parallel = true);

/// ||u_x||^2 - (1/3) integral u^3: exactly conserved by the continuous
/// flow and semi-discretely by the Galerkin truncation.
double hamiltonian_energy(const SpectralField& u);

// --- almost-conservation ledger -----------------------------------------

struct EnergyRow {
  double t = 0.0;
  double e2 = 0.0;
  double e4 = 0.0;
  double de4_fd = 0.0;      // 6th-order FD of the e4 column (NaN in margins)
  double lambda5_m5 = 0.0;  // Lambda_5(M5) at this sample
  double residual = 0.0;    // de4_fd - lambda5_m5 (NaN in margins)
};

struct EnergyLedger {
  std::vector<EnergyRow> rows;
  void save_csv(const std::string& path) const;
};

/// Evaluate the hierarchy along uniformly spaced trajectory samples.
EnergyLedger track_energy(const Hierarchy& h, std::span<const SpectralField> samples,
                          std::span<const double> times, bool parallel = true);

// --- pointwise bound scans ----------------------------------------------

/// Stratified dyadic scan of a multiplier estimate.  Each sample draws
/// integer frequencies shell-by-shell, closes the hyperplane exactly, and
/// records ratio = |multiplier| / bound.  Resonant 0/0 tuples are skipped.
struct BoundScanReport {
  std::size_t samples = 0;           // ratios actually recorded
  std::size_t skipped_resonant = 0;  // excluded 0/0 tuples
  std::size_t violations = 0;        // hard per-sample failures (M3 scan)
  double max_ratio = 0.0;
  double median_ratio = 0.0;
  double worst_block_median = 0.0;  // largest per-shell median
  bool block_uniform = true;        // no shell median > 10x global median
};

/// |M3| <= min(|xi1|, |xi2|, |xi3|): constant-1 bound, counted as
/// violations. Requires exponent in [-1/2, 0] (where d/dt [q(t) t] is in
/// [0, 1]).
BoundScanReport scan_m3_bound(const EnergyMultiplier& m, std::uint64_t seed, std::size_t samples,
                              int max_exponent2 = 20);

/// ratio of |M4| to |alpha4| q(min shell) / prod_i (N + |xi_i|), where the
/// min runs over the four frequencies and the three pair sums.
BoundScanReport scan_m4_bound(const EnergyMultiplier& m, std::uint64_t seed, std::size_t samples,
                              int max_exponent2 = 20);

/// ratio of |M5| to the sum over fused pairs {a,b} of
///   q(N_*) |xi_a+xi_b| / ((N+|xi_c|)(N+|xi_d|)(N+|xi_e|)(N+|xi_a+xi_b|))
/// with N_* the smallest of the four sigma4 arguments and their pair sums.
BoundScanReport scan_m5_bound(const EnergyMultiplier& m, std::uint64_t seed, std::size_t samples,
                              int max_exponent2 = 20);

/// First/second difference control of q = m^2 in the pure power regime:
///   |q(xi+a) - q(xi)|            <= C1 |a| q(xi)/xi
///   |q(xi+a+b)-q(xi+a)-q(xi+b)+q(xi)| <= C2 |a||b| q(xi)/xi^2
/// sampled with |a|,|b| <= xi/4 and xi/2 >= 2N. Reports the largest
/// observed normalised ratios (the would-be C1, C2).
struct MvtReport {
  double max_first_ratio = 0.0;
  double max_second_ratio = 0.0;
  std::size_t samples = 0;
};
MvtReport verify_mvt_control(const EnergyMultiplier& m, std::uint64_t seed, std::size_t samples);

}  // namespace kdvw::hierarchy
