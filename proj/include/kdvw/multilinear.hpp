#pragma once

// k-multipliers, symmetrization, evaluation of the k-linear forms
//
//   Lambda_k(m; u_1..u_k) = period^{-(k-1)} * sum_{xi_1+...+xi_k = 0}
//                             m(xi_1..xi_k) * u_hat_1(xi_1) ... u_hat_k(xi_k),
//
// the resonance weight alpha_k = i (xi_1^3 + ... + xi_k^3), and the
// boundary operator that produces the (k+1)-linear term in
//
//   d/dt Lambda_k(m) = Lambda_k(m alpha_k)
//                      - i (k/2) Lambda_{k+1}( m(xi_1..xi_{k-1}, xi_k + xi_{k+1})
//                                              * (xi_k + xi_{k+1}) )
//
// along the quadratic flow u_t + u_xxx + (1/2) (u^2)_x = 0. The displayed
// boundary multiplier symmetrizes to the average over the C(k+1,2) choices
// of the fused pair; both the reduced form (production) and the full
// permutation average (oracle) are provided.
//
// Parallel evaluation is bit-identical to serial evaluation: work is cut
// into fixed blocks (one per outermost lattice index) whose partial sums
// are combined by a fixed-shape pairwise tree, so the rounding path never
// depends on the number of workers.

#include <functional>
#include <span>
#include <vector>

#include "kdvw/spectral.hpp"

namespace kdvw::forms {

using spectral::PeriodicGrid;
using spectral::SpectralField;

struct KMultiplier {
  int arity = 2;
  bool is_symmetric = false;
  /// True for multipliers that divide by frequencies: evaluating them needs
  /// every field mean-zero so singular tuples carry zero amplitude.
  bool requires_nonzero_args = false;
  std::function<complexd(const double*)> eval;

  complexd operator()(std::span<const double> xs) const {
    require(static_cast<int>(xs.size()) == arity, "KMultiplier: wrong argument count");
    return eval(xs.data());
  }
};

KMultiplier constant_multiplier(int arity, complexd value);
/// alpha_k = i (xi_1^3 + ... + xi_k^3).
KMultiplier alpha_multiplier(int arity);
/// Pointwise product of two multipliers of equal arity.
KMultiplier product_multiplier(const KMultiplier& a, const KMultiplier& b);
/// m(xi_1) * ... * m(xi_k) from a 1-argument factor.
KMultiplier tensor_multiplier(int arity, std::function<double(double)> factor);

/// Full (1/k!) * sum over permutations. Arity <= 5.
KMultiplier symmetrize(const KMultiplier& m);

/// The Prop-1 boundary operator B(sigma) for symmetric sigma of arity k:
/// the symmetric (k+1)-multiplier
///   -i (k/2) * (1 / C(k+1,2)) * sum_{pairs a<b} sigma(rest..., xi_a+xi_b) * (xi_a+xi_b),
/// pairs with xi_a + xi_b = 0 dropped (the zero mode carries no amplitude
/// in the mean-zero reduction, and sigma may be singular there).
KMultiplier prop1_boundary(const KMultiplier& sigma);

/// Band-limited variant: additionally drops pairs with
/// |xi_a + xi_b| > band_frequency_limit. Along a Galerkin-truncated
/// trajectory with retained band K the truncated convolution never
/// produces out-of-band sum frequencies, so the exact derivative identity
/// on the discrete flow holds for this operator (and provably fails for
/// the unbanded one). Pass a threshold strictly between the largest
/// retained frequency and the smallest excluded one, e.g.
/// spacing * (K_modes + 1/2), so classification is immune to round-off.
KMultiplier prop1_boundary_banded(const KMultiplier& sigma, double band_frequency_limit);

/// Full-permutation-average construction of the same boundary operator
/// (test oracle for the reduced C(k+1,2)-term form).
KMultiplier prop1_boundary_full_sym(const KMultiplier& sigma);

struct LambdaSum {
  complexd value{0.0, 0.0};
  double abs_mass = 0.0;  // sum of |m * prod coeffs|: scale for residue checks

  LambdaSum& operator+=(const LambdaSum& o) {
    value += o.value;
    abs_mass += o.abs_mass;
    return *this;
  }
};

namespace detail {

struct FieldView {
  const complexd* slots;
  int mode_count;
  int support;  // largest |mode| with a nonzero coefficient

  complexd coeff(int mode) const { return slots[mode >= 0 ? mode : mode + mode_count]; }
};

std::vector<FieldView> make_views(std::span<const SpectralField* const> fields);

// Hyperplane enumeration with a generic multiplier functor. One fixed work
// block per outermost index; blocks reduce through a fixed pairwise tree.
template <typename F>
LambdaSum sum_hyperplane(const PeriodicGrid& grid, std::span<const FieldView> f, F&& mult,
                         bool parallel) {
  const int k = static_cast<int>(f.size());
  const double s = grid.spacing();
  const int b0 = f[0].support;
  std::vector<LambdaSum> partials(2 * b0 + 1);

  auto block = [&](int j1) {
    LambdaSum acc;
    double xs[5];
    const complexd c1 = f[0].coeff(j1);
    if (c1 == complexd{0.0, 0.0}) return acc;
    xs[0] = s * j1;
    if (k == 2) {
      const int j2 = -j1;
      if (std::abs(j2) <= f[1].support) {
        const complexd c2 = f[1].coeff(j2);
        if (c2 != complexd{0.0, 0.0}) {
          xs[1] = s * j2;
          const complexd mv = mult(xs);
          acc.value += mv * c1 * c2;
          acc.abs_mass += std::abs(mv) * std::abs(c1 * c2);
        }
      }
      return acc;
    }
    for (int j2 = -f[1].support; j2 <= f[1].support; ++j2) {
      const complexd c2 = f[1].coeff(j2);
      if (c2 == complexd{0.0, 0.0}) continue;
      xs[1] = s * j2;
      const complexd c12 = c1 * c2;
      if (k == 3) {
        const int j3 = -j1 - j2;
        if (std::abs(j3) > f[2].support) continue;
        const complexd c3 = f[2].coeff(j3);
        if (c3 == complexd{0.0, 0.0}) continue;
        xs[2] = s * j3;
        const complexd mv = mult(xs);
        acc.value += mv * c12 * c3;
        acc.abs_mass += std::abs(mv) * std::abs(c12 * c3);
        continue;
      }
      for (int j3 = -f[2].support; j3 <= f[2].support; ++j3) {
        const complexd c3 = f[2].coeff(j3);
        if (c3 == complexd{0.0, 0.0}) continue;
        xs[2] = s * j3;
        const complexd c123 = c12 * c3;
        if (k == 4) {
          const int j4 = -j1 - j2 - j3;
          if (std::abs(j4) > f[3].support) continue;
          const complexd c4 = f[3].coeff(j4);
          if (c4 == complexd{0.0, 0.0}) continue;
          xs[3] = s * j4;
          const complexd mv = mult(xs);
          acc.value += mv * c123 * c4;
          acc.abs_mass += std::abs(mv) * std::abs(c123 * c4);
          continue;
        }
        for (int j4 = -f[3].support; j4 <= f[3].support; ++j4) {
          const complexd c4 = f[3].coeff(j4);
          if (c4 == complexd{0.0, 0.0}) continue;
          xs[3] = s * j4;
          const complexd c1234 = c123 * c4;
          const int j5 = -j1 - j2 - j3 - j4;
          if (std::abs(j5) > f[4].support) continue;
          const complexd c5 = f[4].coeff(j5);
          if (c5 == complexd{0.0, 0.0}) continue;
          xs[4] = s * j5;
          const complexd mv = mult(xs);
          acc.value += mv * c1234 * c5;
          acc.abs_mass += std::abs(mv) * std::abs(c1234 * c5);
        }
      }
    }
    return acc;
  };

  if (parallel) {
#pragma omp parallel for schedule(static)
    for (int idx = 0; idx <= 2 * b0; ++idx) {
      partials[idx] = block(idx - b0);
    }
  } else {
    for (int idx = 0; idx <= 2 * b0; ++idx) {
      partials[idx] = block(idx - b0);
    }
  }
  LambdaSum total = pairwise_tree_sum(partials);
  const double norm = std::pow(grid.period, -(k - 1));
  total.value *= norm;
  total.abs_mass *= norm;
  return total;
}

}  // namespace detail

/// Checks grids match, mean-zero preconditions hold (when the multiplier
/// requires them), arity is in [2, 5] and equals the field count.
void check_lambda_preconditions(const KMultiplier& m,
                                std::span<const SpectralField* const> fields);

/// Lambda_k with the production enumerator (support-pruned, blocked,
/// deterministic tree reduction; parallel by default).
complexd eval_lambda(const KMultiplier& m, std::span<const SpectralField* const> fields,
                     bool parallel = true);
complexd eval_lambda(const KMultiplier& m, const SpectralField& u, bool parallel = true);
/// Serial reference path (identical block/tree shape; bit-identical result).
complexd eval_lambda_serial(const KMultiplier& m, const SpectralField& u);

/// Real-valued evaluation: checks the imaginary residue is below 1e-10
/// relative to the accumulated absolute mass and returns the real part.
double eval_lambda_real(const KMultiplier& m, const SpectralField& u, bool parallel = true);

/// Independent naive enumerator (no support pruning, no blocking, linear
/// accumulation): the equivalence oracle.
complexd eval_lambda_bruteforce(const KMultiplier& m, std::span<const SpectralField* const> fields);
complexd eval_lambda_bruteforce(const KMultiplier& m, const SpectralField& u);

/// Generic-functor fast path for hot loops (used by the energy hierarchy);
/// same enumeration and reduction as eval_lambda.
template <typename F>
complexd eval_lambda_fn(int arity, const SpectralField& u, F&& mult, bool parallel = true) {
  require(arity >= 2 && arity <= 5, "eval_lambda: arity must be in [2, 5]");
  std::vector<const SpectralField*> fields(arity, &u);
  auto views = detail::make_views(fields);
  return detail::sum_hyperplane(u.grid(), views, std::forward<F>(mult), parallel).value;
}

struct DerivativeCheckReport {
  double max_rel_error = 0.0;  // max |FD - RHS| / scale over interior samples
  double max_abs_error = 0.0;
  double scale = 0.0;  // max |RHS|; falls back to max |F| / window when RHS ~ 0
  int interior_samples = 0;
  int fd_order = 6;
};

/// Compares centered finite differences (order 2, 4 or 6) of
/// t -> Lambda_k(m; u(t)) against Lambda_k(m alpha_k) + Lambda_{k+1}(B(m))
/// on uniformly sampled trajectory snapshots of the quadratic flow.
/// band_frequency_limit selects the banded boundary operator (pass the
/// trajectory's dealias band threshold); +infinity uses the unbanded one.
DerivativeCheckReport time_derivative_check(
    const KMultiplier& m, std::span<const SpectralField> samples, double sample_dt,
    int fd_order = 6,
    double band_frequency_limit = std::numeric_limits<double>::infinity());

}  // namespace kdvw::forms
