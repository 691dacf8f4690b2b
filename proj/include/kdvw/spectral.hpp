#pragma once

// Periodic grid, Fourier-coefficient fields, Sobolev norms, the Airy
// propagator, and the smoothing operator I (Fourier multiplier m).
//
// Convention used throughout the library: frequencies xi live on the
// lattice (2*pi/period) * Z, the analysis kernel is e^{-i xi x},
//
//   u_hat(xi) = integral_0^period e^{-i xi x} u(x) dx,
//   u(x)      = (1/period) * sum_j e^{+i xi_j x} u_hat(xi_j),
//
// so Plancherel reads  integral |u|^2 dx = (1/period) * sum_j |u_hat|^2,
// a pointwise product transforms to (1/period) * convolution, and
// d/dx corresponds to multiplication by (i xi).

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "kdvw/common.hpp"

namespace kdvw::spectral {

inline constexpr double kPi = 3.14159265358979323846;

/// Japanese bracket <xi> = 2 + |xi| used by every Sobolev weight here.
inline double bracket(double xi) { return 2.0 + std::abs(xi); }

struct PeriodicGrid {
  double period;   // length of the torus, > 0
  int mode_count;  // M: collocation points / retained modes, even, >= 4

  PeriodicGrid(double period_, int mode_count_);

  [[nodiscard]] double spacing() const { return 2.0 * kPi / period; }
  [[nodiscard]] double dx() const { return period / mode_count; }
  [[nodiscard]] double x(int i) const { return dx() * i; }
  /// Largest mode index carried by nonlinear-path fields (Nyquist excluded).
  [[nodiscard]] int max_mode() const { return mode_count / 2 - 1; }
  [[nodiscard]] double frequency(int mode) const { return spacing() * mode; }
  [[nodiscard]] int slot(int mode) const { return mode >= 0 ? mode : mode + mode_count; }
  [[nodiscard]] int mode_at_slot(int s) const {
    return s < mode_count / 2 ? s : s - mode_count;
  }
  [[nodiscard]] int nyquist_slot() const { return mode_count / 2; }

  bool operator==(const PeriodicGrid&) const = default;
};

/// A function on the torus held as Fourier coefficients (FFT slot layout).
/// The Nyquist coefficient is identically zero; real-valued fields keep the
/// exact Hermitian pairing u_hat(-xi) = conj(u_hat(xi)).
class SpectralField {
 public:
  SpectralField(PeriodicGrid grid, bool real_valued = true)
      : grid_(grid), coeffs_(grid.mode_count, complexd{0.0, 0.0}), real_valued_(real_valued) {}

  [[nodiscard]] const PeriodicGrid& grid() const { return grid_; }
  [[nodiscard]] int mode_count() const { return grid_.mode_count; }
  [[nodiscard]] double period() const { return grid_.period; }

  [[nodiscard]] complexd coeff(int mode) const {
    require(std::abs(mode) < grid_.mode_count / 2, "coeff: mode index outside retained band");
    return coeffs_[grid_.slot(mode)];
  }
  void set_coeff(int mode, complexd value) {
    require(std::abs(mode) < grid_.mode_count / 2, "set_coeff: mode index outside retained band");
    coeffs_[grid_.slot(mode)] = value;
  }

  [[nodiscard]] std::span<const complexd> raw() const { return coeffs_; }
  [[nodiscard]] std::span<complexd> raw() { return coeffs_; }

  [[nodiscard]] bool is_real_valued() const { return real_valued_; }
  void set_real_valued(bool v) { real_valued_ = v; }
  /// Mean-zero is a computed property: the zero coefficient is exactly 0.
  [[nodiscard]] bool is_mean_zero() const { return coeffs_[0] == complexd{0.0, 0.0}; }

  /// Force the exact Hermitian pairing (and a zero Nyquist slot) and flag
  /// the field real-valued. Used after transforms of real samples so the
  /// invariant holds bitwise, not just to round-off.
  void hermitianize();

  void project_mean_zero() { coeffs_[0] = complexd{0.0, 0.0}; }

  /// True if every coefficient is finite.
  [[nodiscard]] bool all_finite() const;

 private:
  PeriodicGrid grid_;
  std::vector<complexd> coeffs_;
  bool real_valued_;
};

SpectralField from_real_samples(const PeriodicGrid& grid, std::span<const double> samples);
SpectralField from_complex_samples(const PeriodicGrid& grid, std::span<const complexd> samples);
std::vector<complexd> to_samples(const SpectralField& f);
/// Collocation values of a real-valued field (imaginary round-off dropped).
std::vector<double> to_real_samples(const SpectralField& f);

/// ( (1/period) * sum_j <xi_j>^{2s} |u_hat(xi_j)|^2 )^{1/2}. s = 0 is L^2.
double sobolev_norm(const SpectralField& f, double s);
inline double l2_norm(const SpectralField& f) { return sobolev_norm(f, 0.0); }

/// Frequency-side pairing (1/period) * sum_j f_hat(xi_j) * conj(g_hat(xi_j));
/// equals the collocation inner product integral f conj(g) dx (Parseval).
complexd inner_product(const SpectralField& f, const SpectralField& g);

/// Exact solution operator of w_t + w_xxx = 0: u_hat(xi) -> e^{i xi^3 t} u_hat(xi).
SpectralField airy_propagate(const SpectralField& f, double t);

/// d/dx: multiplication by (i xi).
SpectralField derivative(const SpectralField& f);

/// Zero every coefficient with |mode| > max_mode (Galerkin truncation).
SpectralField dealias(const SpectralField& f, int max_mode);

/// Largest |mode| carrying a nonzero coefficient (0 for the zero field).
int support_mode_limit(const SpectralField& f);

/// Zero-padded copy on a finer grid with the same period: coefficients keep
/// their mode indices, new modes are zero. new_mode_count must be an even
/// number >= the current one.
SpectralField upsample(const SpectralField& f, int new_mode_count);

/// The even multiplier m(xi; N, s) defining the smoothing operator I:
/// m = 1 for |xi| <= N, m = N^{-s} |xi|^s for |xi| >= 2N, bridged in
/// between. cutoff = +infinity is the identity-operator sentinel.
struct EnergyMultiplier {
  enum class Bridge {
    sharp,     // m = min/max(1, (|xi|/N)^s): continuous, monotone, exact in both regimes
    cubic_log  // C^1 cubic Hermite in log|xi| between the two regimes
  };

  double cutoff;    // N >= 1, or +infinity
  double exponent;  // s in (-3/2, 1)
  Bridge bridge = Bridge::sharp;

  EnergyMultiplier(double cutoff_, double exponent_, Bridge bridge_ = Bridge::sharp);

  static EnergyMultiplier identity() {
    return EnergyMultiplier(std::numeric_limits<double>::infinity(), 0.0);
  }
  [[nodiscard]] bool is_identity() const { return std::isinf(cutoff); }

  [[nodiscard]] double operator()(double xi) const;
  [[nodiscard]] double squared(double xi) const {
    const double v = (*this)(xi);
    return v * v;
  }

  /// Extended-precision evaluation, used where m^2 enters expressions with
  /// catastrophic cancellation (the resonant limits of the hierarchy).
  [[nodiscard]] long double value_ld(long double xi) const;
  [[nodiscard]] long double squared_ld(long double xi) const {
    const long double v = value_ld(xi);
    return v * v;
  }
};

/// Apply I: multiply each coefficient by m(xi). Preserves realness (m is
/// real and even) and the mean-zero property.
SpectralField apply_I(const SpectralField& f, const EnergyMultiplier& m);

}  // namespace kdvw::spectral
