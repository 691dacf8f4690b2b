#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "kdvw/spectral.hpp"

using namespace kdvw;
using namespace kdvw::spectral;

namespace {

// Independent O(M^2) discrete Fourier transform used as a transform oracle.
std::vector<complexd> direct_dft(const PeriodicGrid& g, const std::vector<double>& samples) {
  std::vector<complexd> out(g.mode_count);
  for (int slot = 0; slot < g.mode_count; ++slot) {
    const double xi = g.frequency(g.mode_at_slot(slot));
    complexd acc{0.0, 0.0};
    for (int n = 0; n < g.mode_count; ++n) {
      acc += samples[n] * std::polar(1.0, -xi * g.x(n));
    }
    out[slot] = acc * g.dx();
  }
  return out;
}

std::vector<double> random_samples(int m, std::uint64_t seed) {
  GaussianSource gauss(seed);
  std::vector<double> s(m);
  for (auto& v : s) v = gauss.next();
  return s;
}

}  // namespace

TEST_CASE("grid geometry and slot layout") {
  PeriodicGrid g(2.0 * kPi, 16);
  CHECK(g.spacing() == doctest::Approx(1.0));
  CHECK(g.frequency(3) == doctest::Approx(3.0));
  CHECK(g.frequency(-3) == doctest::Approx(-3.0));
  CHECK(g.slot(-1) == 15);
  CHECK(g.mode_at_slot(15) == -1);
  CHECK(g.mode_at_slot(8) == -8);  // Nyquist
  CHECK(g.max_mode() == 7);
  CHECK_THROWS_AS(PeriodicGrid(1.0, 7), contract_violation);
  CHECK_THROWS_AS(PeriodicGrid(-1.0, 8), contract_violation);
}

TEST_CASE("constant samples transform to a single zero mode") {
  PeriodicGrid g(4.0, 16);
  std::vector<double> samples(16, 2.5);
  SpectralField f = from_real_samples(g, samples);
  CHECK(f.coeff(0).real() == doctest::Approx(2.5 * 4.0).epsilon(1e-14));
  CHECK(f.coeff(0).imag() == 0.0);
  for (int j = 1; j <= g.max_mode(); ++j) {
    CHECK(std::abs(f.coeff(j)) < 1e-13);
    CHECK(std::abs(f.coeff(-j)) < 1e-13);
  }
}

TEST_CASE("cosine occupies exactly the +-1 modes with weight period/2") {
  const double lambda = 2.0 * kPi;
  PeriodicGrid g(lambda, 32);
  std::vector<double> samples(32);
  for (int n = 0; n < 32; ++n) samples[n] = std::cos(2.0 * kPi * g.x(n) / lambda);
  SpectralField f = from_real_samples(g, samples);
  CHECK(f.coeff(1).real() == doctest::Approx(lambda / 2.0).epsilon(1e-13));
  CHECK(f.coeff(-1).real() == doctest::Approx(lambda / 2.0).epsilon(1e-13));
  for (int j = 0; j <= g.max_mode(); ++j) {
    if (j == 1) continue;
    CHECK(std::abs(f.coeff(j)) < 1e-12);
  }
}

TEST_CASE("forward transform matches the direct DFT oracle and round-trips") {
  PeriodicGrid g(3.7, 32);
  const auto samples = random_samples(32, 1234);
  SpectralField f = from_real_samples(g, samples);
  const auto oracle = direct_dft(g, samples);
  for (int slot = 0; slot < 32; ++slot) {
    if (slot == g.nyquist_slot()) continue;  // hard-zeroed by contract
    CHECK(std::abs(f.raw()[slot] - oracle[slot]) < 1e-11);
  }

  // round-trip: inverse of forward reproduces samples (Nyquist-free data)
  SpectralField band = dealias(f, g.max_mode());
  auto back = to_real_samples(band);
  // rebuild samples without any Nyquist content for an exact comparison
  std::vector<double> filtered = to_real_samples(f);
  for (int n = 0; n < 32; ++n) CHECK(back[n] == doctest::Approx(filtered[n]).epsilon(1e-12));
}

TEST_CASE("real-sample transforms are exactly Hermitian and exactly real on return") {
  PeriodicGrid g(5.0, 64);
  const auto samples = random_samples(64, 99);
  SpectralField f = from_real_samples(g, samples);
  for (int j = 1; j <= g.max_mode(); ++j) {
    CHECK(f.coeff(-j) == std::conj(f.coeff(j)));  // bitwise by construction
  }
  CHECK(f.coeff(0).imag() == 0.0);
}

TEST_CASE("Plancherel: frequency-side norm equals collocation norm") {
  PeriodicGrid g(2.0 * kPi, 64);
  const auto samples = random_samples(64, 7);
  SpectralField f = from_real_samples(g, samples);
  // collocation quadrature of |u|^2 (exact for trigonometric polynomials)
  double quad = 0.0;
  const auto values = to_real_samples(f);  // Nyquist removed -> band-limited
  for (double v : values) quad += v * v * g.dx();
  CHECK(l2_norm(f) == doctest::Approx(std::sqrt(quad)).epsilon(1e-12));
}

TEST_CASE("Parseval pairing equals collocation inner product") {
  PeriodicGrid g(3.0, 32);
  SpectralField f = from_real_samples(g, random_samples(32, 11));
  SpectralField h = from_real_samples(g, random_samples(32, 12));
  const auto fv = to_real_samples(f);
  const auto hv = to_real_samples(h);
  double quad = 0.0;
  for (int n = 0; n < 32; ++n) quad += fv[n] * hv[n] * g.dx();
  CHECK(inner_product(f, h).real() == doctest::Approx(quad).epsilon(1e-12));
  CHECK(std::abs(inner_product(f, h).imag()) < 1e-12 * std::abs(quad) + 1e-14);
}

TEST_CASE("convolution theorem on dealiased fields") {
  PeriodicGrid g(2.0 * kPi, 48);
  const int band = (48 - 1) / 3;  // quadratic-product-safe band
  SpectralField f = dealias(from_real_samples(g, random_samples(48, 21)), band);
  SpectralField h = dealias(from_real_samples(g, random_samples(48, 22)), band);
  const auto fv = to_real_samples(f);
  const auto hv = to_real_samples(h);
  std::vector<double> prod(48);
  for (int n = 0; n < 48; ++n) prod[n] = fv[n] * hv[n];
  SpectralField fh = from_real_samples(g, prod);

  // normalized frequency convolution: (1/period) sum_{j1+j2=j} f_hat h_hat;
  // the grid product is alias-free exactly on the retained band |j| <= K
  for (int j = -band; j <= band; ++j) {
    complexd conv{0.0, 0.0};
    for (int j1 = -band; j1 <= band; ++j1) {
      const int j2 = j - j1;
      if (std::abs(j2) > band) continue;
      conv += f.coeff(j1) * h.coeff(j2);
    }
    conv /= g.period;
    CHECK(std::abs(fh.coeff(j) - conv) < 1e-12 * (1.0 + std::abs(conv)));
  }
}

TEST_CASE("sobolev norms of the cosine: sqrt(pi) at s=0 and 3 sqrt(pi) at s=1") {
  PeriodicGrid g(2.0 * kPi, 32);
  std::vector<double> samples(32);
  for (int n = 0; n < 32; ++n) samples[n] = std::cos(g.x(n));
  SpectralField f = from_real_samples(g, samples);
  CHECK(sobolev_norm(f, 0.0) == doctest::Approx(std::sqrt(kPi)).epsilon(1e-13));
  CHECK(sobolev_norm(f, 1.0) == doctest::Approx(3.0 * std::sqrt(kPi)).epsilon(1e-13));
  CHECK(sobolev_norm(SpectralField(g), 1.0) == 0.0);
}

TEST_CASE("airy propagator: identity at t=0, group law, single-mode phase") {
  PeriodicGrid g(2.0 * kPi, 16);
  SpectralField f = from_real_samples(g, random_samples(16, 5));
  SpectralField f0 = airy_propagate(f, 0.0);
  for (int slot = 0; slot < 16; ++slot) CHECK(f0.raw()[slot] == f.raw()[slot]);

  const double t1 = 0.37, t2 = 0.21;
  SpectralField two_step = airy_propagate(airy_propagate(f, t1), t2);
  SpectralField one_step = airy_propagate(f, t1 + t2);
  for (int slot = 0; slot < 16; ++slot) {
    CHECK(std::abs(two_step.raw()[slot] - one_step.raw()[slot]) <=
          1e-13 * (1.0 + std::abs(one_step.raw()[slot])));
  }

  SpectralField mode(g);
  mode.set_coeff(1, complexd{1.0, 0.0});
  mode.set_coeff(-1, complexd{1.0, 0.0});
  mode.set_real_valued(true);
  SpectralField rotated = airy_propagate(mode, kPi);  // e^{i pi} = -1 on both modes
  CHECK(rotated.coeff(1).real() == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(std::abs(rotated.coeff(1).imag()) < 1e-13);

  // modulus of every coefficient is exactly preserved up to round-off
  SpectralField big_t = airy_propagate(f, 3.3);
  for (int slot = 0; slot < 16; ++slot) {
    CHECK(std::abs(big_t.raw()[slot]) ==
          doctest::Approx(std::abs(f.raw()[slot])).epsilon(1e-14));
  }
}

TEST_CASE("energy multiplier: regimes, evenness, monotonicity, identity sentinel") {
  EnergyMultiplier m(8.0, -0.5);
  CHECK(m(3.0) == 1.0);
  CHECK(m(8.0) == 1.0);
  CHECK(m(-5.0) == m(5.0));
  CHECK(m(16.0) == doctest::Approx(std::pow(2.0, -0.5)).epsilon(1e-15));
  CHECK(m(32.0) == doctest::Approx(std::pow(4.0, -0.5)).epsilon(1e-15));
  // monotone nonincreasing, 0 < m <= 1 for s < 0
  double prev = 1.0;
  for (double xi = 0.0; xi <= 100.0; xi += 0.25) {
    const double v = m(xi);
    CHECK(v <= prev + 1e-15);
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
    prev = v;
  }

  EnergyMultiplier mc(8.0, -0.5, EnergyMultiplier::Bridge::cubic_log);
  CHECK(mc(8.0) == doctest::Approx(1.0));
  CHECK(mc(16.0) == doctest::Approx(std::pow(2.0, -0.5)).epsilon(1e-12));
  CHECK(mc(12.0) < 1.0);
  CHECK(mc(12.0) > mc(16.0));

  EnergyMultiplier id = EnergyMultiplier::identity();
  CHECK(id.is_identity());
  CHECK(id(123.4) == 1.0);

  CHECK_THROWS_AS(EnergyMultiplier(0.5, -0.5), contract_violation);
  CHECK_THROWS_AS(EnergyMultiplier(8.0, -1.6), contract_violation);
}

TEST_CASE("apply_I: identity below N, 2^s at 2N, norm contraction for s<0") {
  PeriodicGrid g(2.0 * kPi, 64);
  EnergyMultiplier m(8.0, -0.5);

  SpectralField low(g);
  low.set_coeff(3, complexd{1.0, 0.5});
  low.set_coeff(-3, std::conj(complexd{1.0, 0.5}));
  SpectralField low_i = apply_I(low, m);
  CHECK(low_i.coeff(3) == low.coeff(3));  // exactly untouched below N

  SpectralField high(g);
  high.set_coeff(16, complexd{1.0, 0.0});
  high.set_coeff(-16, complexd{1.0, 0.0});
  SpectralField high_i = apply_I(high, m);
  CHECK(high_i.coeff(16).real() == doctest::Approx(std::pow(2.0, -0.5)).epsilon(1e-15));

  SpectralField f = from_real_samples(g, random_samples(64, 31));
  CHECK(l2_norm(apply_I(f, m)) <= l2_norm(f) + 1e-15);

  SpectralField f_id = apply_I(f, EnergyMultiplier::identity());
  for (int slot = 0; slot < 64; ++slot) CHECK(f_id.raw()[slot] == f.raw()[slot]);

  // I commutes with the Airy propagator exactly (both frequency-diagonal)
  SpectralField a = airy_propagate(apply_I(f, m), 0.7);
  SpectralField b = apply_I(airy_propagate(f, 0.7), m);
  for (int slot = 0; slot < 64; ++slot) {
    CHECK(std::abs(a.raw()[slot] - b.raw()[slot]) < 1e-15 * (1.0 + std::abs(a.raw()[slot])));
  }
}

TEST_CASE("derivative, dealias, support and mean-zero bookkeeping") {
  PeriodicGrid g(2.0 * kPi, 32);
  std::vector<double> samples(32);
  for (int n = 0; n < 32; ++n) samples[n] = std::sin(g.x(n));
  SpectralField f = from_real_samples(g, samples);
  SpectralField fx = derivative(f);
  const auto vals = to_real_samples(fx);
  for (int n = 0; n < 32; ++n) CHECK(vals[n] == doctest::Approx(std::cos(g.x(n))).epsilon(1e-12));

  // exact-zero predicates refer to exactly-zero coefficients: transforms of
  // sampled data carry round-off dust, so build the field directly
  SpectralField pure(g);
  pure.set_coeff(1, complexd{0.0, -kPi});
  pure.set_coeff(-1, complexd{0.0, kPi});
  CHECK(support_mode_limit(pure) == 1);
  CHECK(pure.is_mean_zero());

  SpectralField g2 = from_real_samples(g, random_samples(32, 77));
  CHECK_FALSE(g2.is_mean_zero());
  g2.project_mean_zero();
  CHECK(g2.is_mean_zero());
  SpectralField cut = dealias(g2, 4);
  CHECK(support_mode_limit(cut) <= 4);
}

TEST_CASE("mode access outside the retained band is a contract violation") {
  PeriodicGrid g(1.0, 16);
  SpectralField f(g);
  CHECK_THROWS_AS((void)f.coeff(8), contract_violation);   // Nyquist
  CHECK_THROWS_AS(f.set_coeff(-8, complexd{1, 0}), contract_violation);
  CHECK_THROWS_AS((void)f.coeff(9), contract_violation);
  std::vector<double> wrong(15, 0.0);
  CHECK_THROWS_AS(from_real_samples(g, wrong), contract_violation);
}
