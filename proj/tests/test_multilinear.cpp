#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "kdvw/multilinear.hpp"

using namespace kdvw;
using namespace kdvw::spectral;
using namespace kdvw::forms;

namespace {

SpectralField random_band_field(const PeriodicGrid& g, int band, std::uint64_t seed,
                                bool mean_zero = true) {
  GaussianSource gauss(seed);
  SpectralField f(g);
  for (int j = 1; j <= band; ++j) {
    const complexd c{gauss.next(), gauss.next()};
    f.set_coeff(j, c);
    f.set_coeff(-j, std::conj(c));
  }
  if (!mean_zero) f.set_coeff(0, complexd{gauss.next(), 0.0});
  return f;
}

SpectralField random_complex_field(const PeriodicGrid& g, int band, std::uint64_t seed) {
  GaussianSource gauss(seed);
  SpectralField f(g, /*real_valued=*/false);
  for (int j = -band; j <= band; ++j) {
    if (j == 0) continue;
    f.set_coeff(j, complexd{gauss.next(), gauss.next()});
  }
  return f;
}

}  // namespace

TEST_CASE("symmetrize: averages, hyperplane vanishing, idempotence, arity guard") {
  KMultiplier first_arg{3, false, false, [](const double* xs) { return complexd{xs[0], 0.0}; }};
  KMultiplier sym = symmetrize(first_arg);
  CHECK(sym.is_symmetric);
  // (xi1 + xi2 + xi3)/3, which vanishes on the hyperplane
  const double tuple[3] = {2.0, 5.0, -7.0};
  CHECK(sym(tuple) == complexd{0.0, 0.0});
  const double off[3] = {1.0, 2.0, 3.0};
  CHECK(sym(off).real() == doctest::Approx(2.0));

  KMultiplier quad{2, false, false,
                   [](const double* xs) { return complexd{xs[0] * xs[1] * xs[1], 0.0}; }};
  KMultiplier qsym = symmetrize(quad);
  const double pair[2] = {3.0, -2.0};
  // (xi1 xi2^2 + xi2 xi1^2)/2 = (3*4 + -2*9)/2 = -3
  CHECK(qsym(pair).real() == doctest::Approx(-3.0));

  // symmetric input returns pointwise-identical values
  KMultiplier already = symmetrize(qsym);
  CHECK(already(pair) == qsym(pair));

  KMultiplier wide{6, false, false, [](const double*) { return complexd{0.0, 0.0}; }};
  CHECK_THROWS_AS(symmetrize(wide), contract_violation);
}

TEST_CASE("resonance weight: alpha2 = 0, alpha3 and alpha4 factorizations (exact integers)") {
  auto a2 = alpha_multiplier(2);
  auto a3 = alpha_multiplier(3);
  auto a4 = alpha_multiplier(4);

  // exact 64-bit integer identities across the full working range
  std::mt19937_64 rng(424242);
  std::uniform_int_distribution<std::int64_t> draw(-400000, 400000);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::int64_t n1 = draw(rng), n2 = draw(rng), n3 = draw(rng);
    {
      const std::int64_t m3 = -n1 - n2;
      const std::int64_t lhs = n1 * n1 * n1 + n2 * n2 * n2 + m3 * m3 * m3;
      CHECK(lhs == 3 * n1 * n2 * m3);  // cubes collapse on the hyperplane
    }
    {
      const std::int64_t m4 = -n1 - n2 - n3;
      const std::int64_t lhs =
          n1 * n1 * n1 + n2 * n2 * n2 + n3 * n3 * n3 + m4 * m4 * m4;
      CHECK(lhs == 3 * (n1 + n2) * (n1 + n3) * (n1 + m4));
    }
  }

  // the double-precision multiplier matches bitwise while cubes stay below
  // 2^53 (|n| <= 4e4 keeps every intermediate integer exactly representable)
  std::uniform_int_distribution<std::int64_t> small(-40000, 40000);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::int64_t n1 = small(rng), n2 = small(rng), n3 = small(rng);
    {
      const double xs[2] = {double(n1), double(-n1)};
      CHECK(a2(xs) == complexd{0.0, 0.0});
    }
    {
      const std::int64_t m3 = -n1 - n2;
      const double xs[3] = {double(n1), double(n2), double(m3)};
      CHECK(a3(xs).imag() == double(3 * n1 * n2 * m3));
    }
    {
      const std::int64_t m4 = -n1 - n2 - n3;
      const double xs[4] = {double(n1), double(n2), double(n3), double(m4)};
      const std::int64_t sum3 =
          n1 * n1 * n1 + n2 * n2 * n2 + n3 * n3 * n3 + m4 * m4 * m4;
      CHECK(a4(xs).imag() == double(sum3));
    }
  }
}

TEST_CASE("eval_lambda: L2 identities and exact hyperplane vanishing") {
  PeriodicGrid g(2.0 * kPi, 32);  // exactly unit frequency spacing
  SpectralField u = random_band_field(g, 9, 101, /*mean_zero=*/false);

  // Lambda_2(1) = ||u||_{L2}^2 (mass term included)
  const double l2sq = l2_norm(u) * l2_norm(u);
  CHECK(eval_lambda_real(constant_multiplier(2, complexd{1.0, 0.0}), u) ==
        doctest::Approx(l2sq).epsilon(1e-12));

  // Lambda_2(-xi1 xi2) = ||u_x||^2
  KMultiplier deriv2{2, true, false,
                     [](const double* xs) { return complexd{-xs[0] * xs[1], 0.0}; }};
  const double h1sq = std::pow(l2_norm(derivative(u)), 2);
  CHECK(eval_lambda_real(deriv2, u) == doctest::Approx(h1sq).epsilon(1e-12));

  // m = xi1+xi2+xi3 vanishes identically on the integer hyperplane
  KMultiplier plane{3, true, false, [](const double* xs) {
                      return complexd{xs[0] + xs[1] + xs[2], 0.0};
                    }};
  SpectralField v = random_band_field(g, 9, 102);
  CHECK(eval_lambda(plane, v) == complexd{0.0, 0.0});
}

TEST_CASE("eval_lambda equals the brute-force enumerator (k = 2, 3, 4, 5)") {
  PeriodicGrid g(2.0 * kPi, 16);
  SpectralField u = random_band_field(g, 7, 11);
  SpectralField w = random_complex_field(g, 7, 12);

  KMultiplier probe{3, true, false, [](const double* xs) {
                      return complexd{1.0 + xs[0] * xs[0] + xs[1] * xs[1] + xs[2] * xs[2],
                                      xs[0] * xs[1] * xs[2]};
                    }};
  const complexd fast = eval_lambda(probe, u);
  const complexd brute = eval_lambda_bruteforce(probe, u);
  CHECK(std::abs(fast - brute) <= 1e-12 * (1.0 + std::abs(brute)));

  const complexd fast_c = eval_lambda(probe, w);
  const complexd brute_c = eval_lambda_bruteforce(probe, w);
  CHECK(std::abs(fast_c - brute_c) <= 1e-12 * (1.0 + std::abs(brute_c)));

  for (int arity = 2; arity <= 5; ++arity) {
    KMultiplier generic{arity, true, false, [arity](const double* xs) {
                          double sum2 = 0.0, prod = 1.0;
                          for (int i = 0; i < arity; ++i) {
                            sum2 += xs[i] * xs[i];
                            prod *= xs[i];
                          }
                          return complexd{sum2, 0.1 * prod};
                        }};
    const complexd a = eval_lambda(generic, u);
    const complexd b = eval_lambda_bruteforce(generic, u);
    CHECK(std::abs(a - b) <= 1e-12 * (1.0 + std::abs(b)));
  }
}

TEST_CASE("eval_lambda is multilinear in each slot") {
  PeriodicGrid g(kPi, 16);
  SpectralField u = random_band_field(g, 6, 21);
  SpectralField v = random_band_field(g, 6, 22);
  SpectralField w = random_band_field(g, 6, 23);
  KMultiplier m{3, true, false, [](const double* xs) {
                  return complexd{std::cos(xs[0] + xs[1] + 2.0 * xs[2]),
                                  xs[0] * xs[0] - xs[1]};
                }};
  std::vector<const SpectralField*> base = {&u, &v, &w};
  const complexd val = eval_lambda(m, base);

  SpectralField u_scaled = u;
  for (auto& c : u_scaled.raw()) c *= 2.5;
  std::vector<const SpectralField*> scaled = {&u_scaled, &v, &w};
  CHECK(std::abs(eval_lambda(m, scaled) - 2.5 * val) <= 1e-12 * (1.0 + std::abs(val)));

  SpectralField sum_field = u;
  for (int slot = 0; slot < 16; ++slot) sum_field.raw()[slot] += w.raw()[slot];
  std::vector<const SpectralField*> summed = {&sum_field, &v, &w};
  std::vector<const SpectralField*> other = {&w, &v, &w};
  const complexd split = eval_lambda(m, other);
  CHECK(std::abs(eval_lambda(m, summed) - (val + split)) <=
        1e-12 * (1.0 + std::abs(val) + std::abs(split)));
}

TEST_CASE("parallel evaluation is bit-identical to the serial reference") {
  PeriodicGrid g(2.0 * kPi, 32);
  SpectralField u = random_band_field(g, 10, 31);
  for (int arity = 2; arity <= 5; ++arity) {
    KMultiplier m{arity, true, false, [arity](const double* xs) {
                    double acc = 1.0;
                    for (int i = 0; i < arity; ++i) acc *= std::sin(xs[i]) + 1.5;
                    return complexd{acc, 0.25 * acc};
                  }};
    const complexd par = eval_lambda(m, u, /*parallel=*/true);
    const complexd ser = eval_lambda_serial(m, u);
    CHECK(par.real() == ser.real());
    CHECK(par.imag() == ser.imag());
  }
}

TEST_CASE("eval_lambda contract checks") {
  PeriodicGrid g(2.0 * kPi, 16);
  PeriodicGrid g2(kPi, 16);
  SpectralField u = random_band_field(g, 5, 41);
  SpectralField other(g2);
  KMultiplier m = constant_multiplier(2, complexd{1.0, 0.0});
  std::vector<const SpectralField*> mixed = {&u, &other};
  CHECK_THROWS_AS(eval_lambda(m, mixed), contract_violation);

  KMultiplier singular = constant_multiplier(2, complexd{1.0, 0.0});
  singular.requires_nonzero_args = true;
  SpectralField with_mass = random_band_field(g, 5, 42, /*mean_zero=*/false);
  CHECK_THROWS_AS(eval_lambda(singular, with_mass), contract_violation);
  CHECK_NOTHROW(eval_lambda(singular, u));

  KMultiplier bad_arity = constant_multiplier(6, complexd{1.0, 0.0});
  CHECK_THROWS_AS(eval_lambda(bad_arity, u), contract_violation);
}

TEST_CASE("boundary operator: conservation degeneracies vanish exactly") {
  PeriodicGrid g(2.0 * kPi, 32);
  SpectralField u = random_band_field(g, 10, 51);

  // sigma = 1 (arity 2): multiplier proportional to xi1+xi2+xi3 -> Lambda_3 = 0
  KMultiplier b2 = prop1_boundary(constant_multiplier(2, complexd{1.0, 0.0}));
  CHECK(b2.arity == 3);
  CHECK(b2.is_symmetric);
  CHECK(eval_lambda(b2, u) == complexd{0.0, 0.0});

  // sigma = m (x) m with m == 1: same degeneracy (exact mass conservation)
  KMultiplier mm = tensor_multiplier(2, [](double) { return 1.0; });
  CHECK(eval_lambda(prop1_boundary(mm), u) == complexd{0.0, 0.0});

  // constant sigma3: the arity-4 boundary multiplier is proportional to
  // xi1+xi2+xi3+xi4 = 0; a dyadic constant keeps every product exact so the
  // paired fused terms cancel bitwise
  KMultiplier c3 = constant_multiplier(3, complexd{-0.25, 0.0});
  CHECK(eval_lambda(prop1_boundary(c3), u) == complexd{0.0, 0.0});

  KMultiplier asym{2, false, false, [](const double* xs) { return complexd{xs[0], 0.0}; }};
  CHECK_THROWS_AS(prop1_boundary(asym), contract_violation);
}

TEST_CASE("reduced pair symmetrization equals the full permutation average") {
  // generic symmetric sigma of arity 3 and 4
  KMultiplier s3{3, true, false, [](const double* xs) {
                   const double e1 = xs[0] + xs[1] + xs[2];
                   const double e2 = xs[0] * xs[1] + xs[0] * xs[2] + xs[1] * xs[2];
                   return complexd{e2 + 0.3 * e1, 0.1 * xs[0] * xs[1] * xs[2]};
                 }};
  KMultiplier s4{4, true, false, [](const double* xs) {
                   double sum2 = 0.0, prod = 1.0;
                   for (int i = 0; i < 4; ++i) {
                     sum2 += xs[i] * xs[i];
                     prod *= 1.0 + 0.1 * xs[i] * xs[i];
                   }
                   return complexd{sum2, prod};
                 }};
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> draw(-12, 12);
  for (int trial = 0; trial < 300; ++trial) {
    {
      int a = draw(rng), b = draw(rng), c = draw(rng);
      const double xs[4] = {double(a), double(b), double(c), double(-a - b - c)};
      const complexd reduced = prop1_boundary(s3)(xs);
      const complexd full = prop1_boundary_full_sym(s3)(xs);
      CHECK(std::abs(reduced - full) <= 2e-10 + 1e-12 * std::abs(full));
    }
    {
      int a = draw(rng), b = draw(rng), c = draw(rng), d = draw(rng);
      const double xs[5] = {double(a), double(b), double(c), double(d),
                            double(-a - b - c - d)};
      const complexd reduced = prop1_boundary(s4)(xs);
      const complexd full = prop1_boundary_full_sym(s4)(xs);
      CHECK(std::abs(reduced - full) <= 2e-10 + 1e-12 * std::abs(full));
    }
  }
}

TEST_CASE("banded boundary operator drops exactly the out-of-band fused pairs") {
  KMultiplier s3 = constant_multiplier(3, complexd{1.0, 0.0});
  const double band = 4.5;
  KMultiplier banded = prop1_boundary_banded(s3, band);
  KMultiplier open = prop1_boundary(s3);
  // tuple (3, 3, -2, -4): fused sums 6, 1, -1, 1, -1, -6 -> pairs {0,1} and
  // {2,3} are outside the band
  const double xs[4] = {3.0, 3.0, -2.0, -4.0};
  // open: -(i*3/2)/6 * (6 + 1 - 1 + 1 - 1 - 6) = 0
  CHECK(std::abs(open(xs)) == 0.0);
  // banded: -(i*3/2)/6 * (1 - 1 + 1 - 1) = 0 as well; use a sharper probe
  KMultiplier id3{3, true, false,
                  [](const double* xs_) { return complexd{xs_[2], 0.0}; }};
  // NOTE: id3 reads the fused slot (last argument of sigma)
  KMultiplier banded_id = prop1_boundary_banded(id3, band);
  KMultiplier open_id = prop1_boundary(id3);
  // open: sum of fused^2 over all pairs = 36+1+1+1+1+36 = 76
  CHECK(std::abs(open_id(xs)) == doctest::Approx((3.0 / 2.0) * 76.0 / 6.0));
  // banded: 1+1+1+1 = 4
  CHECK(std::abs(banded_id(xs)) == doctest::Approx((3.0 / 2.0) * 4.0 / 6.0));
  CHECK_THROWS_AS(prop1_boundary_banded(s3, -1.0), contract_violation);
}

TEST_CASE("FD stencils against the exactly-solvable linear flow") {
  // On the Airy flow d/dt Lambda_k(m) = Lambda_k(m alpha_k) exactly (the
  // boundary term belongs to the quadratic flow), which isolates the FD
  // weights and the alpha wiring from the solver.
  PeriodicGrid g(2.0 * kPi, 16);
  SpectralField u = random_band_field(g, 3, 61);
  KMultiplier m{3, true, false, [](const double* xs) {
                  return complexd{xs[0] * xs[0] + xs[1] * xs[1] + xs[2] * xs[2], 0.0};
                }};
  KMultiplier m_alpha = product_multiplier(m, alpha_multiplier(3));

  const double h = 1e-3;
  std::vector<complexd> f_vals;
  for (int i = -3; i <= 3; ++i) f_vals.push_back(eval_lambda(m, airy_propagate(u, h * i)));
  const complexd rhs = eval_lambda(m_alpha, u);

  const complexd fd2 = (f_vals[4] - f_vals[2]) / (2.0 * h);
  const complexd fd6 = (-f_vals[0] + 9.0 * f_vals[1] - 45.0 * f_vals[2] + 45.0 * f_vals[4] -
                        9.0 * f_vals[5] + f_vals[6]) /
                       (60.0 * h);
  CHECK(std::abs(fd2 - rhs) / std::abs(rhs) < 2e-3);
  CHECK(std::abs(fd2 - rhs) / std::abs(rhs) > 1e-8);  // order gap is visible
  CHECK(std::abs(fd6 - rhs) / std::abs(rhs) < 1e-8);
}
