#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "kdvw/lattice.hpp"

using namespace kdvw;
using namespace kdvw::lattice;

namespace {

// Independent quadratic-time reconstruction of the best window population
// for one output frequency, written against the definition rather than the
// library's sliding-pointer scan.
std::int64_t oracle_fiber_count(double shell, int lambda, std::int64_t n,
                                double window_width) {
  const double lo = shell * lambda;
  const double hi = 2.0 * shell * lambda;
  std::vector<std::int64_t> values;
  const auto reach = static_cast<std::int64_t>(std::ceil(hi)) + std::llabs(n);
  for (std::int64_t n1 = -reach; n1 <= reach; ++n1) {
    const double a = std::abs(static_cast<double>(n1));
    const double b = std::abs(static_cast<double>(n - n1));
    if (a >= lo && a < hi && b >= lo && b < hi) {
      values.push_back(n * (n * n - 3 * n * n1 + 3 * n1 * n1));
    }
  }
  const auto w = static_cast<std::int64_t>(
      std::llround(window_width * lambda * lambda * lambda));
  std::int64_t best = 0;
  for (const std::int64_t left : values) {
    std::int64_t count = 0;
    for (const std::int64_t v : values) {
      if (v >= left && v - left <= w) ++count;
    }
    best = std::max(best, count);
  }
  return best;
}

}  // namespace

TEST_CASE("dyadic detector accepts powers of two only") {
  for (double x : {0.5, 1.0, 2.0, 4.0, 1024.0}) CHECK(is_dyadic(x));
  for (double x : {0.0, -2.0, 0.75, 3.0, 6.0, 1.0000001}) CHECK_FALSE(is_dyadic(x));
}

TEST_CASE("scan rejects malformed parameters") {
  CHECK_THROWS_AS((void)strichartz_count(3.0, 4), contract_violation);
  CHECK_THROWS_AS((void)strichartz_count(0.25, 4), contract_violation);
  CHECK_THROWS_AS((void)strichartz_count(4.0, 0), contract_violation);
  CHECK_THROWS_AS((void)strichartz_count(4.0, 4, 0.0), contract_violation);
  CHECK_THROWS_AS((void)mu_set_measure(0.5, 16.0, 1), contract_violation);
  CHECK_THROWS_AS((void)mu_set_measure(0.0, 16.0, 1), contract_violation);
  CHECK_THROWS_AS((void)mu_set_measure(1.0, 24.0, 1), contract_violation);
  CHECK_THROWS_AS((void)mu_set_measure(1.0, 0.5, 1), contract_violation);
  CHECK_THROWS_AS((void)mu_set_measure(1.0, 16.0, 0), contract_violation);
}

TEST_CASE("fiber counts are symmetric under frequency reflection") {
  for (std::int64_t n = 1; n <= 256; ++n) {
    CHECK(strichartz_fiber_count(4.0, 16, n) == strichartz_fiber_count(4.0, 16, -n));
  }
}

TEST_CASE("window populations match a quadratic-time oracle") {
  for (int lambda : {1, 4, 8}) {
    const auto reach = static_cast<std::int64_t>(16 * lambda);
    for (std::int64_t n = -reach; n <= reach; ++n) {
      if (n == 0) continue;
      REQUIRE(strichartz_fiber_count(4.0, lambda, n) ==
              oracle_fiber_count(4.0, lambda, n, 2.0));
    }
  }
}

TEST_CASE("doubling the window at most doubles any count") {
  for (double shell : {4.0, 16.0}) {
    const CountReport one = strichartz_count(shell, 16, 1.0);
    const CountReport two = strichartz_count(shell, 16, 2.0);
    const CountReport four = strichartz_count(shell, 16, 4.0);
    CHECK(two.sup_count >= one.sup_count);
    CHECK(four.sup_count >= two.sup_count);
    CHECK(two.sup_count <= 2 * one.sup_count);
    CHECK(four.sup_count <= 2 * two.sup_count);
  }
}

TEST_CASE("lattice refinement at most doubles a fixed fiber's count") {
  for (double k : {1.0, 1.5, 2.0}) {
    for (int lambda : {2, 4, 8, 16, 32}) {
      const double coarse_units = k * lambda;
      const double fine_units = k * 2 * lambda;
      if (coarse_units != std::floor(coarse_units)) continue;
      const std::int64_t coarse = strichartz_fiber_count(
          4.0, lambda, static_cast<std::int64_t>(coarse_units));
      const std::int64_t fine = strichartz_fiber_count(
          4.0, 2 * lambda, static_cast<std::int64_t>(fine_units));
      CHECK(fine >= coarse);
      CHECK(fine <= 2 * coarse + 2);
    }
  }
}

TEST_CASE("global refinement envelope tracks the flattening fiber") {
  // The supremum migrates to the smallest reachable |k| = 1/lambda as the
  // lattice refines; both the window fraction and the point density grow
  // there, so the raw count can nearly quadruple per doubling.  Observed
  // ladder at N = 4: 2, 4, 10, 38, 136 for lambda = 2, 4, 8, 16, 32.
  std::int64_t previous = 0;
  for (int lambda : {2, 4, 8, 16, 32}) {
    const CountReport r = strichartz_count(4.0, lambda);
    CHECK(std::abs(r.k_at_sup) * lambda <= 2.0);  // sup sits at tiny |k|
    if (previous > 0) {
      CHECK(r.sup_count >= previous);
      CHECK(r.sup_count <= 4 * previous + 2);
    }
    previous = r.sup_count;
  }
}

TEST_CASE("zero output frequency carries the whole shell") {
  for (int lambda : {1, 4, 16}) {
    const CountReport r = strichartz_count(4.0, lambda);
    CHECK(r.zero_fiber_count == 2 * 4 * lambda);
    CHECK(strichartz_fiber_count(4.0, lambda, 0) == r.zero_fiber_count);
  }
}

TEST_CASE("small shells keep order-one normalized counts") {
  const CountReport half = strichartz_count(0.5, 4);
  CHECK(half.sup_count == 2);
  CHECK(half.normalized_sup == 0.5);
  CHECK(half.zero_fiber_count == 4);
  CHECK(half.bound == 1.0);

  const CountReport unit = strichartz_count(1.0, 16);
  CHECK(unit.bound == 1.0);
  CHECK(unit.normalized_sup <= 2.0);  // observed 1.875
}

TEST_CASE("exhaustive unit-lattice scan is frozen as a regression") {
  const CountReport r = strichartz_count(4.0, 1);
  CHECK(r.sup_count == 2);
  CHECK(r.k_at_sup == -1.0);
  CHECK(r.tau_at_sup == -126.0);
  CHECK(r.zero_fiber_count == 8);
  // Attained at |k| = 13 where a symmetric pair shares one cubic value:
  // ratio 2 / (1/sqrt(13) + 1).
  CHECK(r.per_fiber_ratio_max ==
        doctest::Approx(2.0 / (1.0 / std::sqrt(13.0) + 1.0)).epsilon(1e-13));
  // On the integer lattice the parabola separates shell points by more
  // than any order-one window, so only symmetric coincidences survive.
  for (double shell : {16.0, 64.0}) {
    CHECK(strichartz_count(shell, 1).sup_count == 2);
  }
}

TEST_CASE("per-fiber comparison constant is uniformly order one") {
  for (int lambda : {1, 16, 64}) {
    for (double shell : {4.0, 16.0}) {
      const CountReport r = strichartz_count(shell, lambda);
      CAPTURE(lambda);
      CAPTURE(shell);
      CHECK(r.per_fiber_ratio_max > 1.0);
      CHECK(r.per_fiber_ratio_max < 2.0);  // observed range [1.31, 1.88]
    }
  }
}

TEST_CASE("parallel and serial scans agree bitwise") {
  const CountReport a = strichartz_count(16.0, 32, 2.0, true);
  const CountReport b = strichartz_count(16.0, 32, 2.0, false);
  CHECK(a.sup_count == b.sup_count);
  CHECK(a.k_at_sup == b.k_at_sup);
  CHECK(a.tau_at_sup == b.tau_at_sup);
  CHECK(a.per_fiber_ratio_max == b.per_fiber_ratio_max);
  CHECK(a.zero_fiber_count == b.zero_fiber_count);
}

TEST_CASE("empty product shells yield zero measure") {
  const MuSetReport r = mu_set_measure(1.0, 2.0, 1);
  CHECK(r.measure == 0.0);
  CHECK(r.candidate_intervals == 0);
  CHECK(r.ratio == 0.0);
}

TEST_CASE("measure matches a hand-built union on a small shell") {
  // xi = 1, lambda = 1, shell [16, 32): only the products with
  // xi1 xi2 = -6 land inside (centers at 18, reached from xi1 = 3 and
  // xi1 = -2), giving two coincident intervals of half-width 8^{1/100}.
  const MuSetReport r = mu_set_measure(1.0, 16.0, 1);
  CHECK(r.candidate_intervals == 2);
  CHECK(r.measure == doctest::Approx(2.0 * std::pow(8.0, 0.01)).epsilon(1e-13));
}

TEST_CASE("measure ratios decay against the three-quarters power") {
  for (int lambda : {1, 8}) {
    for (double xi : {1.0, 2.0, 5.0}) {
      double peak = 0.0;
      double last = 0.0;
      std::vector<double> log_m;
      std::vector<double> log_ratio;
      for (int p = 4; p <= 12; ++p) {
        const MuSetReport r = mu_set_measure(xi, static_cast<double>(1 << p), lambda);
        peak = std::max(peak, r.ratio);
        last = r.ratio;
        if (r.measure > 0.0) {
          log_m.push_back(p * std::log(2.0));
          log_ratio.push_back(std::log(r.ratio));
        }
      }
      double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
      const auto n = static_cast<double>(log_m.size());
      for (std::size_t i = 0; i < log_m.size(); ++i) {
        sx += log_m[i];
        sy += log_ratio[i];
        sxx += log_m[i] * log_m[i];
        sxy += log_m[i] * log_ratio[i];
      }
      const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
      CAPTURE(lambda);
      CAPTURE(xi);
      CAPTURE(slope);
      CHECK(peak < 0.5);           // observed peak 0.31
      CHECK(last < peak);          // the trend ends below its start
      CHECK(slope <= -0.15);       // observed slopes in [-0.35, -0.22]
    }
  }
}

TEST_CASE("finer lattices scale the measure by at most the refinement") {
  for (int p = 4; p <= 12; ++p) {
    const double m = static_cast<double>(1 << p);
    const MuSetReport coarse = mu_set_measure(1.0, m, 1);
    const MuSetReport fine = mu_set_measure(1.0, m, 8);
    REQUIRE(coarse.measure > 0.0);
    CHECK(fine.measure <= 2.0 * 8.0 * coarse.measure);  // observed max 1.35x8
  }
}

TEST_CASE("lattice reports are reproducible") {
  const CountReport a = strichartz_count(4.0, 16);
  const CountReport b = strichartz_count(4.0, 16);
  CHECK(a.sup_count == b.sup_count);
  CHECK(a.tau_at_sup == b.tau_at_sup);
  const MuSetReport c = mu_set_measure(5.0, 1024.0, 8);
  const MuSetReport d = mu_set_measure(5.0, 1024.0, 8);
  CHECK(c.measure == d.measure);
  CHECK(c.candidate_intervals == d.candidate_intervals);
}
