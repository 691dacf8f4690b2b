#include "kdvw/lattice.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <vector>

namespace kdvw::lattice {

namespace {

// One fiber's best window, ordered so the global argmax is unique and
// therefore independent of how the fiber scan is partitioned.
struct FiberBest {
  std::int64_t count = 0;
  std::int64_t abs_n = 0;
  std::int64_t n = 0;
  std::int64_t window_start = 0;

  [[nodiscard]] bool beats(const FiberBest& other) const {
    if (count != other.count) return count > other.count;
    if (abs_n != other.abs_n) return abs_n < other.abs_n;
    if (n != other.n) return n < other.n;
    return window_start < other.window_start;
  }
};

// The cubic k1^3 + (k - k1)^3 scaled by lambda^3 into integer units.
[[nodiscard]] std::int64_t cubic_units(std::int64_t n, std::int64_t n1) {
  return n * (n * n - 3 * n * n1 + 3 * n1 * n1);
}

struct ShellScan {
  double lo = 0.0;  // N * lambda; admissible |n1| satisfy lo <= |n1| < hi
  double hi = 0.0;
  std::int64_t first = 0;  // integer magnitudes in [first, last]
  std::int64_t last = -1;

  ShellScan(double shell, int lambda) {
    lo = shell * lambda;
    hi = 2.0 * shell * lambda;
    first = static_cast<std::int64_t>(std::ceil(lo));
    last = static_cast<std::int64_t>(std::ceil(hi)) - 1;
  }

  [[nodiscard]] bool admissible(std::int64_t n1) const {
    const double a = std::abs(static_cast<double>(n1));
    return a >= lo && a < hi;
  }
};

// Attained cubic values over the fiber's admissible k1, sorted.
void collect_fiber_values(const ShellScan& shell, std::int64_t n,
                          std::vector<std::int64_t>& values) {
  values.clear();
  for (std::int64_t m = shell.first; m <= shell.last; ++m) {
    if (shell.admissible(n - m)) values.push_back(cubic_units(n, m));
    if (shell.admissible(n + m)) values.push_back(cubic_units(n, -m));
  }
  std::sort(values.begin(), values.end());
}

// Largest population of a closed window of integer width w_units, with the
// earliest window start among ties.
[[nodiscard]] FiberBest best_window(const std::vector<std::int64_t>& values,
                                    std::int64_t n, std::int64_t w_units) {
  FiberBest best;
  best.n = n;
  best.abs_n = std::abs(n);
  std::size_t j = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (j < i) j = i;
    while (j + 1 < values.size() && values[j + 1] - values[i] <= w_units) ++j;
    const auto count = static_cast<std::int64_t>(j - i + 1);
    if (count > best.count) {
      best.count = count;
      best.window_start = values[i];
    }
  }
  return best;
}

[[nodiscard]] std::int64_t window_units(double window_width, int lambda) {
  const double l3 = static_cast<double>(lambda) * lambda * lambda;
  return static_cast<std::int64_t>(std::llround(window_width * l3));
}

}  // namespace

bool is_dyadic(double x) {
  if (!(x > 0.0)) return false;
  int exponent = 0;
  return std::frexp(x, &exponent) == 0.5;
}

CountReport strichartz_count(double shell, int lambda, double window_width,
                             bool parallel) {
  require(is_dyadic(shell) && shell >= 0.5,
          "strichartz_count: shell must be dyadic and at least 1/2");
  require(lambda >= 1, "strichartz_count: lambda must be a positive integer");
  require(window_width > 0.0, "strichartz_count: window width must be positive");

  CountReport report;
  report.shell = shell;
  report.lambda = lambda;
  report.window_width = window_width;

  const ShellScan scan(shell, lambda);
  const std::int64_t w_units = window_units(window_width, lambda);
  const auto n_max = static_cast<std::int64_t>(4.0 * shell * lambda);

  report.zero_fiber_count = 2 * std::max<std::int64_t>(0, scan.last - scan.first + 1);

  FiberBest best;
  double per_fiber_max = 0.0;
  const double inv_lambda = 1.0 / lambda;

#pragma omp parallel if (parallel)
  {
    FiberBest local;
    double local_per_fiber = 0.0;
    std::vector<std::int64_t> values;
#pragma omp for schedule(static)
    for (std::int64_t n = -n_max; n <= n_max; ++n) {
      if (n == 0) continue;
      collect_fiber_values(scan, n, values);
      if (values.empty()) continue;
      const FiberBest candidate = best_window(values, n, w_units);
      if (candidate.beats(local)) local = candidate;
      const double abs_k = static_cast<double>(candidate.abs_n) * inv_lambda;
      const double fiber_bound = 1.0 / std::sqrt(abs_k) + inv_lambda;
      const double fiber_ratio =
          static_cast<double>(candidate.count) * inv_lambda / fiber_bound;
      local_per_fiber = std::max(local_per_fiber, fiber_ratio);
    }
#pragma omp critical(kdvw_lattice_reduce)
    {
      if (local.beats(best)) best = local;
      per_fiber_max = std::max(per_fiber_max, local_per_fiber);
    }
  }

  report.sup_count = best.count;
  report.k_at_sup = static_cast<double>(best.n) * inv_lambda;
  const double l3 = static_cast<double>(lambda) * lambda * lambda;
  report.tau_at_sup =
      (static_cast<double>(best.window_start) + 0.5 * static_cast<double>(w_units)) / l3;
  report.normalized_sup = static_cast<double>(best.count) * inv_lambda;
  report.bound = shell <= 1.0 ? 1.0 : 1.0 / std::sqrt(shell) + inv_lambda;
  report.ratio = report.normalized_sup / report.bound;
  report.per_fiber_ratio_max = per_fiber_max;
  return report;
}

std::int64_t strichartz_fiber_count(double shell, int lambda, std::int64_t n_units,
                                    double window_width) {
  require(is_dyadic(shell) && shell >= 0.5,
          "strichartz_fiber_count: shell must be dyadic and at least 1/2");
  require(lambda >= 1, "strichartz_fiber_count: lambda must be a positive integer");
  const ShellScan scan(shell, lambda);
  std::vector<std::int64_t> values;
  collect_fiber_values(scan, n_units, values);
  if (values.empty()) return 0;
  if (n_units == 0) return static_cast<std::int64_t>(values.size());
  return best_window(values, n_units, window_units(window_width, lambda)).count;
}

MuSetReport mu_set_measure(double xi, double shell, int lambda) {
  require(lambda >= 1, "mu_set_measure: lambda must be a positive integer");
  require(is_dyadic(shell) && shell >= 1.0,
          "mu_set_measure: shell must be dyadic and at least 1");
  const double scaled = xi * lambda;
  const auto n = static_cast<std::int64_t>(std::llround(scaled));
  require(n != 0 && std::abs(scaled - static_cast<double>(n)) < 1e-9,
          "mu_set_measure: xi must be a nonzero point of the lattice");

  MuSetReport report;
  report.xi = xi;
  report.shell = shell;
  report.lambda = lambda;
  report.bound = lambda * std::pow(shell, 0.75);

  const double l3 = static_cast<double>(lambda) * lambda * lambda;
  // Centers live at -3 n n1 n2 / lambda^3; anything relevant satisfies
  // |n1 n2| <= (2M + max half-width) lambda^3 / (3 |n|).
  const double half_width_cap = std::pow(2.0 + 2.0 * shell + 2.0, 0.01) + 1.0;
  const double pair_cap = (2.0 * shell + half_width_cap) * l3 / (3.0 * std::abs(static_cast<double>(n)));
  const auto n1_max = static_cast<std::int64_t>(
      (std::abs(static_cast<double>(n)) +
       std::sqrt(static_cast<double>(n) * n + 4.0 * pair_cap)) /
          2.0 +
      2.0);

  std::vector<std::pair<double, double>> clipped;
  for (std::int64_t n1 = -n1_max; n1 <= n1_max; ++n1) {
    const std::int64_t n2 = n - n1;
    if (n1 == 0 || n2 == 0) continue;
    const std::int64_t product_units = n * n1 * n2;
    const double product = static_cast<double>(product_units) / l3;
    const double center = -3.0 * product;
    const double half_width = std::pow(2.0 + std::abs(product), 0.01);
    const double positive_lo = std::max(center - half_width, shell);
    const double positive_hi = std::min(center + half_width, 2.0 * shell);
    if (positive_lo < positive_hi) clipped.emplace_back(positive_lo, positive_hi);
    const double negative_lo = std::max(center - half_width, -2.0 * shell);
    const double negative_hi = std::min(center + half_width, -shell);
    if (negative_lo < negative_hi) clipped.emplace_back(negative_lo, negative_hi);
  }

  report.candidate_intervals = static_cast<std::int64_t>(clipped.size());
  std::sort(clipped.begin(), clipped.end());
  double measure = 0.0;
  double open_lo = 0.0;
  double open_hi = 0.0;
  bool open = false;
  for (const auto& [lo, hi] : clipped) {
    if (!open) {
      open_lo = lo;
      open_hi = hi;
      open = true;
    } else if (lo <= open_hi) {
      open_hi = std::max(open_hi, hi);
    } else {
      measure += open_hi - open_lo;
      open_lo = lo;
      open_hi = hi;
    }
  }
  if (open) measure += open_hi - open_lo;
  report.measure = measure;
  report.ratio = report.bound > 0.0 ? measure / report.bound : 0.0;
  return report;
}

}  // namespace kdvw::lattice
