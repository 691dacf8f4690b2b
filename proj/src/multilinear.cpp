#include "kdvw/multilinear.hpp"

#include <algorithm>
#include <array>

namespace kdvw::forms {

namespace {

constexpr complexd kI{0.0, 1.0};

int binomial2(int n) { return n * (n - 1) / 2; }

// permutations of {0..k-1} in lexicographic order
std::vector<std::vector<int>> permutations(int k) {
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  std::vector<std::vector<int>> all;
  do {
    all.push_back(idx);
  } while (std::next_permutation(idx.begin(), idx.end()));
  return all;
}

KMultiplier boundary_impl(const KMultiplier& sigma, double band_limit) {
  require(sigma.is_symmetric, "prop1_boundary: input multiplier must be symmetric");
  require(sigma.arity >= 1 && sigma.arity <= 4, "prop1_boundary: arity must be in [1, 4]");
  const int k = sigma.arity;
  const int n = k + 1;
  const complexd prefactor = -kI * (static_cast<double>(k) / 2.0) / static_cast<double>(binomial2(n));
  auto inner = sigma.eval;
  KMultiplier out;
  out.arity = n;
  out.is_symmetric = true;
  out.requires_nonzero_args = true;
  out.eval = [k, n, prefactor, inner, band_limit](const double* xs) -> complexd {
    complexd acc{0.0, 0.0};
    double args[5];
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        const double fused = xs[a] + xs[b];
        if (fused == 0.0) continue;
        if (std::abs(fused) > band_limit) continue;
        int pos = 0;
        for (int j = 0; j < n; ++j) {
          if (j != a && j != b) args[pos++] = xs[j];
        }
        args[k - 1] = fused;
        acc += inner(args) * fused;
      }
    }
    return prefactor * acc;
  };
  return out;
}

}  // namespace

KMultiplier constant_multiplier(int arity, complexd value) {
  KMultiplier m;
  m.arity = arity;
  m.is_symmetric = true;
  m.eval = [value](const double*) { return value; };
  return m;
}

KMultiplier alpha_multiplier(int arity) {
  KMultiplier m;
  m.arity = arity;
  m.is_symmetric = true;
  m.eval = [arity](const double* xs) {
    double acc = 0.0;
    for (int i = 0; i < arity; ++i) acc += xs[i] * xs[i] * xs[i];
    return kI * acc;
  };
  return m;
}

KMultiplier product_multiplier(const KMultiplier& a, const KMultiplier& b) {
  require(a.arity == b.arity, "product_multiplier: arity mismatch");
  KMultiplier m;
  m.arity = a.arity;
  m.is_symmetric = a.is_symmetric && b.is_symmetric;
  m.requires_nonzero_args = a.requires_nonzero_args || b.requires_nonzero_args;
  auto ea = a.eval, eb = b.eval;
  m.eval = [ea, eb](const double* xs) { return ea(xs) * eb(xs); };
  return m;
}

KMultiplier tensor_multiplier(int arity, std::function<double(double)> factor) {
  KMultiplier m;
  m.arity = arity;
  m.is_symmetric = true;
  m.eval = [arity, factor](const double* xs) {
    double acc = 1.0;
    for (int i = 0; i < arity; ++i) acc *= factor(xs[i]);
    return complexd{acc, 0.0};
  };
  return m;
}

KMultiplier symmetrize(const KMultiplier& m) {
  if (m.is_symmetric) return m;
  require(m.arity <= 5, "symmetrize: unsupported arity (k > 5)");
  const auto perms = permutations(m.arity);
  const double inv = 1.0 / static_cast<double>(perms.size());
  const int k = m.arity;
  auto inner = m.eval;
  KMultiplier out;
  out.arity = k;
  out.is_symmetric = true;
  out.requires_nonzero_args = m.requires_nonzero_args;
  out.eval = [perms, inv, k, inner](const double* xs) {
    complexd acc{0.0, 0.0};
    double args[5];
    for (const auto& p : perms) {
      for (int i = 0; i < k; ++i) args[i] = xs[p[i]];
      acc += inner(args);
    }
    return acc * inv;
  };
  return out;
}

KMultiplier prop1_boundary(const KMultiplier& sigma) {
  return boundary_impl(sigma, std::numeric_limits<double>::infinity());
}

KMultiplier prop1_boundary_banded(const KMultiplier& sigma, double band_frequency_limit) {
  require(band_frequency_limit > 0.0, "prop1_boundary_banded: band limit must be positive");
  return boundary_impl(sigma, band_frequency_limit);
}

KMultiplier prop1_boundary_full_sym(const KMultiplier& sigma) {
  require(sigma.is_symmetric, "prop1_boundary: input multiplier must be symmetric");
  require(sigma.arity >= 1 && sigma.arity <= 4, "prop1_boundary: arity must be in [1, 4]");
  const int k = sigma.arity;
  auto inner = sigma.eval;
  // Unsymmetrized display form sigma(xi_1..xi_{k-1}, xi_k + xi_{k+1}) * (xi_k + xi_{k+1}),
  // with the same fused-zero drop rule as the reduced form.
  KMultiplier display;
  display.arity = k + 1;
  display.is_symmetric = false;
  display.requires_nonzero_args = true;
  display.eval = [k, inner](const double* xs) -> complexd {
    const double fused = xs[k - 1] + xs[k];
    if (fused == 0.0) return complexd{0.0, 0.0};
    double args[5];
    for (int i = 0; i < k - 1; ++i) args[i] = xs[i];
    args[k - 1] = fused;
    return inner(args) * fused;
  };
  KMultiplier sym = symmetrize(display);
  const complexd prefactor = -kI * (static_cast<double>(k) / 2.0);
  auto se = sym.eval;
  sym.eval = [se, prefactor](const double* xs) { return prefactor * se(xs); };
  return sym;
}

namespace detail {

std::vector<FieldView> make_views(std::span<const SpectralField* const> fields) {
  std::vector<FieldView> views;
  views.reserve(fields.size());
  for (const SpectralField* f : fields) {
    views.push_back(FieldView{f->raw().data(), f->mode_count(), spectral::support_mode_limit(*f)});
  }
  return views;
}

}  // namespace detail

void check_lambda_preconditions(const KMultiplier& m,
                                std::span<const SpectralField* const> fields) {
  require(m.arity >= 2 && m.arity <= 5, "eval_lambda: arity must be in [2, 5]");
  require(static_cast<int>(fields.size()) == m.arity, "eval_lambda: field count != multiplier arity");
  require(m.eval != nullptr, "eval_lambda: multiplier has no evaluator");
  for (const SpectralField* f : fields) {
    require(f->grid() == fields[0]->grid(), "eval_lambda: fields on different grids");
    if (m.requires_nonzero_args) {
      require(f->is_mean_zero(),
              "eval_lambda: multiplier divides by frequencies but a field is not mean-zero");
    }
  }
}

namespace {

LambdaSum eval_lambda_sum(const KMultiplier& m, std::span<const SpectralField* const> fields,
                          bool parallel) {
  check_lambda_preconditions(m, fields);
  auto views = detail::make_views(fields);
  const auto& fn = m.eval;
  return detail::sum_hyperplane(fields[0]->grid(), views,
                                [&fn](const double* xs) { return fn(xs); }, parallel);
}

}  // namespace

complexd eval_lambda(const KMultiplier& m, std::span<const SpectralField* const> fields,
                     bool parallel) {
  return eval_lambda_sum(m, fields, parallel).value;
}

complexd eval_lambda(const KMultiplier& m, const SpectralField& u, bool parallel) {
  std::vector<const SpectralField*> fields(m.arity, &u);
  return eval_lambda(m, fields, parallel);
}

complexd eval_lambda_serial(const KMultiplier& m, const SpectralField& u) {
  return eval_lambda(m, u, /*parallel=*/false);
}

double eval_lambda_real(const KMultiplier& m, const SpectralField& u, bool parallel) {
  std::vector<const SpectralField*> fields(m.arity, &u);
  const LambdaSum sum = eval_lambda_sum(m, fields, parallel);
  const double tolerance = 1e-10 * sum.abs_mass + 1e-300;
  if (std::abs(sum.value.imag()) > tolerance) {
    throw numeric_error("eval_lambda_real: imaginary residue above 1e-10 relative (got " +
                        format_double(sum.value.imag()) + " against mass " +
                        format_double(sum.abs_mass) + ")");
  }
  return sum.value.real();
}

complexd eval_lambda_bruteforce(const KMultiplier& m,
                                std::span<const SpectralField* const> fields) {
  check_lambda_preconditions(m, fields);
  const PeriodicGrid& grid = fields[0]->grid();
  const int top = grid.max_mode();
  const double s = grid.spacing();
  const int k = m.arity;
  complexd acc{0.0, 0.0};
  std::vector<int> j(k, -top);
  // odometer over the k-1 free indices
  while (true) {
    int last = 0;
    for (int i = 0; i < k - 1; ++i) last -= j[i];
    if (std::abs(last) <= top) {
      j[k - 1] = last;
      complexd prod{1.0, 0.0};
      bool zero = false;
      double xs[5];
      for (int i = 0; i < k; ++i) {
        const complexd c = fields[i]->coeff(j[i]);
        if (c == complexd{0.0, 0.0}) {
          zero = true;
          break;
        }
        prod *= c;
        xs[i] = s * j[i];
      }
      if (!zero) acc += m.eval(xs) * prod;
    }
    int level = k - 2;
    while (level >= 0 && j[level] == top) {
      j[level] = -top;
      --level;
    }
    if (level < 0) break;
    ++j[level];
  }
  return acc * std::pow(grid.period, -(k - 1));
}

complexd eval_lambda_bruteforce(const KMultiplier& m, const SpectralField& u) {
  std::vector<const SpectralField*> fields(m.arity, &u);
  return eval_lambda_bruteforce(m, fields);
}

DerivativeCheckReport time_derivative_check(const KMultiplier& m,
                                            std::span<const SpectralField> samples,
                                            double sample_dt, int fd_order,
                                            double band_frequency_limit) {
  require(m.is_symmetric, "time_derivative_check: multiplier must be symmetric");
  require(fd_order == 2 || fd_order == 4 || fd_order == 6,
          "time_derivative_check: order must be 2, 4 or 6");
  const int margin = fd_order / 2;
  require(static_cast<int>(samples.size()) >= 2 * margin + 1,
          "time_derivative_check: not enough samples for the stencil");
  require(sample_dt > 0.0, "time_derivative_check: sample_dt must be positive");

  const KMultiplier m_alpha = product_multiplier(m, alpha_multiplier(m.arity));
  const KMultiplier boundary = std::isinf(band_frequency_limit)
                                   ? prop1_boundary(m)
                                   : prop1_boundary_banded(m, band_frequency_limit);

  const int n = static_cast<int>(samples.size());
  std::vector<complexd> f_values(n), rhs(n);
  for (int i = 0; i < n; ++i) {
    f_values[i] = eval_lambda(m, samples[i]);
    rhs[i] = eval_lambda(m_alpha, samples[i]) + eval_lambda(boundary, samples[i]);
  }

  // centered first-derivative weights (offset -margin .. +margin)
  static const std::vector<double> w2 = {-0.5, 0.0, 0.5};
  static const std::vector<double> w4 = {1.0 / 12, -2.0 / 3, 0.0, 2.0 / 3, -1.0 / 12};
  static const std::vector<double> w6 = {-1.0 / 60, 3.0 / 20, -3.0 / 4, 0.0,
                                         3.0 / 4,   -3.0 / 20, 1.0 / 60};
  const std::vector<double>& w = fd_order == 2 ? w2 : fd_order == 4 ? w4 : w6;

  double scale = 0.0;
  for (int i = margin; i < n - margin; ++i) scale = std::max(scale, std::abs(rhs[i]));
  if (scale < 1e-300) {
    double fmax = 0.0;
    for (const auto& v : f_values) fmax = std::max(fmax, std::abs(v));
    scale = fmax / (sample_dt * n);
    if (scale < 1e-300) scale = 1.0;
  }

  DerivativeCheckReport report;
  report.fd_order = fd_order;
  report.scale = scale;
  for (int i = margin; i < n - margin; ++i) {
    complexd fd{0.0, 0.0};
    for (int o = -margin; o <= margin; ++o) fd += w[o + margin] * f_values[i + o];
    fd /= sample_dt;
    const double err = std::abs(fd - rhs[i]);
    report.max_abs_error = std::max(report.max_abs_error, err);
    ++report.interior_samples;
  }
  report.max_rel_error = report.max_abs_error / scale;
  return report;
}

}  // namespace kdvw::forms
