// kdvw — command-line front end for the workbench: experiment
// orchestration, persistence, and report generation.
//
// Every subcommand is driven by a plain-text key=value manifest.  The
// effective configuration is assembled in three layers — built-in
// defaults, then an optional --manifest FILE, then repeatable
// --set key=value overrides — and the fully resolved manifest (every key
// materialized, format_version included) is written to the run directory
// as manifest.txt.  Rerunning a saved manifest reproduces every CSV
// byte for byte: seeds are explicit, reductions are deterministic, and
// numbers are printed as shortest round-trip decimals.
//
// Unless --out (or the `out` key) is given, the run directory is
// runs/<kind>-<hash> where <hash> is an FNV-1a digest of the resolved
// manifest minus the `out` key itself, so identical configurations land
// in identical directories.
//
// Exit status: 0 when every check the manifest declares passes, 1 on a
// failed check or an aborted run (partial results are still saved), 2 on
// a configuration contract violation.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kdvw/common.hpp"
#include "kdvw/hierarchy.hpp"
#include "kdvw/lattice.hpp"
#include "kdvw/miura.hpp"
#include "kdvw/solver.hpp"
#include "kdvw/spectral.hpp"
#include "kdvw/verify.hpp"

namespace fs = std::filesystem;

using kdvw::CsvWriter;
using kdvw::Manifest;
using kdvw::contract_violation;
using kdvw::numeric_error;
using kdvw::spectral::EnergyMultiplier;
using kdvw::spectral::PeriodicGrid;
using kdvw::spectral::SpectralField;

namespace {

// ---------------------------------------------------------------- utilities

std::string strf(const char* fmt, ...) {
  char buf[1024];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  return std::string(buf);
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    if (!item.empty()) {
      char* end = nullptr;
      const double v = std::strtod(item.c_str(), &end);
      kdvw::require(end != nullptr && *end == '\0',
                    what + ": cannot parse list entry '" + item + "'");
      out.push_back(v);
    }
    pos = comma + 1;
  }
  kdvw::require(!out.empty(), what + ": empty list");
  return out;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  std::size_t points = 0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  LineFit f;
  f.points = x.size();
  if (x.size() < 2 || x.size() != y.size()) return f;
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  kdvw::require(sxx > 0.0, "fit_line: degenerate abscissae");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - (f.intercept + f.slope * x[i]);
      ss += r * r;
    }
    f.stderr_slope = std::sqrt(ss / (n - 2.0) / sxx);
  }
  return f;
}

// --------------------------------------------------------- manifest plumbing

struct KeyDoc {
  const char* key;
  const char* def;
};

bool schema_has(std::span<const KeyDoc> schema, const std::string& key) {
  if (key == "kind" || key == "format_version" || key == "out") return true;
  for (const KeyDoc& d : schema) {
    if (key == d.key) return true;
  }
  return false;
}

/// defaults -> optional manifest file -> --set overrides -> --out; the
/// result carries every schema key plus kind/format_version/out.
Manifest resolve_manifest(const std::string& kind, std::span<const KeyDoc> schema,
                          const std::string& manifest_path,
                          const std::vector<std::string>& overrides, const std::string& out_flag) {
  Manifest mf;
  mf.set("kind", kind);
  mf.set("format_version", "1");
  for (const KeyDoc& d : schema) mf.set(d.key, d.def);

  if (!manifest_path.empty()) {
    const Manifest loaded = Manifest::load(manifest_path);
    for (const auto& [k, v] : loaded.entries) {
      kdvw::require(schema_has(schema, k),
                    "manifest key '" + k + "' is not documented for subcommand '" + kind + "'");
      if (k == "kind") {
        kdvw::require(v == kind, "manifest kind '" + v + "' does not match subcommand '" + kind + "'");
        continue;
      }
      mf.set(k, v);
    }
  }
  for (const std::string& kv : overrides) {
    const std::size_t eq = kv.find('=');
    kdvw::require(eq != std::string::npos && eq > 0, "--set expects key=value, got '" + kv + "'");
    const std::string k = kv.substr(0, eq);
    kdvw::require(schema_has(schema, k) && k != "kind",
                  "--set key '" + k + "' is not documented for subcommand '" + kind + "'");
    mf.set(k, kv.substr(eq + 1));
  }
  mf.set("kind", kind);
  mf.set("format_version", "1");
  if (!out_flag.empty()) mf.set("out", out_flag);

  if (mf.get_or("out", "").empty()) {
    std::string blob;
    for (const auto& [k, v] : mf.entries) {
      if (k != "out") blob += k + "=" + v + "\n";
    }
    mf.set("out", strf("runs/%s-%08llx", kind.c_str(),
                       static_cast<unsigned long long>(fnv1a64(blob) & 0xffffffffULL)));
  }
  return mf;
}

fs::path prepare_run_dir(const Manifest& mf) {
  const fs::path dir(mf.get("out"));
  fs::create_directories(dir);
  mf.save(dir / "manifest.txt");
  std::printf("run directory: %s\n", dir.string().c_str());
  return dir;
}

struct Gate {
  bool all = true;
  void expect(bool ok, const std::string& what) {
    std::printf("[%s] %s\n", ok ? "PASS" : "FAIL", what.c_str());
    all = all && ok;
  }
  [[nodiscard]] int finish(const std::string& kind) const {
    std::printf("%s: %s\n", kind.c_str(),
                all ? "all declared checks passed" : "one or more declared checks FAILED");
    return all ? 0 : 1;
  }
};

// ------------------------------------------------------------ shared pieces

kdvw::solver::EvolutionSpec spec_from(const Manifest& mf) {
  kdvw::solver::EvolutionSpec spec;
  spec.equation = kdvw::solver::equation_from_name(mf.get("equation"));
  spec.dt = mf.get_double("dt");
  spec.t_end = mf.get_double("t_end");
  spec.output_stride = static_cast<int>(mf.get_int_or("output_stride", 1));
  spec.blowup_threshold = mf.get_double_or("blowup_threshold", 1e8);
  spec.nonlinearity_off = mf.get_int_or("nonlinearity_off", 0) != 0;
  return spec;
}

int datum_band_limit(const Manifest& mf, kdvw::solver::Equation eq, int mode_count) {
  const long long requested = mf.get_int_or("datum_band", 0);
  if (requested > 0) return static_cast<int>(requested);
  return kdvw::solver::dealias_mode_limit(eq, mode_count);
}

SpectralField datum_from(const Manifest& mf, const PeriodicGrid& grid,
                         kdvw::solver::Equation eq, std::uint64_t seed) {
  const int band = datum_band_limit(mf, eq, grid.mode_count);
  return kdvw::solver::generate_datum(grid, band, mf.get_double("datum_s"),
                                      mf.get_double("amplitude"), seed);
}

/// Scale u so that ||I u||_{L2} == target exactly (up to round-off).
void normalize_smoothed_mass(SpectralField& u, const EnergyMultiplier& m, double target) {
  const double e2 = kdvw::hierarchy::eval_E2(m, u);
  kdvw::require(e2 > 0.0, "datum has zero smoothed mass; cannot normalize");
  const double scale = target / std::sqrt(e2);
  for (kdvw::complexd& c : u.raw()) c *= scale;
}

// ------------------------------------------------------------------- solve

constexpr KeyDoc kSolveKeys[] = {
    {"equation", "kdv"},
    {"period", "6.283185307179586"},  // 2*pi
    {"mode_count", "64"},
    {"datum_band", "0"},  // 0 -> the equation's dealias limit
    {"datum_s", "1.5"},
    {"amplitude", "0.5"},
    {"seed", "7"},
    {"dt", "1e-4"},
    {"t_end", "0.25"},
    {"output_stride", "25"},
    {"nonlinearity_off", "0"},
    {"blowup_threshold", "1e8"},
    {"l2_drift_tol", "1e-8"},
};

int cmd_solve(const Manifest& mf) {
  const fs::path dir = prepare_run_dir(mf);
  const PeriodicGrid grid(mf.get_double("period"), static_cast<int>(mf.get_int_or("mode_count", 64)));
  const auto spec = spec_from(mf);
  const SpectralField datum =
      datum_from(mf, grid, spec.equation, static_cast<std::uint64_t>(mf.get_int_or("seed", 7)));

  const kdvw::solver::Trajectory traj = kdvw::solver::solve(spec, grid, datum);
  kdvw::solver::save_run(dir, traj);

  const double drift =
      std::abs(traj.diag.l2_final - traj.diag.l2_initial) / std::max(traj.diag.l2_initial, 1e-300);
  std::printf("equation %s, %lld steps, dealias band |n| <= %d, %zu snapshots\n",
              kdvw::solver::equation_name(spec.equation).data(),
              static_cast<long long>(traj.diag.steps), traj.band_mode_limit, traj.samples.size());

  Gate gate;
  gate.expect(drift <= mf.get_double("l2_drift_tol"),
              strf("L2 drift %.3e <= %s over the run", drift, mf.get("l2_drift_tol").c_str()));
  return gate.finish("solve");
}

// ------------------------------------------------------------- energy-track

constexpr KeyDoc kEnergyTrackKeys[] = {
    {"equation", "kdv"},
    {"period", "6.283185307179586"},
    {"mode_count", "32"},
    {"datum_band", "10"},
    {"datum_s", "-0.5"},
    {"amplitude", "1"},
    {"seed", "21"},
    {"dt", "1e-4"},
    {"t_end", "0.008"},
    {"output_stride", "1"},
    {"nonlinearity_off", "0"},
    {"blowup_threshold", "1e8"},
    {"cutoff", "8"},      // operator cutoff N
    {"s", "-0.5"},        // operator exponent
    {"residual_tol", "1e-5"},
    {"residual_floor", "1e-30"},  // lower bound on the residual scale
};

int cmd_energy_track(const Manifest& mf) {
  const fs::path dir = prepare_run_dir(mf);
  const PeriodicGrid grid(mf.get_double("period"), static_cast<int>(mf.get_int_or("mode_count", 32)));
  const auto spec = spec_from(mf);
  const SpectralField datum =
      datum_from(mf, grid, spec.equation, static_cast<std::uint64_t>(mf.get_int_or("seed", 21)));

  const kdvw::solver::Trajectory traj = kdvw::solver::solve(spec, grid, datum);
  const EnergyMultiplier m(mf.get_double("cutoff"), mf.get_double("s"));
  const kdvw::hierarchy::Hierarchy h =
      kdvw::hierarchy::build_hierarchy(m, traj.band_frequency_limit());
  const kdvw::hierarchy::EnergyLedger ledger =
      kdvw::hierarchy::track_energy(h, traj.samples, traj.times);
  ledger.save_csv((dir / "energy.csv").string());

  {
    CsvWriter csv(dir / "invariants.csv", {"index", "t", "l2", "hamiltonian"});
    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
      csv.row_values({static_cast<double>(i), traj.times[i],
                      kdvw::spectral::l2_norm(traj.samples[i]),
                      kdvw::hierarchy::hamiltonian_energy(traj.samples[i])});
    }
  }

  double max_resid = 0.0, max_rhs = 0.0;
  std::size_t interior = 0;
  for (const auto& row : ledger.rows) {
    if (std::isnan(row.residual)) continue;  // stencil margins
    max_resid = std::max(max_resid, std::abs(row.residual));
    max_rhs = std::max(max_rhs, std::abs(row.lambda5_m5));
    ++interior;
  }
  const double scale = std::max(max_rhs, mf.get_double("residual_floor"));
  const double rel = interior > 0 ? max_resid / scale : 0.0;
  std::printf("%zu snapshots, %zu interior stencil rows; quintic-flux scale %.3e\n",
              traj.samples.size(), interior, max_rhs);

  Gate gate;
  gate.expect(interior > 0 && rel <= mf.get_double("residual_tol"),
              strf("centered-difference dE4/dt matches Lambda5(M5): rel %.3e <= %s", rel,
                   mf.get("residual_tol").c_str()));
  return gate.finish("energy-track");
}

// --------------------------------------------------------------- decay-scan

constexpr KeyDoc kDecayScanKeys[] = {
    {"equation", "kdv"},
    {"period", "3.141592653589793"},  // pi; scaled by the lambda rule per cutoff
    {"mode_count", "64"},
    {"datum_band", "0"},
    {"datum_s", "1.5"},
    {"eps0", "0.25"},          // each datum is scaled so ||I phi||_{L2} = eps0
    {"s", "-0.5"},
    {"cutoffs", "4,8,16,32"},  // dyadic ascending, >= 4 values
    {"seeds", "11,12,13"},
    {"dt", "1e-4"},
    {"t_end", "1"},
    {"output_stride", "100"},
    {"blowup_threshold", "1e8"},
    {"lambda_rule", "fixed"},  // fixed | coupled (lambda ~ N^{-s/(s+3/2)})
    {"sentinel", "0"},         // 1: identity multiplier, roundoff-floor check
    {"sentinel_floor", "1e-10"},
    {"slope_limit", "-2.2"},
    {"concurrent_runs", "2"},
};

struct DecayCell {
  double sup_e4 = 0.0;
  double sup_e2 = 0.0;
  bool aborted = false;
  std::string abort_reason;
};

int cmd_decay_scan(const Manifest& mf) {
  const fs::path dir = prepare_run_dir(mf);
  const std::vector<double> cutoffs = parse_list(mf.get("cutoffs"), "cutoffs");
  const std::vector<double> seeds = parse_list(mf.get("seeds"), "seeds");
  const bool sentinel = mf.get_int_or("sentinel", 0) != 0;
  kdvw::require(cutoffs.size() >= 4, "decay-scan: need at least four cutoffs for the slope fit");
  for (std::size_t i = 0; i < cutoffs.size(); ++i) {
    kdvw::require(kdvw::lattice::is_dyadic(cutoffs[i]), "decay-scan: cutoffs must be dyadic");
    kdvw::require(i == 0 || cutoffs[i] > cutoffs[i - 1], "decay-scan: cutoffs must ascend");
  }

  const double s = mf.get_double("s");
  const std::string lambda_rule = mf.get("lambda_rule");
  kdvw::require(lambda_rule == "fixed" || lambda_rule == "coupled",
                "decay-scan: lambda_rule must be 'fixed' or 'coupled'");
  const int mode_count = static_cast<int>(mf.get_int_or("mode_count", 64));
  const double base_period = mf.get_double("period");
  const double eps0 = mf.get_double("eps0");
  auto base_spec = spec_from(mf);
  base_spec.output_stride = static_cast<int>(mf.get_int_or("output_stride", 100));

  // lambda(N): fixed keeps the base period; coupled multiplies it by
  // N^{-s/(s+3/2)} rounded to the nearest power of two so that every
  // frequency 2*pi*n/lambda stays an exactly representable dyadic multiple
  // (hyperplane sums then cancel bitwise).  The rounding is logged below.
  std::vector<double> lambda_factor(cutoffs.size(), 1.0);
  if (lambda_rule == "coupled") {
    kdvw::require(s > -1.5, "decay-scan: coupled lambda rule needs s > -3/2");
    for (std::size_t i = 0; i < cutoffs.size(); ++i) {
      const double raw = std::pow(cutoffs[i], -s / (s + 1.5));
      lambda_factor[i] = std::exp2(static_cast<double>(std::lround(std::log2(raw))));
      std::printf("lambda rule: N=%s raw factor %.6g rounded to power of two %.6g\n",
                  kdvw::format_double(cutoffs[i]).c_str(), raw, lambda_factor[i]);
    }
  }

  struct Task {
    std::size_t cutoff_index;
    double cutoff;
    double period;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < cutoffs.size(); ++i) {
    for (const double seed : seeds) {
      tasks.push_back(Task{i, cutoffs[i], base_period * lambda_factor[i],
                           static_cast<std::uint64_t>(seed)});
    }
  }

  auto run_task = [&](const Task& task) -> DecayCell {
    DecayCell cell;
    try {
      const PeriodicGrid grid(task.period, mode_count);
      const int band = datum_band_limit(mf, base_spec.equation, mode_count);
      const EnergyMultiplier m =
          sentinel ? EnergyMultiplier::identity() : EnergyMultiplier(task.cutoff, s);
      SpectralField datum = kdvw::solver::generate_datum(grid, band, mf.get_double("datum_s"),
                                                         1.0, task.seed);
      normalize_smoothed_mass(datum, m, eps0);
      const kdvw::solver::Trajectory traj = kdvw::solver::solve(base_spec, grid, datum);
      const kdvw::hierarchy::Hierarchy h =
          kdvw::hierarchy::build_hierarchy(m, traj.band_frequency_limit());
      const double e2_0 = kdvw::hierarchy::eval_E2(m, traj.samples.front());
      const double e4_0 = kdvw::hierarchy::eval_E4(h, traj.samples.front());
      for (const SpectralField& u : traj.samples) {
        cell.sup_e2 = std::max(cell.sup_e2, std::abs(kdvw::hierarchy::eval_E2(m, u) - e2_0));
        cell.sup_e4 = std::max(cell.sup_e4, std::abs(kdvw::hierarchy::eval_E4(h, u) - e4_0));
      }
    } catch (const numeric_error& err) {
      cell.aborted = true;
      cell.abort_reason = err.what();
    }
    return cell;
  };

  // Independent runs dispatch concurrently (the per-run pipeline stays
  // sequential); results land in preassigned slots so aggregation order,
  // and therefore every output byte, is independent of scheduling.
  const std::size_t workers =
      std::max<long long>(1, mf.get_int_or("concurrent_runs", 2));
  std::vector<DecayCell> cells(tasks.size());
  for (std::size_t begin = 0; begin < tasks.size(); begin += workers) {
    const std::size_t end = std::min(tasks.size(), begin + workers);
    std::vector<std::future<DecayCell>> batch;
    for (std::size_t i = begin; i < end; ++i) {
      batch.push_back(std::async(std::launch::async, run_task, tasks[i]));
    }
    for (std::size_t i = begin; i < end; ++i) cells[i] = batch[i - begin].get();
  }

  CsvWriter detail(dir / "decay_detail.csv",
                   {"cutoff", "lambda", "seed", "sup_inc_e4", "sup_inc_e2", "aborted"});
  bool any_abort = false;
  std::string first_abort;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    detail.row_values({tasks[i].cutoff, tasks[i].period,
                       static_cast<double>(tasks[i].seed), cells[i].sup_e4, cells[i].sup_e2,
                       cells[i].aborted ? 1.0 : 0.0});
    if (cells[i].aborted && !any_abort) {
      any_abort = true;
      first_abort = cells[i].abort_reason;
    }
  }

  std::vector<double> per_n_e4(cutoffs.size(), 0.0), per_n_e2(cutoffs.size(), 0.0);
  std::vector<bool> per_n_complete(cutoffs.size(), true);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const std::size_t c = tasks[i].cutoff_index;
    if (cells[i].aborted) {
      per_n_complete[c] = false;
      continue;
    }
    per_n_e4[c] = std::max(per_n_e4[c], cells[i].sup_e4);
    per_n_e2[c] = std::max(per_n_e2[c], cells[i].sup_e2);
  }

  CsvWriter table(dir / "decay.csv",
                  {"cutoff", "lambda", "sup_inc_e4", "sup_inc_e2", "seeds", "complete"});
  std::vector<double> log_n, log_inc;
  for (std::size_t i = 0; i < cutoffs.size(); ++i) {
    table.row_values({cutoffs[i], base_period * lambda_factor[i], per_n_e4[i],
                      per_n_e2[i], static_cast<double>(seeds.size()),
                      per_n_complete[i] ? 1.0 : 0.0});
    std::printf("N=%-4s lambda=%-6s sup|E4-E4(0)|=%.6e  sup|E2-E2(0)|=%.6e%s\n",
                kdvw::format_double(cutoffs[i]).c_str(),
                kdvw::format_double(base_period * lambda_factor[i]).c_str(), per_n_e4[i],
                per_n_e2[i], per_n_complete[i] ? "" : "  [incomplete]");
    if (per_n_complete[i] && per_n_e4[i] > 0.0) {
      log_n.push_back(std::log(cutoffs[i]));
      log_inc.push_back(std::log(per_n_e4[i]));
    }
  }

  Gate gate;
  if (sentinel) {
    double worst = 0.0;
    for (std::size_t i = 0; i < cutoffs.size(); ++i) worst = std::max(worst, per_n_e4[i]);
    CsvWriter fitcsv(dir / "fit.csv", {"slope", "stderr", "points", "limit", "pass"});
    fitcsv.row_values({0.0, 0.0, 0.0, mf.get_double("sentinel_floor"),
                       worst <= mf.get_double("sentinel_floor") ? 1.0 : 0.0});
    gate.expect(worst <= mf.get_double("sentinel_floor"),
                strf("identity multiplier: all increments at round-off floor (max %.3e <= %s)",
                     worst, mf.get("sentinel_floor").c_str()));
  } else {
    const LineFit fit = fit_line(log_n, log_inc);
    const double limit = mf.get_double("slope_limit");
    const bool ok = fit.points >= 2 && fit.slope <= limit;
    CsvWriter fitcsv(dir / "fit.csv", {"slope", "stderr", "points", "limit", "pass"});
    fitcsv.row_values({fit.slope, fit.stderr_slope, static_cast<double>(fit.points), limit,
                       ok ? 1.0 : 0.0});
    std::size_t e2_above = 0;
    for (std::size_t i = 0; i < cutoffs.size(); ++i) {
      if (per_n_e2[i] > per_n_e4[i]) ++e2_above;
    }
    std::printf("log-log fit over %zu points: slope %.4f +- %.4f (E2 tracking sits above the "
                "E4 increment at %zu of %zu cutoffs)\n",
                fit.points, fit.slope, fit.stderr_slope, e2_above, cutoffs.size());
    gate.expect(ok, strf("fitted decay slope %.4f <= %s", fit.slope, mf.get("slope_limit").c_str()));
  }
  if (any_abort) {
    gate.expect(false, "solver abort: " + first_abort + " (partial results saved)");
  }
  return gate.finish("decay-scan");
}

// -------------------------------------------------------------- growth-track

constexpr KeyDoc kGrowthTrackKeys[] = {
    {"equation", "kdv"},
    {"period", "6.283185307179586"},
    {"mode_count", "64"},
    {"datum_band", "0"},
    {"datum_s", "-0.5"},
    {"amplitude", "1"},
    {"seed", "5"},
    {"s", "-0.5"},  // the Sobolev index being tracked
    {"dt", "1e-4"},
    {"t_end", "2"},  // the declared solve budget
    {"output_stride", "200"},
    {"nonlinearity_off", "0"},
    {"blowup_threshold", "1e8"},
    {"tail_fraction", "0.5"},   // fit the power law over t >= fraction * budget
    {"exponent_limit", "nan"},  // nan: informational fit, no check declared
};

int cmd_growth_track(const Manifest& mf) {
  const fs::path dir = prepare_run_dir(mf);
  const PeriodicGrid grid(mf.get_double("period"), static_cast<int>(mf.get_int_or("mode_count", 64)));
  auto spec = spec_from(mf);
  const double s = mf.get_double("s");
  SpectralField state =
      datum_from(mf, grid, spec.equation, static_cast<std::uint64_t>(mf.get_int_or("seed", 5)));

  // March one output interval at a time so that a blow-up abort still
  // leaves every completed snapshot on disk, flagged as truncated.
  const double segment = spec.dt * spec.output_stride;
  const auto segments = static_cast<std::int64_t>(std::llround(spec.t_end / segment));
  kdvw::require(segments >= 1 && std::abs(segments * segment - spec.t_end) < 1e-9 * spec.t_end,
                "growth-track: t_end must be an integer number of output intervals");
  auto piece = spec;
  piece.t_end = segment;

  std::vector<double> times{0.0}, norms{kdvw::spectral::sobolev_norm(state, s)},
      l2s{kdvw::spectral::l2_norm(state)};
  bool truncated = false;
  std::string abort_reason;
  for (std::int64_t k = 0; k < segments; ++k) {
    try {
      const kdvw::solver::Trajectory leg = kdvw::solver::solve(piece, grid, state);
      state = leg.samples.back();
      times.push_back(static_cast<double>(k + 1) * segment);
      norms.push_back(kdvw::spectral::sobolev_norm(state, s));
      l2s.push_back(kdvw::spectral::l2_norm(state));
    } catch (const numeric_error& err) {
      truncated = true;
      abort_reason = err.what();
      break;
    }
  }

  {
    CsvWriter csv(dir / "growth.csv", {"index", "t", "hs_norm", "l2", "truncated"});
    for (std::size_t i = 0; i < times.size(); ++i) {
      csv.row_values({static_cast<double>(i), times[i], norms[i], l2s[i], truncated ? 1.0 : 0.0});
    }
  }

  std::vector<double> log_t, log_norm;
  const double reached = times.back();
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (times[i] >= mf.get_double("tail_fraction") * reached) {
      log_t.push_back(std::log(times[i]));
      log_norm.push_back(std::log(norms[i]));
    }
  }
  const LineFit fit = fit_line(log_t, log_norm);
  {
    CsvWriter csv(dir / "fit.csv", {"exponent", "stderr", "points", "t_reached", "truncated"});
    csv.row_values({fit.slope, fit.stderr_slope, static_cast<double>(fit.points), reached,
                    truncated ? 1.0 : 0.0});
  }
  std::printf("||u(t)||_{H^%s} over [0, %s]: start %.6g, end %.6g; tail power-law exponent "
              "%.4f +- %.4f over %zu points\n",
              kdvw::format_double(s).c_str(), kdvw::format_double(reached).c_str(), norms.front(),
              norms.back(), fit.slope, fit.stderr_slope, fit.points);

  Gate gate;
  const double limit = mf.get_double_or("exponent_limit", std::nan(""));
  if (!std::isnan(limit)) {
    gate.expect(fit.slope <= limit,
                strf("tail growth exponent %.4f <= %s", fit.slope, mf.get("exponent_limit").c_str()));
  }
  if (truncated) {
    gate.expect(false, "solve budget not reached: " + abort_reason + " (series flagged truncated)");
  }
  return gate.finish("growth-track");
}

// --------------------------------------------------------------- bound-scan

constexpr KeyDoc kBoundScanKeys[] = {
    {"which", "all"},  // all | m3 | m4 | m5 | mvt
    {"cutoff", "8"},
    {"s", "-0.5"},
    {"seed", "9001"},
    {"samples", "20000"},
    {"samples_m5", "4000"},
    {"mvt_samples", "50000"},
    {"max_exponent2", "20"},
    {"m4_limit", "1"},
    {"m5_limit", "1"},
    {"mvt_first_limit", "1.3334"},   // 4/3 plus reporting headroom
    {"mvt_second_limit", "5.3334"},  // 16/3 plus reporting headroom
};

int cmd_bound_scan(const Manifest& mf) {
  namespace hi = kdvw::hierarchy;
  const fs::path dir = prepare_run_dir(mf);
  const std::string which = mf.get("which");
  kdvw::require(which == "all" || which == "m3" || which == "m4" || which == "m5" || which == "mvt",
                "bound-scan: which must be all|m3|m4|m5|mvt");
  const EnergyMultiplier m(mf.get_double("cutoff"), mf.get_double("s"));
  const auto seed = static_cast<std::uint64_t>(mf.get_int_or("seed", 9001));
  const auto samples = static_cast<std::size_t>(mf.get_int_or("samples", 20000));
  const auto samples_m5 = static_cast<std::size_t>(mf.get_int_or("samples_m5", 4000));
  const int maxe2 = static_cast<int>(mf.get_int_or("max_exponent2", 20));

  CsvWriter csv(dir / "bounds.csv",
                {"scan", "samples", "skipped_resonant", "violations", "max_ratio", "median_ratio",
                 "worst_block_median", "block_uniform", "limit", "pass"});
  Gate gate;
  const auto emit = [&](const char* name, const hi::BoundScanReport& r, double limit, bool ok) {
    csv.row({name, std::to_string(r.samples), std::to_string(r.skipped_resonant),
             std::to_string(r.violations), kdvw::format_double(r.max_ratio),
             kdvw::format_double(r.median_ratio), kdvw::format_double(r.worst_block_median),
             r.block_uniform ? "1" : "0", kdvw::format_double(limit), ok ? "1" : "0"});
  };

  if (which == "all" || which == "m3") {
    const hi::BoundScanReport r = hi::scan_m3_bound(m, seed, samples, maxe2);
    const bool ok = r.violations == 0;
    emit("m3", r, 1.0, ok);
    gate.expect(ok, strf("|M3| <= min(N1,N2,N3) on every sample (max ratio %.4f, %zu violations)",
                         r.max_ratio, r.violations));
  }
  if (which == "all" || which == "m4") {
    const hi::BoundScanReport r = hi::scan_m4_bound(m, seed + 1, samples, maxe2);
    const bool ok = r.max_ratio <= mf.get_double("m4_limit") && r.block_uniform;
    emit("m4", r, mf.get_double("m4_limit"), ok);
    gate.expect(ok, strf("M4 ratio max %.4f <= %s with dyadic-block uniformity", r.max_ratio,
                         mf.get("m4_limit").c_str()));
  }
  if (which == "all" || which == "m5") {
    const hi::BoundScanReport r = hi::scan_m5_bound(m, seed + 2, samples_m5, maxe2);
    const bool ok = r.max_ratio <= mf.get_double("m5_limit") && r.block_uniform;
    emit("m5", r, mf.get_double("m5_limit"), ok);
    gate.expect(ok, strf("M5 ratio max %.4f <= %s with dyadic-block uniformity", r.max_ratio,
                         mf.get("m5_limit").c_str()));
  }
  if (which == "all" || which == "mvt") {
    const hi::MvtReport r = hi::verify_mvt_control(
        m, seed + 3, static_cast<std::size_t>(mf.get_int_or("mvt_samples", 50000)));
    const bool ok1 = r.max_first_ratio <= mf.get_double("mvt_first_limit");
    const bool ok2 = r.max_second_ratio <= mf.get_double("mvt_second_limit");
    csv.row({"mvt_first", std::to_string(r.samples), "0", "0",
             kdvw::format_double(r.max_first_ratio), "", "", "",
             mf.get("mvt_first_limit"), ok1 ? "1" : "0"});
    csv.row({"mvt_second", std::to_string(r.samples), "0", "0",
             kdvw::format_double(r.max_second_ratio), "", "", "",
             mf.get("mvt_second_limit"), ok2 ? "1" : "0"});
    gate.expect(ok1, strf("first difference of m^2 controlled: %.4f <= %s", r.max_first_ratio,
                          mf.get("mvt_first_limit").c_str()));
    gate.expect(ok2, strf("second difference of m^2 controlled: %.4f <= %s", r.max_second_ratio,
                          mf.get("mvt_second_limit").c_str()));
  }
  return gate.finish("bound-scan");
}

// --------------------------------------------------------- count-strichartz

constexpr KeyDoc kCountKeys[] = {
    {"shells", "4,16,64"},
    {"lambdas", "1,16,64"},
    {"window", "2"},
    {"c_limit", "16"},
    {"fiber_limit", "2"},
    {"include_subunit", "1"},
    {"subunit_shell", "0.5"},
    {"subunit_lambda", "4"},
    {"subunit_limit", "2"},
    {"regression_n4_l1", "2"},  // exact exhaustive count at N=4, lambda=1
};

int cmd_count_strichartz(const Manifest& mf) {
  const fs::path dir = prepare_run_dir(mf);
  const std::vector<double> shells = parse_list(mf.get("shells"), "shells");
  const std::vector<double> lambdas = parse_list(mf.get("lambdas"), "lambdas");
  const double window = mf.get_double("window");

  CsvWriter csv(dir / "counts.csv",
                {"shell", "lambda", "sup_count", "k_at_sup", "tau_at_sup", "normalized_sup",
                 "zero_fiber_count", "bound", "ratio", "per_fiber_ratio_max"});
  const auto emit = [&](const kdvw::lattice::CountReport& r) {
    csv.row_values({r.shell, static_cast<double>(r.lambda), static_cast<double>(r.sup_count),
                    r.k_at_sup, r.tau_at_sup, r.normalized_sup,
                    static_cast<double>(r.zero_fiber_count), r.bound, r.ratio,
                    r.per_fiber_ratio_max});
  };

  double c_max = 0.0, fiber_max = 0.0;
  long long regression = -1;
  for (const double shell : shells) {
    for (const double lambda : lambdas) {
      const kdvw::lattice::CountReport r =
          kdvw::lattice::strichartz_count(shell, static_cast<int>(lambda), window);
      emit(r);
      c_max = std::max(c_max, r.ratio);
      fiber_max = std::max(fiber_max, r.per_fiber_ratio_max);
      if (shell == 4.0 && lambda == 1.0) regression = r.sup_count;
      std::printf("N=%-5s lambda=%-3d sup %lld at k=%s, normalized %.4f, ratio vs "
                  "1/sqrt(N)+1/lambda: %.4f\n",
                  kdvw::format_double(r.shell).c_str(), r.lambda,
                  static_cast<long long>(r.sup_count), kdvw::format_double(r.k_at_sup).c_str(),
                  r.normalized_sup, r.ratio);
    }
  }

  Gate gate;
  gate.expect(c_max <= mf.get_double("c_limit"),
              strf("single constant across the grid: max ratio %.4f <= %s", c_max,
                   mf.get("c_limit").c_str()));
  gate.expect(fiber_max <= mf.get_double("fiber_limit"),
              strf("per-fiber ratio %.4f <= %s", fiber_max, mf.get("fiber_limit").c_str()));
  if (mf.get_int_or("include_subunit", 1) != 0) {
    const kdvw::lattice::CountReport r = kdvw::lattice::strichartz_count(
        mf.get_double("subunit_shell"), static_cast<int>(mf.get_int_or("subunit_lambda", 4)),
        window);
    emit(r);
    gate.expect(r.normalized_sup <= mf.get_double("subunit_limit"),
                strf("sub-unit shell stays order one: normalized sup %.4f <= %s", r.normalized_sup,
                     mf.get("subunit_limit").c_str()));
  }
  if (regression >= 0) {
    const long long want = mf.get_int_or("regression_n4_l1", 2);
    gate.expect(regression == want, strf("exhaustive N=4, lambda=1 regression count %lld == %lld",
                                         regression, want));
  }
  return gate.finish("count-strichartz");
}

// --------------------------------------------------------------- mu-measure

constexpr KeyDoc kMuKeys[] = {
    {"xis", "1,2,5"},
    {"lambdas", "1,8"},
    {"m_exp_lo", "4"},
    {"m_exp_hi", "12"},
    {"peak_limit", "0.5"},
    {"slope_limit", "-0.15"},
};

int cmd_mu_measure(const Manifest& mf) {
  const fs::path dir = prepare_run_dir(mf);
  const std::vector<double> xis = parse_list(mf.get("xis"), "xis");
  const std::vector<double> lambdas = parse_list(mf.get("lambdas"), "lambdas");
  const int lo = static_cast<int>(mf.get_int_or("m_exp_lo", 4));
  const int hi = static_cast<int>(mf.get_int_or("m_exp_hi", 12));
  kdvw::require(lo < hi, "mu-measure: m_exp_lo must be below m_exp_hi");

  CsvWriter csv(dir / "mu.csv",
                {"xi", "lambda", "shell", "candidate_intervals", "measure", "bound", "ratio"});
  CsvWriter fits(dir / "mufit.csv", {"xi", "lambda", "slope", "stderr", "peak", "tail_below_peak"});

  double peak = 0.0, worst_slope = -1e300;
  bool tails_fall = true;
  for (const double xi : xis) {
    for (const double lambda : lambdas) {
      std::vector<double> log_m, log_ratio, ratios;
      for (int e = lo; e <= hi; ++e) {
        const double shell = std::exp2(e);
        const kdvw::lattice::MuSetReport r =
            kdvw::lattice::mu_set_measure(xi, shell, static_cast<int>(lambda));
        csv.row_values({r.xi, static_cast<double>(r.lambda), r.shell,
                        static_cast<double>(r.candidate_intervals), r.measure, r.bound, r.ratio});
        ratios.push_back(r.ratio);
        if (r.ratio > 0.0) {
          log_m.push_back(std::log(shell));
          log_ratio.push_back(std::log(r.ratio));
        }
      }
      const double series_peak = *std::max_element(ratios.begin(), ratios.end());
      const bool tail_ok = ratios.back() <= series_peak;
      const LineFit fit = fit_line(log_m, log_ratio);
      fits.row_values({xi, lambda, fit.slope, fit.stderr_slope, series_peak, tail_ok ? 1.0 : 0.0});
      std::printf("xi=%-3s lambda=%-3s peak ratio %.4f, log-log slope %.4f +- %.4f\n",
                  kdvw::format_double(xi).c_str(), kdvw::format_double(lambda).c_str(),
                  series_peak, fit.slope, fit.stderr_slope);
      peak = std::max(peak, series_peak);
      worst_slope = std::max(worst_slope, fit.slope);
      tails_fall = tails_fall && tail_ok;
    }
  }

  Gate gate;
  gate.expect(peak < mf.get_double("peak_limit"),
              strf("normalized measure peak %.4f < %s", peak, mf.get("peak_limit").c_str()));
  gate.expect(worst_slope <= mf.get_double("slope_limit"),
              strf("every series decays: worst slope %.4f <= %s", worst_slope,
                   mf.get("slope_limit").c_str()));
  gate.expect(tails_fall, "every series ends at or below its peak (nonincreasing envelope)");
  return gate.finish("mu-measure");
}

// -------------------------------------------------------------- miura-check

constexpr KeyDoc kMiuraKeys[] = {
    {"flavor", "both"},  // defocusing | focusing | both
    {"period", "25.132741228718345"},  // 8*pi
    {"mode_count", "64"},
    {"datum_band", "5"},
    {"datum_s", "0.5"},
    {"amplitude", "0.03"},
    {"seed", "3"},
    {"dt", "1e-4"},
    {"t_end", "0.04"},
    {"strides", "8,4,2"},  // descending; the densest run is subsampled
    {"order_limit", "1.9"},
    {"residual_cap", "1e-6"},  // cap on the coarsest relative residual
};

int cmd_miura_check(const Manifest& mf) {
  const fs::path dir = prepare_run_dir(mf);
  const std::string flavor_key = mf.get("flavor");
  kdvw::require(flavor_key == "both" || flavor_key == "defocusing" || flavor_key == "focusing",
                "miura-check: flavor must be defocusing|focusing|both");
  std::vector<kdvw::miura::Flavor> flavors;
  if (flavor_key != "focusing") flavors.push_back(kdvw::miura::Flavor::defocusing);
  if (flavor_key != "defocusing") flavors.push_back(kdvw::miura::Flavor::focusing);

  const std::vector<double> strides_d = parse_list(mf.get("strides"), "strides");
  std::vector<int> strides;
  for (const double v : strides_d) strides.push_back(static_cast<int>(v));
  kdvw::require(strides.size() >= 2, "miura-check: need at least two strides");
  for (std::size_t i = 0; i + 1 < strides.size(); ++i) {
    kdvw::require(strides[i] > strides[i + 1] && strides[i] % strides.back() == 0,
                  "miura-check: strides must descend and be multiples of the finest");
  }

  const PeriodicGrid grid(mf.get_double("period"), static_cast<int>(mf.get_int_or("mode_count", 64)));
  CsvWriter csv(dir / "miura.csv",
                {"flavor", "stride", "sample_dt", "max_rel_residual", "order_vs_prev"});

  Gate gate;
  double min_order = 1e300, coarse_rel = 0.0;
  for (const kdvw::miura::Flavor flavor : flavors) {
    const bool defoc = flavor == kdvw::miura::Flavor::defocusing;
    kdvw::solver::EvolutionSpec spec;
    spec.equation = defoc ? kdvw::solver::Equation::mkdv_defocusing
                          : kdvw::solver::Equation::mkdv_focusing;
    spec.dt = mf.get_double("dt");
    spec.t_end = mf.get_double("t_end");
    spec.output_stride = strides.back();
    const SpectralField datum =
        datum_from(mf, grid, spec.equation, static_cast<std::uint64_t>(mf.get_int_or("seed", 3)));
    const kdvw::solver::Trajectory traj = kdvw::solver::solve(spec, grid, datum);

    double prev = 0.0;
    for (std::size_t si = 0; si < strides.size(); ++si) {
      const int step = strides[si] / strides.back();
      std::vector<SpectralField> sub;
      for (std::size_t i = 0; i < traj.samples.size(); i += step) sub.push_back(traj.samples[i]);
      const kdvw::miura::MiuraResidualReport rep =
          kdvw::miura::miura_residual(sub, spec.dt * strides[si], flavor);
      double order = std::nan("");
      if (si > 0) {
        order = std::log2(prev / rep.max_relative);
        min_order = std::min(min_order, order);
      } else {
        coarse_rel = std::max(coarse_rel, rep.max_relative);
      }
      csv.row({defoc ? "defocusing" : "focusing", std::to_string(strides[si]),
               kdvw::format_double(spec.dt * strides[si]), kdvw::format_double(rep.max_relative),
               si > 0 ? kdvw::format_double(order) : ""});
      std::printf("%-10s stride %-2d: max relative residual %.6e%s\n",
                  defoc ? "defocusing" : "focusing", strides[si], rep.max_relative,
                  si > 0 ? strf("  (order %.3f)", order).c_str() : "");
      prev = rep.max_relative;
    }
  }

  gate.expect(min_order >= mf.get_double("order_limit"),
              strf("image-equation residual converges at order %.3f >= %s", min_order,
                   mf.get("order_limit").c_str()));
  gate.expect(coarse_rel < mf.get_double("residual_cap"),
              strf("coarsest relative residual %.3e < %s", coarse_rel,
                   mf.get("residual_cap").c_str()));
  return gate.finish("miura-check");
}

// ------------------------------------------------------------------- verify

constexpr KeyDoc kVerifyKeys[] = {
    {"level", "quick"},  // quick | full (full is the acceptance configuration)
};

int cmd_verify(const Manifest& mf) {
  const std::string level_key = mf.get("level");
  kdvw::require(level_key == "quick" || level_key == "full", "verify: level must be quick|full");
  const auto level =
      level_key == "full" ? kdvw::verify::Level::full : kdvw::verify::Level::quick;

  const fs::path dir = prepare_run_dir(mf);
  const std::vector<kdvw::verify::CheckResult> results = kdvw::verify::run_all(level);

  CsvWriter csv(dir / "verify.csv", {"check", "pass", "measured", "threshold"});
  nlohmann::json summary;
  summary["kind"] = "verify";
  summary["format_version"] = 1;
  summary["level"] = level_key;
  summary["checks"] = nlohmann::json::array();
  bool all = true;
  for (const auto& r : results) {
    all = all && r.pass;
    csv.row({r.name, r.pass ? "1" : "0", kdvw::format_double(r.measured),
             kdvw::format_double(r.threshold)});
    summary["checks"].push_back({{"name", r.name},
                                 {"pass", r.pass},
                                 {"measured", r.measured},
                                 {"threshold", r.threshold},
                                 {"detail", r.detail}});
    std::printf("[%s] %-26s measured %.6g limit %.6g | %s\n", r.pass ? "PASS" : "FAIL",
                r.name.c_str(), r.measured, r.threshold, r.detail.c_str());
    std::fflush(stdout);
  }
  summary["all_pass"] = all;
  {
    std::ofstream out(dir / "summary.json");
    out << summary.dump(2) << "\n";
  }
  if (all) {
    std::printf("verify (%s): all %zu checks passed\n", level_key.c_str(), results.size());
  } else {
    std::printf("verify (%s): FAILURES among %zu checks\n", level_key.c_str(), results.size());
  }
  return all ? 0 : 1;
}

// -------------------------------------------------------------------- main

struct SubcommandSpec {
  const char* name;
  const char* blurb;
  std::span<const KeyDoc> schema;
  int (*runner)(const Manifest&);
};

constexpr SubcommandSpec kSubcommands[] = {
    {"solve",
     "Integrate one trajectory and persist it (meta.json, snapshots.bin, samples.csv)",
     kSolveKeys, cmd_solve},
    {"energy-track",
     "Track E2/E4 and the quintic flux along one run; check the derivative identity",
     kEnergyTrackKeys, cmd_energy_track},
    {"decay-scan",
     "Almost-conservation scan: sup|E4-E4(0)| versus cutoff N with a log-log slope fit",
     kDecayScanKeys, cmd_decay_scan},
    {"growth-track",
     "Track ||u(t)||_{H^s} over a declared budget and fit a tail power law",
     kGrowthTrackKeys, cmd_growth_track},
    {"bound-scan",
     "Stratified random scans of the pointwise M3/M4/M5 bounds and the m^2 difference control",
     kBoundScanKeys, cmd_bound_scan},
    {"count-strichartz",
     "Exact lattice counts behind the L4 Strichartz estimate, vs 1/sqrt(N)+1/lambda",
     kCountKeys, cmd_count_strichartz},
    {"mu-measure",
     "Exact measure of the resonant mu-sets, vs lambda * M^(3/4)",
     kMuKeys, cmd_mu_measure},
    {"miura-check",
     "Residual of the Riccati image equation along mKdV runs; stride-halving order",
     kMiuraKeys, cmd_miura_check},
    {"verify",
     "Run every module's invariant suite at --level quick|full; nonzero exit on any failure",
     kVerifyKeys, cmd_verify},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "kdvw — spectral workbench for the modified-energy hierarchy of periodic KdV\n"
      "Each subcommand reads a plain-text key=value manifest (--manifest FILE), applies\n"
      "--set key=value overrides, saves the resolved manifest next to its CSV outputs,\n"
      "and exits 0 only if every check the manifest declares passes."};
  app.require_subcommand(1);

  int rc = 0;
  struct Args {
    std::string manifest, out, level;
    std::vector<std::string> sets;
  };
  std::vector<std::shared_ptr<Args>> arg_blocks;

  for (const SubcommandSpec& sc : kSubcommands) {
    auto args = std::make_shared<Args>();
    arg_blocks.push_back(args);
    CLI::App* sub = app.add_subcommand(sc.name, sc.blurb);
    sub->add_option("--manifest", args->manifest, "manifest file (plain-text key=value)")
        ->check(CLI::ExistingFile);
    sub->add_option("--set", args->sets, "override a manifest key (repeatable), e.g. --set dt=1e-4");
    sub->add_option("--out", args->out, "run directory (default runs/<kind>-<manifest hash>)");
    if (std::string(sc.name) == "verify") {
      sub->add_option("--level", args->level, "quick|full (shorthand for --set level=...)");
    }
    std::string keys = "documented manifest keys (key defaults):";
    for (const KeyDoc& d : sc.schema) {
      keys += strf("\n  %-18s %s", d.key, d.def[0] == '\0' ? "(empty)" : d.def);
    }
    sub->footer(keys);
    const SubcommandSpec* spec = &sc;
    sub->callback([args, spec, &rc] {
      auto sets = args->sets;
      if (!args->level.empty()) sets.push_back("level=" + args->level);
      const Manifest mf =
          resolve_manifest(spec->name, spec->schema, args->manifest, sets, args->out);
      rc = spec->runner(mf);
    });
  }

  try {
    CLI11_PARSE(app, argc, argv);
  } catch (const contract_violation& err) {
    std::fprintf(stderr, "configuration error: %s\n", err.what());
    return 2;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 2;
  }
  return rc;
}
