#include "kdvw/solver.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <utility>

namespace kdvw::solver {

namespace {

using spectral::PeriodicGrid;
using spectral::SpectralField;

/// Fourier-side nonlinear term of the evolution. The product is formed on
/// the collocation grid, transformed back, multiplied by the derivative
/// symbol and truncated to the dealias band in one pass (the symbol table
/// is zero outside the band and at the Nyquist slot).
class NonlinearTerm {
 public:
  NonlinearTerm(Equation eq, const PeriodicGrid& grid, int keep_mode, bool disabled)
      : grid_(grid),
        real_(is_real_equation(eq)),
        cubic_(has_cubic_nonlinearity(eq)),
        disabled_(disabled),
        symbol_(static_cast<std::size_t>(grid.mode_count), complexd{0.0, 0.0}) {
    for (int n = -keep_mode; n <= keep_mode; ++n) {
      if (n == 0) continue;
      const double xi = grid.frequency(n);
      complexd s;
      switch (eq) {
        case Equation::kdv:
          s = complexd{0.0, -0.5 * xi};  // -(i xi / 2) (u^2)^
          break;
        case Equation::mkdv_focusing:
          s = complexd{0.0, -2.0 * xi};  // -2 i xi (u^3)^
          break;
        case Equation::mkdv_defocusing:
          s = complexd{0.0, 2.0 * xi};  // +2 i xi (u^3)^
          break;
        case Equation::kdv_complex:
          s = complexd{-3.0 * xi, 0.0};  // -3 xi (v^2)^
          break;
      }
      symbol_[static_cast<std::size_t>(grid.slot(n))] = s;
    }
  }

  [[nodiscard]] SpectralField operator()(const SpectralField& u) const {
    if (disabled_) return SpectralField(grid_, real_);
    SpectralField out(grid_, real_);
    if (real_) {
      std::vector<double> s = spectral::to_real_samples(u);
      if (cubic_) {
        for (double& v : s) v = v * v * v;
      } else {
        for (double& v : s) v = v * v;
      }
      out = spectral::from_real_samples(grid_, s);
    } else {
      std::vector<complexd> s = spectral::to_samples(u);
      for (complexd& v : s) v = v * v;
      out = spectral::from_complex_samples(grid_, s);
    }
    auto coeffs = out.raw();
    for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] *= symbol_[i];
    return out;
  }

 private:
  PeriodicGrid grid_;
  bool real_;
  bool cubic_;
  bool disabled_;
  std::vector<complexd> symbol_;
};

/// e^{i xi^3 dt/2} per slot, built with the exact conjugate pairing
/// E(-xi) = conj(E(xi)) so Hermitian states stay Hermitian bitwise.
std::vector<complexd> half_step_phases(const PeriodicGrid& grid, double dt) {
  std::vector<complexd> E(static_cast<std::size_t>(grid.mode_count), complexd{1.0, 0.0});
  for (int n = 0; n < grid.mode_count / 2; ++n) {
    const double xi = grid.frequency(n);
    const complexd e = std::exp(complexd{0.0, xi * xi * xi * (0.5 * dt)});
    E[static_cast<std::size_t>(grid.slot(n))] = e;
    if (n > 0) E[static_cast<std::size_t>(grid.slot(-n))] = std::conj(e);
  }
  return E;  // Nyquist slot keeps the inert factor 1 (its coefficient is 0)
}

/// One integrating-factor RK4 step: classical RK4 applied to the system
/// obtained by removing the Airy phase with e^{-i xi^3 t}, written back in
/// the original variables (E is the half-step phase, E2 = E * E).
SpectralField ifrk4_step(const SpectralField& u, const NonlinearTerm& nl,
                         const std::vector<complexd>& E, const std::vector<complexd>& E2,
                         double dt) {
  const auto uc = u.raw();
  const std::size_t n = uc.size();
  const double h = 0.5 * dt;

  const SpectralField a = nl(u);

  SpectralField s1(u.grid(), u.is_real_valued());
  for (std::size_t i = 0; i < n; ++i) s1.raw()[i] = E[i] * (uc[i] + h * a.raw()[i]);
  const SpectralField b = nl(s1);

  SpectralField s2(u.grid(), u.is_real_valued());
  for (std::size_t i = 0; i < n; ++i) s2.raw()[i] = E[i] * uc[i] + h * b.raw()[i];
  const SpectralField c = nl(s2);

  SpectralField s3(u.grid(), u.is_real_valued());
  for (std::size_t i = 0; i < n; ++i) s3.raw()[i] = E2[i] * uc[i] + dt * (E[i] * c.raw()[i]);
  const SpectralField d = nl(s3);

  SpectralField next(u.grid(), u.is_real_valued());
  const double w = dt / 6.0;
  for (std::size_t i = 0; i < n; ++i) {
    next.raw()[i] = E2[i] * uc[i] +
                    w * (E2[i] * a.raw()[i] + 2.0 * (E[i] * (b.raw()[i] + c.raw()[i])) +
                         d.raw()[i]);
  }
  next.project_mean_zero();  // the symbol keeps the mean slot at exactly 0
  return next;
}

template <class T>
void write_pod(std::string& out, const T& v) {
  const char* p = reinterpret_cast<const char*>(&v);
  out.append(p, sizeof(T));
}

template <class T>
T read_pod(const std::string& buf, std::size_t& offset) {
  require(offset + sizeof(T) <= buf.size(), "load_run: snapshot file truncated");
  T v;
  std::memcpy(&v, buf.data() + offset, sizeof(T));
  offset += sizeof(T);
  return v;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

std::string_view equation_name(Equation eq) {
  switch (eq) {
    case Equation::kdv: return "kdv";
    case Equation::mkdv_focusing: return "mkdv-focusing";
    case Equation::mkdv_defocusing: return "mkdv-defocusing";
    case Equation::kdv_complex: return "kdv-complex";
  }
  throw contract_violation("equation_name: unknown equation");
}

Equation equation_from_name(std::string_view name) {
  if (name == "kdv") return Equation::kdv;
  if (name == "mkdv-focusing") return Equation::mkdv_focusing;
  if (name == "mkdv-defocusing") return Equation::mkdv_defocusing;
  if (name == "kdv-complex") return Equation::kdv_complex;
  throw contract_violation(
      "equation_from_name: expected one of kdv, mkdv-focusing, mkdv-defocusing, kdv-complex");
}

bool has_cubic_nonlinearity(Equation eq) {
  return eq == Equation::mkdv_focusing || eq == Equation::mkdv_defocusing;
}

bool is_real_equation(Equation eq) { return eq != Equation::kdv_complex; }

int dealias_mode_limit(Equation eq, int mode_count) {
  require(mode_count >= 4, "dealias_mode_limit: grid too small");
  return has_cubic_nonlinearity(eq) ? (mode_count - 1) / 4 : (mode_count - 1) / 3;
}

Trajectory solve(const EvolutionSpec& spec, const PeriodicGrid& grid,
                 const SpectralField& datum) {
  require(datum.grid() == grid, "solve: datum grid does not match");
  require(spec.dt > 0.0 && std::isfinite(spec.dt), "solve: dt must be positive");
  require(spec.t_end >= 0.0 && std::isfinite(spec.t_end), "solve: t_end must be nonnegative");
  require(spec.output_stride >= 1, "solve: output_stride must be at least 1");
  require(spec.blowup_threshold > 0.0, "solve: blowup_threshold must be positive");
  require(datum.is_mean_zero(), "solve: datum must be mean-zero");
  if (is_real_equation(spec.equation)) {
    require(datum.is_real_valued(), "solve: this equation evolves real-valued data");
  }

  const std::int64_t n_steps = std::llround(spec.t_end / spec.dt);
  require(std::abs(static_cast<double>(n_steps) * spec.dt - spec.t_end) <=
              1e-9 * std::max(spec.dt, spec.t_end),
          "solve: t_end must be an integer number of steps");
  require(n_steps % spec.output_stride == 0,
          "solve: step count must be divisible by output_stride");

  const int keep = dealias_mode_limit(spec.equation, grid.mode_count);
  require(spectral::support_mode_limit(datum) <= keep,
          "solve: datum has modes outside the dealias band");

  Trajectory traj{spec, grid, keep, {}, {}, {}};
  const std::size_t sample_count =
      static_cast<std::size_t>(n_steps / spec.output_stride) + 1;
  traj.times.reserve(sample_count);
  traj.samples.reserve(sample_count);

  SpectralField state(grid, is_real_equation(spec.equation));
  std::copy(datum.raw().begin(), datum.raw().end(), state.raw().begin());

  const NonlinearTerm nl(spec.equation, grid, keep, spec.nonlinearity_off);
  const std::vector<complexd> E = half_step_phases(grid, spec.dt);
  std::vector<complexd> E2(E.size());
  for (std::size_t i = 0; i < E.size(); ++i) E2[i] = E[i] * E[i];

  traj.diag.steps = n_steps;
  traj.diag.l2_initial = spectral::l2_norm(state);
  traj.diag.l2_max = traj.diag.l2_initial;
  traj.times.push_back(0.0);
  traj.samples.push_back(state);

  for (std::int64_t k = 1; k <= n_steps; ++k) {
    state = ifrk4_step(state, nl, E, E2, spec.dt);
    const double l2 = spectral::l2_norm(state);
    // negated comparison also trips on NaN coefficients
    if (!(l2 <= spec.blowup_threshold)) {
      throw numeric_error("solve: blow-up guard tripped at t = " +
                          format_double(static_cast<double>(k) * spec.dt) +
                          " (L2 = " + format_double(l2) + ")");
    }
    traj.diag.l2_max = std::max(traj.diag.l2_max, l2);
    if (k % spec.output_stride == 0) {
      traj.times.push_back(static_cast<double>(k) * spec.dt);
      traj.samples.push_back(state);
    }
    traj.diag.l2_final = l2;
  }
  if (n_steps == 0) traj.diag.l2_final = traj.diag.l2_initial;
  return traj;
}

SpectralField rescale(const SpectralField& u, double c) {
  require(c > 0.0 && std::isfinite(c), "rescale: factor must be positive and finite");
  const PeriodicGrid stretched(u.period() * c, u.mode_count());
  SpectralField v(stretched, u.is_real_valued());
  const double inv = 1.0 / c;
  for (std::size_t i = 0; i < v.raw().size(); ++i) v.raw()[i] = u.raw()[i] * inv;
  return v;
}

SpectralField generate_datum(const PeriodicGrid& grid, int band_mode_limit,
                             double sobolev_exponent, double amplitude, std::uint64_t seed) {
  require(band_mode_limit >= 1 && band_mode_limit <= grid.max_mode(),
          "generate_datum: band must lie inside the retained modes");
  require(amplitude > 0.0 && std::isfinite(amplitude),
          "generate_datum: amplitude must be positive");

  GaussianSource noise(seed);
  SpectralField f(grid, true);
  for (int n = 1; n <= band_mode_limit; ++n) {
    const double re = noise.next();
    const double im = noise.next();
    const double shape =
        std::pow(spectral::bracket(grid.frequency(n)), -(sobolev_exponent + 0.5));
    const complexd coeff = complexd{re, im} * shape;
    f.set_coeff(n, coeff);
    f.set_coeff(-n, std::conj(coeff));
  }
  const double norm = spectral::sobolev_norm(f, sobolev_exponent);
  require(norm > 0.0, "generate_datum: degenerate draw");
  const double factor = amplitude / norm;
  for (complexd& coeff : f.raw()) coeff *= factor;
  return f;
}

void save_run(const std::filesystem::path& dir, const Trajectory& traj) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  require(traj.samples.size() == traj.times.size(), "save_run: sample/time count mismatch");

  std::string payload;
  payload.reserve(16 + traj.samples.size() * static_cast<std::size_t>(traj.grid.mode_count) * 16);
  write_pod(payload, traj.grid.period);
  write_pod(payload, static_cast<std::uint32_t>(traj.grid.mode_count));
  write_pod(payload, static_cast<std::uint32_t>(traj.samples.size()));
  for (const SpectralField& f : traj.samples) {
    for (const complexd& coeff : f.raw()) {
      write_pod(payload, coeff.real());
      write_pod(payload, coeff.imag());
    }
  }
  {
    std::ofstream bin(dir / "snapshots.bin", std::ios::binary | std::ios::trunc);
    require(bin.good(), "save_run: cannot open snapshots.bin");
    bin.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    require(bin.good(), "save_run: write to snapshots.bin failed");
  }

  nlohmann::json meta;
  meta["format"] = 1;
  meta["equation"] = std::string(equation_name(traj.spec.equation));
  meta["dt"] = traj.spec.dt;
  meta["t_end"] = traj.spec.t_end;
  meta["output_stride"] = traj.spec.output_stride;
  meta["blowup_threshold"] = traj.spec.blowup_threshold;
  meta["nonlinearity_off"] = traj.spec.nonlinearity_off;
  meta["period"] = traj.grid.period;
  meta["mode_count"] = traj.grid.mode_count;
  meta["band_mode_limit"] = traj.band_mode_limit;
  meta["real_valued"] =
      traj.samples.empty() ? is_real_equation(traj.spec.equation) : traj.samples[0].is_real_valued();
  meta["times"] = traj.times;
  meta["snapshot_fnv1a"] = fnv1a(payload);
  meta["diag"] = {{"steps", traj.diag.steps},
                  {"l2_initial", traj.diag.l2_initial},
                  {"l2_final", traj.diag.l2_final},
                  {"l2_max", traj.diag.l2_max}};
  {
    std::ofstream out(dir / "meta.json");
    require(out.good(), "save_run: cannot open meta.json");
    out << meta.dump(2) << '\n';
    require(out.good(), "save_run: write to meta.json failed");
  }

  CsvWriter csv(dir / "samples.csv", {"index", "t", "l2"});
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    csv.row_values({static_cast<double>(i), traj.times[i], spectral::l2_norm(traj.samples[i])});
  }
}

Trajectory load_run(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::ifstream meta_in(dir / "meta.json");
  require(meta_in.good(), "load_run: cannot open meta.json");
  const nlohmann::json meta = nlohmann::json::parse(meta_in);
  require(meta.at("format").get<int>() == 1, "load_run: unknown run format");

  EvolutionSpec spec;
  spec.equation = equation_from_name(meta.at("equation").get<std::string>());
  spec.dt = meta.at("dt").get<double>();
  spec.t_end = meta.at("t_end").get<double>();
  spec.output_stride = meta.at("output_stride").get<int>();
  spec.blowup_threshold = meta.at("blowup_threshold").get<double>();
  spec.nonlinearity_off = meta.at("nonlinearity_off").get<bool>();

  const PeriodicGrid grid(meta.at("period").get<double>(), meta.at("mode_count").get<int>());
  Trajectory traj{spec, grid, meta.at("band_mode_limit").get<int>(), {}, {}, {}};
  traj.times = meta.at("times").get<std::vector<double>>();
  traj.diag.steps = meta.at("diag").at("steps").get<std::int64_t>();
  traj.diag.l2_initial = meta.at("diag").at("l2_initial").get<double>();
  traj.diag.l2_final = meta.at("diag").at("l2_final").get<double>();
  traj.diag.l2_max = meta.at("diag").at("l2_max").get<double>();

  std::ifstream bin(dir / "snapshots.bin", std::ios::binary);
  require(bin.good(), "load_run: cannot open snapshots.bin");
  std::string payload((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
  if (fnv1a(payload) != meta.at("snapshot_fnv1a").get<std::uint64_t>()) {
    throw numeric_error("load_run: snapshot checksum mismatch (file corrupted or edited)");
  }

  std::size_t offset = 0;
  const double period = read_pod<double>(payload, offset);
  const auto mode_count = read_pod<std::uint32_t>(payload, offset);
  const auto count = read_pod<std::uint32_t>(payload, offset);
  require(period == grid.period && static_cast<int>(mode_count) == grid.mode_count,
          "load_run: snapshot header disagrees with meta.json");
  require(count == traj.times.size(), "load_run: snapshot count disagrees with meta.json");

  const bool real_valued = meta.at("real_valued").get<bool>();
  traj.samples.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    SpectralField f(grid, real_valued);
    for (complexd& coeff : f.raw()) {
      const double re = read_pod<double>(payload, offset);
      const double im = read_pod<double>(payload, offset);
      coeff = complexd{re, im};
    }
    traj.samples.push_back(std::move(f));
  }
  require(offset == payload.size(), "load_run: trailing bytes in snapshots.bin");
  return traj;
}

}  // namespace kdvw::solver
