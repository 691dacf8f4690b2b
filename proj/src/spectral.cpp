#include "kdvw/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstdio>
#include <map>
#include <mutex>

namespace kdvw {

std::string format_double(double v) {
  char buf[40];
  // integers print as integers (avoids 10 -> "1e+01" from the loop below)
  if (v == std::floor(v) && std::abs(v) < 9.007199254740992e15) {
    std::snprintf(buf, sizeof(buf), "%.0f", v);
    return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // prefer the lowest precision that round-trips
  for (int prec = 1; prec <= 16; ++prec) {
    char shorter[40];
    std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& file, const std::vector<std::string>& columns)
    : out_(file), column_count_(columns.size()) {
  if (!out_) throw numeric_error("CsvWriter: cannot open " + file.string());
  for (std::size_t i = 0; i < columns.size(); ++i) {
    out_ << columns[i] << (i + 1 < columns.size() ? "," : "\n");
  }
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  require(cells.size() == column_count_, "CsvWriter: cell count != column count");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    out_ << cells[i] << (i + 1 < cells.size() ? "," : "\n");
  }
}

void CsvWriter::row_values(std::span<const double> values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_double(v));
  row(cells);
}

void Manifest::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries.emplace_back(key, value);
}
void Manifest::set_double(const std::string& key, double value) { set(key, format_double(value)); }
void Manifest::set_int(const std::string& key, long long value) { set(key, std::to_string(value)); }

const std::string* Manifest::find(const std::string& key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return &v;
  }
  return nullptr;
}
std::string Manifest::get(const std::string& key) const {
  const std::string* v = find(key);
  require(v != nullptr, "manifest: missing key '" + key + "'");
  return *v;
}
std::string Manifest::get_or(const std::string& key, const std::string& fallback) const {
  const std::string* v = find(key);
  return v ? *v : fallback;
}
double Manifest::get_double(const std::string& key) const { return std::strtod(get(key).c_str(), nullptr); }
double Manifest::get_double_or(const std::string& key, double fallback) const {
  const std::string* v = find(key);
  return v ? std::strtod(v->c_str(), nullptr) : fallback;
}
long long Manifest::get_int_or(const std::string& key, long long fallback) const {
  const std::string* v = find(key);
  return v ? std::strtoll(v->c_str(), nullptr, 10) : fallback;
}

void Manifest::save(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw numeric_error("manifest: cannot open " + file.string());
  for (const auto& [k, v] : entries) out << k << "=" << v << "\n";
}

Manifest Manifest::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw numeric_error("manifest: cannot open " + file.string());
  Manifest m;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos && eq > first, "manifest: malformed line '" + line + "'");
    m.set(line.substr(first, eq - first), line.substr(eq + 1));
  }
  return m;
}

}  // namespace kdvw

namespace kdvw::spectral {

namespace {

// Cached FFTW plans per mode count. Plans are created with FFTW_UNALIGNED
// so fftw_execute_dft may run on arbitrary caller buffers; execution on
// distinct buffers is thread-safe, only the planner needs the mutex.
class FftEngine {
 public:
  static FftEngine& instance() {
    static FftEngine engine;
    return engine;
  }

  void forward(int n, const complexd* in, complexd* out) {
    execute(plans(n).first, in, out);
  }
  void backward(int n, const complexd* in, complexd* out) {
    execute(plans(n).second, in, out);
  }

 private:
  std::pair<fftw_plan, fftw_plan> plans(int n) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(n);
    if (it != cache_.end()) return it->second;
    std::vector<complexd> scratch_in(n), scratch_out(n);
    auto* si = reinterpret_cast<fftw_complex*>(scratch_in.data());
    auto* so = reinterpret_cast<fftw_complex*>(scratch_out.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan fwd = fftw_plan_dft_1d(n, si, so, FFTW_FORWARD, flags);
    fftw_plan bwd = fftw_plan_dft_1d(n, si, so, FFTW_BACKWARD, flags);
    if (fwd == nullptr || bwd == nullptr) throw numeric_error("FFTW plan creation failed");
    cache_[n] = {fwd, bwd};
    return cache_[n];
  }

  static void execute(fftw_plan plan, const complexd* in, complexd* out) {
    fftw_execute_dft(plan,
                     reinterpret_cast<fftw_complex*>(const_cast<complexd*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
  }

  std::mutex mutex_;
  std::map<int, std::pair<fftw_plan, fftw_plan>> cache_;
};

}  // namespace

PeriodicGrid::PeriodicGrid(double period_, int mode_count_)
    : period(period_), mode_count(mode_count_) {
  require(period > 0.0, "PeriodicGrid: period must be positive");
  require(mode_count >= 4 && mode_count % 2 == 0, "PeriodicGrid: mode count must be even and >= 4");
}

void SpectralField::hermitianize() {
  coeffs_[grid_.nyquist_slot()] = complexd{0.0, 0.0};
  coeffs_[0] = complexd{coeffs_[0].real(), 0.0};
  for (int j = 1; j < grid_.mode_count / 2; ++j) {
    const complexd avg = 0.5 * (coeffs_[grid_.slot(j)] + std::conj(coeffs_[grid_.slot(-j)]));
    coeffs_[grid_.slot(j)] = avg;
    coeffs_[grid_.slot(-j)] = std::conj(avg);
  }
  real_valued_ = true;
}

bool SpectralField::all_finite() const {
  return std::all_of(coeffs_.begin(), coeffs_.end(), [](const complexd& c) {
    return std::isfinite(c.real()) && std::isfinite(c.imag());
  });
}

SpectralField from_complex_samples(const PeriodicGrid& grid, std::span<const complexd> samples) {
  require(static_cast<int>(samples.size()) == grid.mode_count,
          "from_samples: sample count does not match grid mode count");
  SpectralField f(grid, /*real_valued=*/false);
  FftEngine::instance().forward(grid.mode_count, samples.data(), f.raw().data());
  const double dx = grid.dx();
  for (auto& c : f.raw()) c *= dx;
  f.raw()[grid.nyquist_slot()] = complexd{0.0, 0.0};
  return f;
}

SpectralField from_real_samples(const PeriodicGrid& grid, std::span<const double> samples) {
  require(static_cast<int>(samples.size()) == grid.mode_count,
          "from_samples: sample count does not match grid mode count");
  std::vector<complexd> buf(samples.begin(), samples.end());
  SpectralField f = from_complex_samples(grid, buf);
  f.hermitianize();
  return f;
}

std::vector<complexd> to_samples(const SpectralField& f) {
  std::vector<complexd> out(f.mode_count());
  FftEngine::instance().backward(f.mode_count(), f.raw().data(), out.data());
  const double inv_period = 1.0 / f.period();
  for (auto& c : out) c *= inv_period;
  return out;
}

std::vector<double> to_real_samples(const SpectralField& f) {
  require(f.is_real_valued(), "to_real_samples: field is not flagged real-valued");
  std::vector<complexd> buf = to_samples(f);
  std::vector<double> out(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) out[i] = buf[i].real();
  return out;
}

double sobolev_norm(const SpectralField& f, double s) {
  const PeriodicGrid& g = f.grid();
  double acc = 0.0;
  for (int slot = 0; slot < g.mode_count; ++slot) {
    const double xi = g.frequency(g.mode_at_slot(slot));
    acc += std::pow(bracket(xi), 2.0 * s) * std::norm(f.raw()[slot]);
  }
  return std::sqrt(acc / g.period);
}

complexd inner_product(const SpectralField& f, const SpectralField& g) {
  require(f.grid() == g.grid(), "inner_product: grid mismatch");
  complexd acc{0.0, 0.0};
  for (int slot = 0; slot < f.mode_count(); ++slot) {
    acc += f.raw()[slot] * std::conj(g.raw()[slot]);
  }
  return acc / f.period();
}

SpectralField airy_propagate(const SpectralField& f, double t) {
  SpectralField out = f;
  const PeriodicGrid& g = f.grid();
  for (int slot = 0; slot < g.mode_count; ++slot) {
    const double xi = g.frequency(g.mode_at_slot(slot));
    out.raw()[slot] *= std::polar(1.0, xi * xi * xi * t);
  }
  out.raw()[g.nyquist_slot()] = complexd{0.0, 0.0};
  return out;
}

SpectralField derivative(const SpectralField& f) {
  SpectralField out = f;
  const PeriodicGrid& g = f.grid();
  for (int slot = 0; slot < g.mode_count; ++slot) {
    const double xi = g.frequency(g.mode_at_slot(slot));
    out.raw()[slot] *= complexd{0.0, xi};
  }
  out.raw()[g.nyquist_slot()] = complexd{0.0, 0.0};
  return out;
}

SpectralField dealias(const SpectralField& f, int max_mode) {
  require(max_mode >= 0, "dealias: negative band limit");
  SpectralField out = f;
  const PeriodicGrid& g = f.grid();
  for (int slot = 0; slot < g.mode_count; ++slot) {
    if (std::abs(g.mode_at_slot(slot)) > max_mode) out.raw()[slot] = complexd{0.0, 0.0};
  }
  out.raw()[g.nyquist_slot()] = complexd{0.0, 0.0};
  return out;
}

int support_mode_limit(const SpectralField& f) {
  int limit = 0;
  const PeriodicGrid& g = f.grid();
  for (int slot = 0; slot < g.mode_count; ++slot) {
    const int mode = g.mode_at_slot(slot);
    if (f.raw()[slot] != complexd{0.0, 0.0}) limit = std::max(limit, std::abs(mode));
  }
  return limit;
}

SpectralField upsample(const SpectralField& f, int new_mode_count) {
  require(new_mode_count >= f.mode_count(), "upsample: target grid is coarser than the source");
  const PeriodicGrid fine(f.period(), new_mode_count);
  SpectralField out(fine, f.is_real_valued());
  for (int mode = -(f.mode_count() / 2 - 1); mode <= f.mode_count() / 2 - 1; ++mode) {
    out.set_coeff(mode, f.coeff(mode));
  }
  return out;
}

EnergyMultiplier::EnergyMultiplier(double cutoff_, double exponent_, Bridge bridge_)
    : cutoff(cutoff_), exponent(exponent_), bridge(bridge_) {
  require(std::isinf(cutoff) || cutoff >= 1.0, "EnergyMultiplier: cutoff must be >= 1 (or infinite)");
  require(exponent > -1.5 && exponent < 1.0, "EnergyMultiplier: exponent outside (-3/2, 1)");
}

double EnergyMultiplier::operator()(double xi) const {
  if (is_identity()) return 1.0;
  const double a = std::abs(xi);
  if (a <= cutoff) return 1.0;
  if (bridge == Bridge::sharp || a >= 2.0 * cutoff) {
    return std::pow(a / cutoff, exponent);
  }
  // C^1 bridge: log m = s*log(2) * t^2 (2 - t) with t = log2(|xi|/N) in (0,1);
  // matches value and first derivative of both regimes at the junctions.
  const double t = std::log2(a / cutoff);
  const double log2v = 0.6931471805599453094;
  return std::exp(exponent * log2v * t * t * (2.0 - t));
}

long double EnergyMultiplier::value_ld(long double xi) const {
  if (is_identity()) return 1.0L;
  const long double n = cutoff;
  const long double a = std::abs(xi);
  if (a <= n) return 1.0L;
  if (bridge == Bridge::sharp || a >= 2.0L * n) {
    return std::pow(a / n, static_cast<long double>(exponent));
  }
  const long double t = std::log2(a / n);
  const long double log2v = 0.693147180559945309417232121458L;
  return std::exp(exponent * log2v * t * t * (2.0L - t));
}

SpectralField apply_I(const SpectralField& f, const EnergyMultiplier& m) {
  SpectralField out = f;
  const PeriodicGrid& g = f.grid();
  for (int slot = 0; slot < g.mode_count; ++slot) {
    const double xi = g.frequency(g.mode_at_slot(slot));
    out.raw()[slot] *= m(xi);
  }
  out.raw()[g.nyquist_slot()] = complexd{0.0, 0.0};
  return out;
}

}  // namespace kdvw::spectral
