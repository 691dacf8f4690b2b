#pragma once

// Shared plumbing: error types, deterministic Gaussian source, pairwise
// deterministic reduction, and CSV/number formatting helpers.

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kdvw {

using complexd = std::complex<double>;

/// Violation of a documented precondition or invariant.
class contract_violation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Runtime numeric failure (blow-up, non-finite data, resolution loss).
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw contract_violation(msg);
}

/// Deterministic standard-normal stream: mt19937_64 + explicit Box-Muller.
/// std::normal_distribution is implementation-defined, so it is avoided;
/// this sequence is identical on every conforming platform.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

  double uniform01() {  // value in (0, 1]
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Fixed-shape pairwise summation over a partials array. The combination
/// order depends only on the array length, never on thread count, so a
/// parallel evaluation that fills `partials` by fixed blocks reduces to a
/// bit-identical result regardless of how many workers filled it.
template <typename T>
T pairwise_tree_sum(std::vector<T>& partials) {
  if (partials.empty()) return T{};
  const std::size_t n = partials.size();
  for (std::size_t step = 1; step < n; step *= 2) {
    for (std::size_t i = 0; i + step < n; i += 2 * step) {
      partials[i] += partials[i + step];
    }
  }
  return partials[0];
}

/// Shortest exact decimal for a double (round-trips via strtod).
std::string format_double(double v);

/// Minimal CSV emitter: header row at construction, then data rows.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& file, const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& cells);
  void row_values(std::span<const double> values);
  void row_values(std::initializer_list<double> values) {
    row_values(std::span<const double>(values.begin(), values.size()));
  }

 private:
  std::ofstream out_;
  std::size_t column_count_;
};

/// Plain-text key=value manifest (one pair per line, '#' comments).
struct Manifest {
  std::vector<std::pair<std::string, std::string>> entries;

  void set(const std::string& key, const std::string& value);
  void set_double(const std::string& key, double value);
  void set_int(const std::string& key, long long value);
  [[nodiscard]] const std::string* find(const std::string& key) const;
  [[nodiscard]] std::string get(const std::string& key) const;  // throws if missing
  [[nodiscard]] std::string get_or(const std::string& key, const std::string& fallback) const;
  [[nodiscard]] double get_double(const std::string& key) const;
  [[nodiscard]] double get_double_or(const std::string& key, double fallback) const;
  [[nodiscard]] long long get_int_or(const std::string& key, long long fallback) const;

  void save(const std::filesystem::path& file) const;
  static Manifest load(const std::filesystem::path& file);
};

}  // namespace kdvw
