// Shared value types, unit conversions and error types.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace satin {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Dense row-major matrix indexed [user][ap].
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  const std::vector<T>& raw() const { return data_; }
  std::vector<T>& raw() { return data_; }

  bool operator==(const Grid&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

// dB helpers. All dB/dBm quantities are converted once, at ingestion.
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kEarthRadius = 6371e3;

// Error types. Infeasibility of a sampled bitstring is data, not an error;
// these are raised only for contract violations.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidAllocation : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InfeasibleAssignment : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PenaltyOverflow : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoFeasibleSample : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SizeCapExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// SplitMix64 finalizer; used to derive independent rng streams.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return mix_seed(mix_seed(mix_seed(seed) ^ a) ^ (b * 0x632be59bd9b4e019ULL));
}

inline bool close_rel(double a, double b, double rel, double abs_floor = 1e-300) {
  return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), abs_floor});
}

}  // namespace satin
