// Quadratic binary models: QUBO over x in {0,1}^n and the equivalent Ising
// form over s in {-1,+1}^n, related by x = (s + 1) / 2.
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace satin {

/// E(x) = sum_{i<=j} Q_ij x_i x_j + offset, stored upper-triangular.
struct Qubo {
  std::size_t num_vars = 0;
  std::map<std::pair<std::size_t, std::size_t>, double> terms;
  double offset = 0;

  void add(std::size_t i, std::size_t j, double c) {
    if (c == 0) return;
    if (i > j) std::swap(i, j);
    if (j >= num_vars) throw std::out_of_range("qubo term index out of range");
    terms[{i, j}] += c;
  }

  double energy(std::span<const std::uint8_t> x) const {
    if (x.size() != num_vars) throw std::invalid_argument("qubo energy: bit count mismatch");
    double e = offset;
    for (const auto& [ij, c] : terms)
      if (x[ij.first] && x[ij.second]) e += c;
    return e;
  }

  double max_abs_coefficient() const {
    double m = 0;
    for (const auto& [ij, c] : terms) m = std::max(m, std::abs(c));
    return m;
  }

  bool operator==(const Qubo&) const = default;
};

/// E(s) = sum_i h_i s_i + sum_{i<j} J_ij s_i s_j + offset.
struct IsingModel {
  std::vector<double> h;
  std::map<std::pair<std::size_t, std::size_t>, double> J;
  double offset = 0;

  double energy(std::span<const std::int8_t> s) const {
    if (s.size() != h.size()) throw std::invalid_argument("ising energy: spin count mismatch");
    double e = offset;
    for (std::size_t i = 0; i < h.size(); ++i) e += h[i] * s[i];
    for (const auto& [ij, c] : J) e += c * s[ij.first] * s[ij.second];
    return e;
  }
};

inline IsingModel qubo_to_ising(const Qubo& q) {
  IsingModel m;
  m.h.assign(q.num_vars, 0.0);
  m.offset = q.offset;
  for (const auto& [ij, c] : q.terms) {
    auto [i, j] = ij;
    if (i == j) {
      // c x = c (s + 1) / 2
      m.h[i] += c / 2;
      m.offset += c / 2;
    } else {
      // c x_i x_j = c (s_i s_j + s_i + s_j + 1) / 4
      m.J[{i, j}] += c / 4;
      m.h[i] += c / 4;
      m.h[j] += c / 4;
      m.offset += c / 4;
    }
  }
  return m;
}

inline Qubo ising_to_qubo(const IsingModel& m) {
  Qubo q;
  q.num_vars = m.h.size();
  q.offset = m.offset;
  // s = 2x - 1
  for (std::size_t i = 0; i < m.h.size(); ++i) {
    q.add(i, i, 2 * m.h[i]);
    q.offset -= m.h[i];
  }
  for (const auto& [ij, c] : m.J) {
    auto [i, j] = ij;
    q.add(i, j, 4 * c);
    q.add(i, i, -2 * c);
    q.add(j, j, -2 * c);
    q.offset += c;
  }
  return q;
}

inline std::vector<std::int8_t> bits_to_spins(std::span<const std::uint8_t> x) {
  std::vector<std::int8_t> s(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) s[i] = x[i] ? 1 : -1;
  return s;
}

}  // namespace satin
