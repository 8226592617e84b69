// Binary decisions (association, onboard compute) and continuous allocations.
#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <vector>

#include "satin/common.hpp"

namespace satin {

/// One user's decision: the AP it associates with and whether that AP
/// computes the task onboard. `ap < 0` means the user is not served this slot.
struct Choice {
  int ap = -1;
  bool local = false;
  auto operator<=>(const Choice&) const = default;
};

/// alpha[u][m] = 1 iff user u associates with AP m; z[u][m] = 1 iff AP m
/// processes u's task onboard (otherwise the task is relayed to the cloud).
struct Assignment {
  Grid<std::uint8_t> alpha;
  Grid<std::uint8_t> z;

  Assignment() = default;
  Assignment(std::size_t users, std::size_t aps) : alpha(users, aps, 0), z(users, aps, 0) {}

  std::size_t users() const { return alpha.rows(); }
  std::size_t aps() const { return alpha.cols(); }

  std::optional<std::size_t> ap_of(std::size_t u) const {
    for (std::size_t m = 0; m < aps(); ++m)
      if (alpha(u, m)) return m;
    return std::nullopt;
  }

  Choice choice(std::size_t u) const {
    for (std::size_t m = 0; m < aps(); ++m)
      if (alpha(u, m)) return {static_cast<int>(m), z(u, m) != 0};
    return {};
  }

  static Assignment from_choices(const std::vector<Choice>& choices, std::size_t aps) {
    Assignment a(choices.size(), aps);
    for (std::size_t u = 0; u < choices.size(); ++u) {
      if (choices[u].ap < 0) continue;
      a.alpha(u, static_cast<std::size_t>(choices[u].ap)) = 1;
      a.z(u, static_cast<std::size_t>(choices[u].ap)) = choices[u].local ? 1 : 0;
    }
    return a;
  }

  std::vector<Choice> choices() const {
    std::vector<Choice> out(users());
    for (std::size_t u = 0; u < users(); ++u) out[u] = choice(u);
    return out;
  }

  bool operator==(const Assignment& o) const { return alpha == o.alpha && z == o.z; }
  bool operator<(const Assignment& o) const {
    if (alpha.raw() != o.alpha.raw()) return alpha.raw() < o.alpha.raw();
    return z.raw() < o.z.raw();
  }
};

/// Continuous decisions: bandwidth fractions, CPU frequencies and the four
/// delay families (uplink, onboard compute, backhaul relay, cloud compute).
struct Allocation {
  Grid<double> beta;
  Grid<double> f;
  Grid<double> tau_tx;
  Grid<double> tau_cp;
  Grid<double> tau_txc;
  Grid<double> tau_cpc;

  Allocation() = default;
  Allocation(std::size_t users, std::size_t aps)
      : beta(users, aps), f(users, aps), tau_tx(users, aps), tau_cp(users, aps),
        tau_txc(users, aps), tau_cpc(users, aps) {}

  std::size_t users() const { return beta.rows(); }
  std::size_t aps() const { return beta.cols(); }
};

}  // namespace satin
