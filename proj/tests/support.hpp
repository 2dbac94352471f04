#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "mgsched/grid_model.hpp"
#include "mgsched/power_flow.hpp"
#include "mgsched/random.hpp"

namespace support {

using mgsched::NetworkCase;
using Complex = std::complex<double>;

// Network with only buses and lines; bus 1 is the slack.
inline NetworkCase bare_case(std::size_t buses, double base_kv = 12.66, double base_mva = 10.0) {
  NetworkCase c;
  for (std::size_t i = 0; i < buses; ++i) c.buses.push_back({static_cast<int>(i + 1), 0.95, 1.05, 0.0, 0.0});
  c.grid_tie = {1, -1e6, 1e6};
  c.base_kv = base_kv;
  c.base_mva = base_mva;
  return c;
}

// Random tree over 5..33 buses: each bus hangs off an earlier one. Loads are
// drawn in [0, 500] kW with a lagging power factor.
inline NetworkCase random_radial(std::uint64_t seed) {
  mgsched::Rng rng(seed);
  const std::size_t n = 5 + rng.index(29);
  NetworkCase c = bare_case(n);
  for (std::size_t k = 1; k < n; ++k) {
    const int parent = static_cast<int>(rng.index(k)) + 1;
    c.lines.push_back({parent, static_cast<int>(k + 1), rng.uniform(0.05, 0.8), rng.uniform(0.05, 0.6), 5000.0});
    c.buses[k].load_p = rng.uniform(0.0, 500.0);
    c.buses[k].load_q = c.buses[k].load_p * rng.uniform(0.0, 0.6);
  }
  return c;
}

inline mgsched::pf::InjectionSet base_load(const NetworkCase& c) {
  auto inj = mgsched::pf::InjectionSet::zeros(c.buses.size());
  for (std::size_t i = 0; i < c.buses.size(); ++i) {
    inj.p_kw[i] = -c.buses[i].load_p;
    inj.q_kvar[i] = -c.buses[i].load_q;
  }
  return inj;
}

// Admittance matrix assembled straight from the line table.
inline std::vector<std::vector<Complex>> admittance(const NetworkCase& c) {
  const std::size_t n = c.buses.size();
  std::vector<std::vector<Complex>> y(n, std::vector<Complex>(n));
  const double z_base = c.base_kv * c.base_kv / c.base_mva;
  auto index = [&](int id) {
    return static_cast<std::size_t>(
        std::find_if(c.buses.begin(), c.buses.end(), [&](const auto& b) { return b.id == id; }) - c.buses.begin());
  };
  for (const auto& l : c.lines) {
    const Complex ys = 1.0 / (Complex(l.resistance, l.reactance) / z_base);
    const std::size_t f = index(l.from_bus);
    const std::size_t t = index(l.to_bus);
    y[f][f] += ys;
    y[t][t] += ys;
    y[f][t] -= ys;
    y[t][f] -= ys;
  }
  return y;
}

struct GaussSeidel {
  std::vector<Complex> v;
  int sweeps = 0;
  bool converged = false;

  double magnitude(std::size_t i) const { return std::abs(v[i]); }
  double angle(std::size_t i) const { return std::arg(v[i]); }
};

// Fixed-point iteration V_i = (conj(S_i / V_i) - sum_k Y_ik V_k) / Y_ii, flat
// start, until no voltage moves by more than `tol` in a sweep.
inline GaussSeidel gauss_seidel(const NetworkCase& c, const mgsched::pf::InjectionSet& inj,
                                double slack_v = 1.0, double tol = 1e-14, int max_sweeps = 2000000) {
  const auto y = admittance(c);
  const std::size_t n = c.buses.size();
  const std::size_t slack = static_cast<std::size_t>(
      std::find_if(c.buses.begin(), c.buses.end(), [&](const auto& b) { return b.id == c.grid_tie.bus; }) -
      c.buses.begin());
  std::vector<std::vector<std::size_t>> nbr(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      if (k != i && y[i][k] != Complex{}) nbr[i].push_back(k);
    }
  }
  const double kw_base = c.base_mva * 1000.0;
  GaussSeidel gs;
  gs.v.assign(n, Complex(1.0, 0.0));
  gs.v[slack] = Complex(slack_v, 0.0);
  for (gs.sweeps = 1; gs.sweeps <= max_sweeps; ++gs.sweeps) {
    double moved = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == slack) continue;
      const Complex s(inj.p_kw[i] / kw_base, inj.q_kvar[i] / kw_base);
      Complex sum;
      for (std::size_t k : nbr[i]) sum += y[i][k] * gs.v[k];
      const Complex next = (std::conj(s / gs.v[i]) - sum) / y[i][i];
      moved = std::max(moved, std::abs(next - gs.v[i]));
      gs.v[i] = next;
    }
    if (moved < tol) {
      gs.converged = true;
      break;
    }
  }
  return gs;
}

}  // namespace support
