#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "mgsched/constraints.hpp"
#include "mgsched/grid_model.hpp"

namespace mgsched::pf {

using Complex = std::complex<double>;

// Bus admittance matrix in per unit on the case base, shunt-free series
// line model. Stored dense; rows follow NetworkCase::buses order.
struct AdmittanceMatrix {
  Eigen::MatrixXcd y;
  // Nonzero off-diagonal columns per row, for sparse loops.
  std::vector<std::vector<std::size_t>> neighbours;

  std::size_t size() const { return static_cast<std::size_t>(y.rows()); }
  double magnitude(std::size_t j, std::size_t n) const { return std::abs(y(j, n)); }
  double angle(std::size_t j, std::size_t n) const { return std::arg(y(j, n)); }
};

// Throws Error{Singular} ("singular branch") on a zero-impedance line.
AdmittanceMatrix build_admittance(const NetworkCase& c);

// Net injections per bus in kW / kVAr, in NetworkCase::buses order.
// The slack entry is ignored by the solver.
struct InjectionSet {
  std::vector<double> p_kw;
  std::vector<double> q_kvar;

  static InjectionSet zeros(std::size_t buses) {
    return {std::vector<double>(buses, 0.0), std::vector<double>(buses, 0.0)};
  }
};

struct SolverOptions {
  double tolerance = 1e-8;  // max |mismatch| in pu
  int max_iterations = 50;
  // Radial networks are factored by leaf-to-root block elimination; meshed
  // ones (or this flag off) use dense LU.
  bool use_tree_elimination = true;
};

struct PowerFlowSolution {
  std::vector<double> v;      // pu
  std::vector<double> angle;  // rad
  double slack_p_kw = 0.0;    // import positive
  double slack_q_kvar = 0.0;
  std::vector<double> line_p_kw;  // sending-end flow, from_bus -> to_bus
  double loss_kw = 0.0;
  int iterations = 0;
  double max_mismatch = 0.0;  // pu
};

// Newton-Raphson in polar coordinates, flat start. Throws
// Error{NotConverged} (message carries the last mismatch) or Error{Singular}.
PowerFlowSolution solve(const NetworkCase& c, const AdmittanceMatrix& y,
                        const InjectionSet& injections, double slack_v = 1.0,
                        const SolverOptions& options = {});
PowerFlowSolution solve(const NetworkCase& c, const InjectionSet& injections,
                        double slack_v = 1.0, const SolverOptions& options = {});

// Bus power injections (pu) implied by a voltage profile.
void compute_injections(const AdmittanceMatrix& y, const std::vector<double>& v,
                        const std::vector<double>& angle, std::vector<double>& p,
                        std::vector<double>& q);

// Largest |P_spec - P(V, delta)| or |Q_spec - Q(V, delta)| over non-slack
// buses, in pu.
double residual(const NetworkCase& c, const AdmittanceMatrix& y,
                const InjectionSet& injections, const PowerFlowSolution& sol);

struct LineFlow {
  double sending_kw = 0.0;    // leaving from_bus
  double receiving_kw = 0.0;  // arriving at to_bus
  double loss_kw = 0.0;       // sending - receiving
};

std::vector<LineFlow> line_flows(const PowerFlowSolution& sol, const NetworkCase& c);

// Bus-voltage and feeder-capacity checks for one solved hour. Also records
// the largest |V - 1| over all buses.
// Violations no larger than the tolerances are not reported.
struct LimitTolerance {
  double voltage_pu = 1e-9;
  double power_kw = 1e-6;
};

ConstraintReport check_limits(const PowerFlowSolution& sol, const NetworkCase& c,
                              int hour = -1, const LimitTolerance& tol = {});

}  // namespace mgsched::pf
