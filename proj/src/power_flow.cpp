#include "mgsched/power_flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>

#include "mgsched/error.hpp"

namespace mgsched::pf {

namespace {

double impedance_base(const NetworkCase& c) { return c.base_kv * c.base_kv / c.base_mva; }

double kw_per_pu(const NetworkCase& c) { return c.base_mva * 1000.0; }

Complex series_admittance(const Line& l, double z_base) {
  const Complex z(l.resistance / z_base, l.reactance / z_base);
  if (std::abs(z) == 0.0) {
    throw Error(ErrorCode::Singular, "singular branch " + std::to_string(l.from_bus) + "-" +
                                         std::to_string(l.to_bus) + ": zero impedance");
  }
  return 1.0 / z;
}

}  // namespace

AdmittanceMatrix build_admittance(const NetworkCase& c) {
  const auto n = c.buses.size();
  AdmittanceMatrix out;
  out.y = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  out.neighbours.assign(n, {});
  const double z_base = impedance_base(c);
  for (const Line& l : c.lines) {
    const auto from = c.bus_index(l.from_bus);
    const auto to = c.bus_index(l.to_bus);
    if (!from || !to) throw Error(ErrorCode::Validation, "line references unknown bus");
    const Complex y = series_admittance(l, z_base);
    const auto i = static_cast<Eigen::Index>(*from);
    const auto k = static_cast<Eigen::Index>(*to);
    out.y(i, i) += y;
    out.y(k, k) += y;
    out.y(i, k) -= y;
    out.y(k, i) -= y;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      if (k != i && out.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) != Complex{}) {
        out.neighbours[i].push_back(k);
      }
    }
  }
  return out;
}

void compute_injections(const AdmittanceMatrix& y, const std::vector<double>& v,
                        const std::vector<double>& angle, std::vector<double>& p,
                        std::vector<double>& q) {
  const auto n = y.size();
  p.assign(n, 0.0);
  q.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double g_ii = y.y(ii, ii).real();
    const double b_ii = y.y(ii, ii).imag();
    double pi = v[i] * g_ii;
    double qi = -v[i] * b_ii;
    for (std::size_t k : y.neighbours[i]) {
      const Complex yik = y.y(ii, static_cast<Eigen::Index>(k));
      const double theta = angle[i] - angle[k];
      const double c = std::cos(theta);
      const double s = std::sin(theta);
      pi += v[k] * (yik.real() * c + yik.imag() * s);
      qi += v[k] * (yik.real() * s - yik.imag() * c);
    }
    p[i] = v[i] * pi;
    q[i] = v[i] * qi;
  }
}

namespace {

// Jacobian of (P_i, Q_i) with respect to (angle_k, V_k), k a neighbour of i.
Eigen::Matrix2d coupling_block(const AdmittanceMatrix& y, const PowerFlowSolution& sol,
                               std::size_t i, std::size_t k) {
  const Complex yik = y.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
  const double theta = sol.angle[i] - sol.angle[k];
  const double cs = std::cos(theta);
  const double sn = std::sin(theta);
  const double gs_bc = yik.real() * sn - yik.imag() * cs;
  const double gc_bs = yik.real() * cs + yik.imag() * sn;
  const double vi = sol.v[i];
  Eigen::Matrix2d b;
  b << vi * sol.v[k] * gs_bc, vi * gc_bs, -vi * sol.v[k] * gc_bs, vi * gs_bc;
  return b;
}

Eigen::Matrix2d diagonal_block(const AdmittanceMatrix& y, const PowerFlowSolution& sol,
                               const std::vector<double>& p, const std::vector<double>& q,
                               std::size_t i) {
  const auto ii = static_cast<Eigen::Index>(i);
  const double g = y.y(ii, ii).real();
  const double b = y.y(ii, ii).imag();
  const double v = sol.v[i];
  Eigen::Matrix2d d;
  d << -q[i] - b * v * v, p[i] / v + g * v, p[i] - g * v * v, q[i] / v - b * v;
  return d;
}

// Breadth-first order from the slack bus when the network is a tree.
struct TreeOrder {
  std::vector<std::size_t> order;  // excludes the slack
  std::vector<std::size_t> parent;
};

std::optional<TreeOrder> tree_order(const AdmittanceMatrix& y, std::size_t slack) {
  const std::size_t n = y.size();
  std::size_t edges = 0;
  for (const auto& nb : y.neighbours) edges += nb.size();
  if (edges != 2 * (n - 1)) return std::nullopt;
  TreeOrder t;
  t.parent.assign(n, n);
  std::vector<std::size_t> queue{slack};
  std::vector<bool> seen(n, false);
  seen[slack] = true;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::size_t i = queue[head];
    for (std::size_t k : y.neighbours[i]) {
      if (seen[k]) continue;
      seen[k] = true;
      t.parent[k] = i;
      t.order.push_back(k);
      queue.push_back(k);
    }
  }
  if (t.order.size() != n - 1) return std::nullopt;
  return t;
}

// Newton step by block elimination from the leaves towards the slack; no
// fill-in on a tree. Returns false if a pivot block is near singular.
bool tree_step(const AdmittanceMatrix& y, const PowerFlowSolution& sol,
               const std::vector<double>& p, const std::vector<double>& q,
               const Eigen::VectorXd& mismatch, const TreeOrder& tree, std::size_t slack,
               const std::vector<std::ptrdiff_t>& slot, Eigen::VectorXd& dx) {
  const std::size_t n = y.size();
  const auto m = static_cast<Eigen::Index>(n - 1);
  std::vector<Eigen::Matrix2d> diag(n), up(n), inv(n);
  std::vector<Eigen::Vector2d> rhs(n);
  for (std::size_t i : tree.order) {
    const auto s = static_cast<Eigen::Index>(slot[i]);
    diag[i] = diagonal_block(y, sol, p, q, i);
    rhs[i] = {mismatch(s), mismatch(m + s)};
  }
  for (auto it = tree.order.rbegin(); it != tree.order.rend(); ++it) {
    const std::size_t i = *it;
    const double det = diag[i].determinant();
    if (!(std::abs(det) > 1e-12 * diag[i].cwiseAbs().maxCoeff() * diag[i].cwiseAbs().maxCoeff())) {
      return false;
    }
    inv[i] = diag[i].inverse();
    const std::size_t par = tree.parent[i];
    if (par == slack) continue;
    up[i] = coupling_block(y, sol, i, par);
    const Eigen::Matrix2d down = coupling_block(y, sol, par, i);
    diag[par].noalias() -= down * inv[i] * up[i];
    rhs[par].noalias() -= down * (inv[i] * rhs[i]);
  }
  dx.resize(2 * m);
  std::vector<Eigen::Vector2d> x(n, Eigen::Vector2d::Zero());
  for (std::size_t i : tree.order) {
    const std::size_t par = tree.parent[i];
    Eigen::Vector2d r = rhs[i];
    if (par != slack) r.noalias() -= up[i] * x[par];
    x[i] = inv[i] * r;
    const auto s = static_cast<Eigen::Index>(slot[i]);
    dx(s) = x[i](0);
    dx(m + s) = x[i](1);
  }
  return true;
}

Eigen::VectorXd dense_step(const AdmittanceMatrix& y, const PowerFlowSolution& sol,
                           const std::vector<double>& p, const std::vector<double>& q,
                           const Eigen::VectorXd& mismatch, const std::vector<std::size_t>& pq,
                           const std::vector<std::ptrdiff_t>& slot) {
  const auto m = static_cast<Eigen::Index>(pq.size());
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  for (std::size_t a = 0; a < pq.size(); ++a) {
    const auto i = pq[a];
    const auto ra = static_cast<Eigen::Index>(a);
    const Eigen::Matrix2d d = diagonal_block(y, sol, p, q, i);
    jac(ra, ra) = d(0, 0);
    jac(ra, m + ra) = d(0, 1);
    jac(m + ra, ra) = d(1, 0);
    jac(m + ra, m + ra) = d(1, 1);
    for (std::size_t k : y.neighbours[i]) {
      if (slot[k] < 0) continue;
      const auto rb = static_cast<Eigen::Index>(slot[k]);
      const Eigen::Matrix2d b = coupling_block(y, sol, i, k);
      jac(ra, rb) = b(0, 0);
      jac(ra, m + rb) = b(0, 1);
      jac(m + ra, rb) = b(1, 0);
      jac(m + ra, m + rb) = b(1, 1);
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
  if (!(lu.rcond() > 1e-14)) throw Error(ErrorCode::Singular, "singular power-flow Jacobian");
  return lu.solve(mismatch);
}

}  // namespace

PowerFlowSolution solve(const NetworkCase& c, const AdmittanceMatrix& y,
                        const InjectionSet& injections, double slack_v,
                        const SolverOptions& options) {
  const auto n = c.buses.size();
  if (injections.p_kw.size() != n || injections.q_kvar.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "injection set size does not match bus count");
  }
  if (y.size() != n) throw Error(ErrorCode::InvalidArgument, "admittance matrix size mismatch");
  const std::size_t slack = c.slack_index();
  const double base = kw_per_pu(c);

  std::vector<std::size_t> pq;  // unknown buses
  std::vector<double> p_spec(n), q_spec(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(injections.p_kw[i]) || !std::isfinite(injections.q_kvar[i])) {
      throw Error(ErrorCode::InvalidArgument, "non-finite injection");
    }
    p_spec[i] = injections.p_kw[i] / base;
    q_spec[i] = injections.q_kvar[i] / base;
    if (i != slack) pq.push_back(i);
  }
  const auto m = pq.size();
  std::vector<std::ptrdiff_t> slot(n, -1);  // bus -> position among unknowns
  for (std::size_t k = 0; k < m; ++k) slot[pq[k]] = static_cast<std::ptrdiff_t>(k);
  const auto tree = options.use_tree_elimination ? tree_order(y, slack) : std::nullopt;

  PowerFlowSolution sol;
  sol.v.assign(n, slack_v);
  sol.angle.assign(n, 0.0);

  Eigen::VectorXd mismatch(static_cast<Eigen::Index>(2 * m));
  Eigen::VectorXd dx;
  std::vector<double> p, q;

  for (int iter = 0;; ++iter) {
    compute_injections(y, sol.v, sol.angle, p, q);
    double worst = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const auto i = pq[k];
      mismatch(static_cast<Eigen::Index>(k)) = p_spec[i] - p[i];
      mismatch(static_cast<Eigen::Index>(m + k)) = q_spec[i] - q[i];
      worst = std::max({worst, std::abs(p_spec[i] - p[i]), std::abs(q_spec[i] - q[i])});
    }
    if (!std::isfinite(worst)) {
      throw Error(ErrorCode::NotConverged, "power flow diverged (non-finite mismatch)");
    }
    sol.max_mismatch = worst;
    sol.iterations = iter;
    if (worst <= options.tolerance) break;
    if (iter >= options.max_iterations) {
      char buf[128];
      std::snprintf(buf, sizeof buf,
                    "power flow did not converge in %d iterations (last mismatch %.3e pu)",
                    options.max_iterations, worst);
      throw Error(ErrorCode::NotConverged, buf);
    }
    if (!tree || !tree_step(y, sol, p, q, mismatch, *tree, slack, slot, dx)) {
      dx = dense_step(y, sol, p, q, mismatch, pq, slot);
    }
    for (std::size_t k = 0; k < m; ++k) {
      sol.angle[pq[k]] += dx(static_cast<Eigen::Index>(k));
      sol.v[pq[k]] += dx(static_cast<Eigen::Index>(m + k));
    }
  }

  sol.slack_p_kw = p[slack] * base;
  sol.slack_q_kvar = q[slack] * base;
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) loss += p[i];
  sol.loss_kw = loss * base;
  sol.line_p_kw.reserve(c.lines.size());
  for (const auto& f : line_flows(sol, c)) sol.line_p_kw.push_back(f.sending_kw);
  return sol;
}

PowerFlowSolution solve(const NetworkCase& c, const InjectionSet& injections, double slack_v,
                        const SolverOptions& options) {
  return solve(c, build_admittance(c), injections, slack_v, options);
}

double residual(const NetworkCase& c, const AdmittanceMatrix& y, const InjectionSet& injections,
                const PowerFlowSolution& sol) {
  std::vector<double> p, q;
  compute_injections(y, sol.v, sol.angle, p, q);
  const std::size_t slack = c.slack_index();
  const double base = kw_per_pu(c);
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i == slack) continue;
    worst = std::max({worst, std::abs(injections.p_kw[i] / base - p[i]),
                      std::abs(injections.q_kvar[i] / base - q[i])});
  }
  return worst;
}

std::vector<LineFlow> line_flows(const PowerFlowSolution& sol, const NetworkCase& c) {
  const double z_base = impedance_base(c);
  const double base = kw_per_pu(c);
  std::vector<LineFlow> out;
  out.reserve(c.lines.size());
  for (const Line& l : c.lines) {
    const auto i = *c.bus_index(l.from_bus);
    const auto k = *c.bus_index(l.to_bus);
    const Complex y = series_admittance(l, z_base);
    const Complex vi = std::polar(sol.v[i], sol.angle[i]);
    const Complex vk = std::polar(sol.v[k], sol.angle[k]);
    const Complex current = (vi - vk) * y;
    const double send = (vi * std::conj(current)).real() * base;
    const double recv = (vk * std::conj(current)).real() * base;
    out.push_back({send, recv, send - recv});
  }
  return out;
}

ConstraintReport check_limits(const PowerFlowSolution& sol, const NetworkCase& c, int hour,
                              const LimitTolerance& tol) {
  ConstraintReport report;
  for (std::size_t i = 0; i < c.buses.size(); ++i) {
    const Bus& b = c.buses[i];
    const double v = sol.v[i];
    report.max_voltage_deviation = std::max(report.max_voltage_deviation, std::abs(v - 1.0));
    const double excess = std::max(b.v_min - v, v - b.v_max);
    if (excess > tol.voltage_pu) {
      report.violations.push_back({ConstraintKind::Voltage, hour, "bus " + std::to_string(b.id), excess});
    }
  }
  const auto flows = line_flows(sol, c);
  for (std::size_t k = 0; k < c.lines.size(); ++k) {
    const Line& l = c.lines[k];
    const double flow = std::max(std::abs(flows[k].sending_kw), std::abs(flows[k].receiving_kw));
    const double excess = flow - l.capacity;
    if (excess > tol.power_kw) {
      report.violations.push_back({ConstraintKind::Feeder, hour,
                                   "line " + std::to_string(l.from_bus) + "-" + std::to_string(l.to_bus),
                                   excess});
    }
  }
  return report;
}

}  // namespace mgsched::pf
