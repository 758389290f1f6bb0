#include "aquactrl/pump_fit.hpp"

#include <cmath>

#include "aquactrl/hydraulics.hpp"
#include "aquactrl/optkern.hpp"
#include "aquactrl/pwl.hpp"
#include "aquactrl/units.hpp"

namespace aquactrl {

OperatingGrid default_operating_grid(const Pump& pump, int n_q, int n_s) {
  OperatingGrid grid;
  double q_max = pump_runout_flow(pump);
  for (int si = 1; si <= n_s; ++si) {
    double s = pump.s_max * static_cast<double>(si) / n_s;
    // Stay on the delivering part of the curve for this speed.
    double q_hi = s * std::pow(pump.shutoff_head / pump.alpha, 1.0 / pump.nu);
    q_hi = std::min(q_hi, q_max);
    for (int qi = 0; qi < n_q; ++qi)
      grid.push_back({q_hi * static_cast<double>(qi) / (n_q - 1), s});
  }
  return grid;
}

PumpCurveFit fit_pump_curve(const Pump& pump, const OperatingGrid& grid) {
  std::vector<double> values;
  values.reserve(grid.size());
  for (auto [q, s] : grid) {
    if (s <= 0) throw FitError("fit_pump_curve: grid requires s > 0");
    values.push_back(pump_headgain(q, s, pump));
  }
  return fit_curve_surrogate(grid, values);
}

PumpCurveFit fit_curve_surrogate(const OperatingGrid& grid,
                                 const std::vector<double>& values) {
  const auto m = static_cast<Eigen::Index>(grid.size());
  if (m < 4) throw FitError("fit_pump_curve: need at least 4 operating points");
  if (values.size() != grid.size())
    throw FitError("fit_pump_curve: one value per grid point required");
  Eigen::MatrixXd G(m, 4);
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    auto [q, s] = grid[static_cast<std::size_t>(i)];
    G(i, 0) = q * q;
    G(i, 1) = q;
    G(i, 2) = s * s;
    G(i, 3) = 1.0;
    y[i] = values[static_cast<std::size_t>(i)];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(G, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.rank() < 4) throw FitError("fit_pump_curve: rank-deficient sample grid");

  // Active-set over the two sign constraints: try all four combinations,
  // keep the feasible fit with the smallest residual.
  double best_res = std::numeric_limits<double>::infinity();
  Eigen::Vector4d best = Eigen::Vector4d::Zero();
  bool found = false;
  for (int mask = 0; mask < 4; ++mask) {
    bool clamp1 = mask & 1, clamp3 = mask & 2;
    std::vector<Eigen::Index> cols;
    if (!clamp1) cols.push_back(0);
    cols.push_back(1);
    if (!clamp3) cols.push_back(2);
    cols.push_back(3);
    Eigen::MatrixXd Gr(m, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) Gr.col(static_cast<Eigen::Index>(c)) = G.col(cols[c]);
    Eigen::VectorXd br = Gr.colPivHouseholderQr().solve(y);
    Eigen::Vector4d beta = Eigen::Vector4d::Zero();
    for (std::size_t c = 0; c < cols.size(); ++c) beta[cols[c]] = br[static_cast<Eigen::Index>(c)];
    if (beta[0] < 0 || beta[2] < 0) continue;
    double res = (G * beta - y).norm();
    if (res < best_res - 1e-15) {
      best_res = res;
      best = beta;
      found = true;
    }
  }
  if (!found) throw FitError("fit_pump_curve: no feasible coefficient set");
  PumpCurveFit fit;
  fit.beta1 = best[0];
  fit.beta2 = best[1];
  fit.beta3 = best[2];
  fit.beta4 = best[3];
  fit.residual = best_res / std::sqrt(static_cast<double>(m));
  return fit;
}

double pump_power_cost_rate(const Pump& pump, double q, double s, double tariff,
                            const EfficiencyModel& eta) {
  if (s <= 0 || q <= 0) return 0.0;
  double gain = -pump_headgain(q, s, pump);  // ft, positive while delivering
  if (gain <= 0) return 0.0;
  double ftlb_per_s = units::WATER_SPECIFIC_WEIGHT_LB_FT3 * q * gain / eta(q, s);
  return tariff * ftlb_per_s * units::FTLB_PER_S_TO_KW;
}

PowerFit fit_power(const Pump& pump, double tariff, const EfficiencyModel& eta,
                   const OperatingGrid& points) {
  std::vector<double> values;
  values.reserve(points.size());
  for (auto [q, s] : points)
    values.push_back(pump_power_cost_rate(pump, q, s, tariff, eta));
  auto fit = fit_power_surrogate(points, values);
  fit.tariff = tariff;
  return fit;
}

PowerFit fit_power_surrogate(const OperatingGrid& points,
                             const std::vector<double>& values) {
  const auto m = static_cast<Eigen::Index>(points.size());
  if (m < 6) throw FitError("fit_power: need at least 6 operating points");
  if (values.size() != points.size())
    throw FitError("fit_power: one value per operating point required");
  Eigen::MatrixXd G(m, 6);
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    auto [q, s] = points[static_cast<std::size_t>(i)];
    G(i, 0) = 1.0;
    G(i, 1) = q;
    G(i, 2) = q * q;
    G(i, 3) = s;
    G(i, 4) = s * s;
    G(i, 5) = q * s;
    y[i] = values[static_cast<std::size_t>(i)];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(G);
  const auto& sv = svd.singularValues();
  if (sv.size() < 6 || sv[5] <= 1e-10 * sv[0])
    throw FitError("fit_power: rank-deficient design (operating points do not span q,s)");

  // LS with the PSD cone on [[2t3, t6],[t6, 2t5]] handled by supporting
  // hyperplanes of f(t) = sqrt(t6^2 + (t3-t5)^2) - t3 - t5 <= 0.
  QpProblem qp;
  qp.resize(6);
  qp.P = 2.0 * G.transpose() * G;
  qp.c = -2.0 * G.transpose() * y;

  Eigen::VectorXd th;
  for (int round = 0; round < 60; ++round) {
    auto st = solve_qp(qp);
    if (st.code != SolveCode::Optimal) throw FitError("fit_power: inner QP failed");
    th = st.x;
    double d = th[2] - th[4];
    double r = std::hypot(th[5], d);
    double f = r - th[2] - th[4];
    if (f <= 1e-11) break;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(6);
    double rr = std::max(r, 1e-12);
    g[2] = d / rr - 1.0;
    g[4] = -d / rr - 1.0;
    g[5] = th[5] / rr;
    Eigen::Index rows = qp.Ain.rows();
    qp.Ain.conservativeResize(rows + 1, 6);
    qp.bin.conservativeResize(rows + 1);
    qp.Ain.row(rows) = g.transpose();
    qp.bin[rows] = g.dot(th) - f;
  }

  PowerFit fit;
  fit.theta1 = th[0];
  fit.theta2 = th[1];
  fit.theta3 = th[2];
  fit.theta4 = th[3];
  fit.theta5 = th[4];
  fit.theta6 = th[5];
  fit.residual = (G * th - y).norm() / std::sqrt(static_cast<double>(m));
  return fit;
}

}  // namespace aquactrl
