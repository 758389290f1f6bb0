#include "aquactrl/mpc.hpp"

#include <cmath>

namespace aquactrl {

namespace {

constexpr double kLitersPerFt3 = 28.316846592;

}  // namespace

Eigen::VectorXd mpc_step(const std::vector<const WqSystem*>& horizon_systems,
                         const Eigen::VectorXd& x_now, const MpcConfig& cfg,
                         SolveCode* status) {
  cfg.validate();
  const int Np = static_cast<int>(horizon_systems.size());
  if (Np < 1) throw InputError("mpc_step: empty horizon");
  const Eigen::Index nx = horizon_systems[0]->A.rows();
  const Eigen::Index nu = horizon_systems[0]->B.cols();
  const Eigen::Index ny = horizon_systems[0]->C.rows();
  if (nu == 0) throw InputError("mpc_step: no boosters to control");

  // Stacked prediction x_k = phi_k + S_k U over k = 1..Np.
  std::vector<Eigen::VectorXd> phi(static_cast<std::size_t>(Np) + 1);
  std::vector<Eigen::MatrixXd> S(static_cast<std::size_t>(Np) + 1);
  phi[0] = x_now;
  S[0] = Eigen::MatrixXd::Zero(nx, static_cast<Eigen::Index>(Np) * nu);
  for (int k = 0; k < Np; ++k) {
    const auto& sys = *horizon_systems[static_cast<std::size_t>(k)];
    phi[static_cast<std::size_t>(k) + 1] = sys.A * phi[static_cast<std::size_t>(k)];
    S[static_cast<std::size_t>(k) + 1].noalias() = sys.A * S[static_cast<std::size_t>(k)];
    S[static_cast<std::size_t>(k) + 1].middleCols(static_cast<Eigen::Index>(k) * nu, nu) +=
        sys.B;
  }

  const Eigen::Index nU = static_cast<Eigen::Index>(Np) * nu;
  const Eigen::Index nvar = nU + (cfg.soften_state_bounds ? 1 : 0);
  QpProblem qp;
  qp.resize(nvar);

  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(nU, nU);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(nU);
  std::vector<Eigen::VectorXd> in_rows;
  std::vector<double> in_rhs;

  for (int k = 1; k <= Np; ++k) {
    const auto& sys = *horizon_systems[static_cast<std::size_t>(std::min(k - 1, Np - 1))];
    Eigen::MatrixXd CS = sys.C * S[static_cast<std::size_t>(k)];
    Eigen::VectorXd e = sys.C * phi[static_cast<std::size_t>(k)] -
                        Eigen::VectorXd::Constant(ny, cfg.y_ref);
    P.noalias() += 2.0 * cfg.q_weight * CS.transpose() * CS;
    c.noalias() += 2.0 * cfg.q_weight * CS.transpose() * e;

    // State box rows: x_min - s <= x_k <= x_max + s.
    for (Eigen::Index i = 0; i < nx; ++i) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(nvar);
      row.head(nU) = S[static_cast<std::size_t>(k)].row(i).transpose();
      double base = phi[static_cast<std::size_t>(k)][i];
      if (cfg.soften_state_bounds) row[nU] = -1.0;
      in_rows.push_back(row);
      in_rhs.push_back(cfg.x_max - base);
      Eigen::VectorXd row2 = -row;
      if (cfg.soften_state_bounds) row2[nU] = -1.0;
      in_rows.push_back(row2);
      in_rhs.push_back(base - cfg.x_min);
    }
  }
  for (Eigen::Index i = 0; i < nU; ++i) P(i, i) += 2.0 * cfg.r_weight;

  qp.P.topLeftCorner(nU, nU) = P;
  qp.c.head(nU) = c;
  for (Eigen::Index i = 0; i < nU; ++i) {
    qp.lb[i] = 0.0;
    qp.ub[i] = cfg.u_max;
  }
  if (cfg.soften_state_bounds) {
    qp.P(nU, nU) = 2.0 * cfg.slack_penalty;
    qp.lb[nU] = 0.0;
  }
  qp.Ain.resize(static_cast<Eigen::Index>(in_rows.size()), nvar);
  qp.bin.resize(static_cast<Eigen::Index>(in_rows.size()));
  for (std::size_t r = 0; r < in_rows.size(); ++r) {
    qp.Ain.row(static_cast<Eigen::Index>(r)) = in_rows[r].transpose();
    qp.bin[static_cast<Eigen::Index>(r)] = in_rhs[r];
  }

  auto st = solve_qp(qp);
  if (status) *status = st.code;
  if (st.code != SolveCode::Optimal) return Eigen::VectorXd::Zero(nu);
  return st.x.head(nu).cwiseMax(0.0).cwiseMin(cfg.u_max);
}

MpcResult run_closed_loop(const Network& net, const ScheduleResult& schedule,
                          const SegmentPlan& plan, const MpcConfig& cfg,
                          const Eigen::VectorXd& x0) {
  return run_closed_loop(net, trajectory_from_schedule(net, schedule), plan, cfg, x0);
}

MpcResult run_closed_loop(const Network& net, const HydraulicTrajectory& traj,
                          const SegmentPlan& plan, const MpcConfig& cfg,
                          const Eigen::VectorXd& x0) {
  cfg.validate();
  if (net.boosters.empty()) throw InputError("run_closed_loop: network has no boosters");
  MpcResult res;
  const auto inner = static_cast<std::size_t>(net.dt_hyd / net.dt_wq + 0.5);
  const std::size_t n_steps = traj.states.size();

  std::vector<WqSystem> systems;
  systems.reserve(n_steps);
  for (const auto& st : traj.states) systems.push_back(assemble_wq(net, st, plan));

  MpcConfig step_cfg = cfg;
  // Per-booster injection caps tighten the global one.
  double u_cap = cfg.u_max;
  for (const auto& b : net.boosters) u_cap = std::min(u_cap, b.u_max);
  step_cfg.u_max = u_cap;

  Eigen::VectorXd x = x0;
  res.trace.times.push_back(0.0);
  res.trace.states.push_back(x);
  res.trace.outputs.push_back(systems[0].C * x);

  double t = 0.0;
  bool reached = false;
  for (std::size_t hs = 0; hs < n_steps; ++hs) {
    for (std::size_t k = 0; k < inner; ++k) {
      std::size_t global = hs * inner + k;
      std::vector<const WqSystem*> horizon;
      horizon.reserve(static_cast<std::size_t>(cfg.horizon));
      for (int j = 0; j < cfg.horizon; ++j) {
        std::size_t idx = std::min((global + static_cast<std::size_t>(j)) / inner,
                                   n_steps - 1);
        horizon.push_back(&systems[idx]);
      }
      SolveCode code;
      Eigen::VectorXd u = mpc_step(horizon, x, step_cfg, &code);
      res.statuses.push_back(code);
      res.times.push_back(t);
      res.injections.push_back(u);
      for (Eigen::Index b = 0; b < u.size(); ++b)
        res.total_mass_g +=
            u[b] * net.boosters[static_cast<std::size_t>(b)].flow * net.dt_wq *
            kLitersPerFt3 / 1000.0;

      x = wq_step(systems[hs], x, u);
      t += net.dt_wq;
      res.trace.times.push_back(t);
      res.trace.states.push_back(x);
      res.trace.outputs.push_back(systems[hs].C * x);

      if (!reached && res.trace.outputs.back().size() > 0) {
        bool in_band = true;
        for (Eigen::Index i = 0; i < res.trace.outputs.back().size(); ++i)
          if (std::abs(res.trace.outputs.back()[i] - cfg.y_ref) > cfg.band) in_band = false;
        if (in_band) {
          reached = true;
          res.time_to_setpoint = t;
        }
      }
    }
  }
  return res;
}

}  // namespace aquactrl
