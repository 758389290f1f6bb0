#include <algorithm>
#include <cmath>
#include <limits>

#include "aquactrl/optkern.hpp"

namespace aquactrl {

void QpProblem::resize(Eigen::Index n) {
  P = Eigen::MatrixXd::Zero(n, n);
  c = Eigen::VectorXd::Zero(n);
  Aeq.resize(0, n);
  beq.resize(0);
  Ain.resize(0, n);
  bin.resize(0);
  lb = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
  ub = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
}

std::string to_string(SolveCode c) {
  switch (c) {
    case SolveCode::Optimal: return "Optimal";
    case SolveCode::Infeasible: return "Infeasible";
    case SolveCode::IterationLimit: return "IterationLimit";
    case SolveCode::Unbounded: return "Unbounded";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Stacks the finite box rows under Ain so the core loop sees one
// inequality system G x <= h.
struct Standardized {
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
};

Standardized stack_inequalities(const QpProblem& p) {
  const Eigen::Index n = p.n();
  std::vector<Eigen::Index> upper, lower;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (p.ub.size() == n && std::isfinite(p.ub[i])) upper.push_back(i);
    if (p.lb.size() == n && std::isfinite(p.lb[i])) lower.push_back(i);
  }
  const Eigen::Index m0 = p.Ain.rows();
  Standardized s;
  s.G.setZero(m0 + static_cast<Eigen::Index>(upper.size() + lower.size()), n);
  s.h.resize(s.G.rows());
  if (m0 > 0) {
    s.G.topRows(m0) = p.Ain;
    s.h.head(m0) = p.bin;
  }
  Eigen::Index r = m0;
  for (auto i : upper) {
    s.G(r, i) = 1.0;
    s.h[r] = p.ub[i];
    ++r;
  }
  for (auto i : lower) {
    s.G(r, i) = -1.0;
    s.h[r] = -p.lb[i];
    ++r;
  }
  return s;
}

struct CoreResult {
  SolveCode code;
  Eigen::VectorXd x;
  int iterations;
};

// Primal active-set iteration from a feasible start. P_reg must be PD on
// the null space of the active rows; a small ridge is added by the caller.
CoreResult active_set_core(const Eigen::MatrixXd& P, const Eigen::VectorXd& c,
                           const Eigen::MatrixXd& Aeq, const Eigen::MatrixXd& G,
                           const Eigen::VectorXd& h, Eigen::VectorXd x,
                           const QpOptions& opt) {
  const Eigen::Index n = x.size();
  const Eigen::Index meq = Aeq.rows();
  const Eigen::Index mg = G.rows();
  int max_it = opt.max_iterations > 0
                   ? opt.max_iterations
                   : 100 + 20 * static_cast<int>(n + meq + mg);

  std::vector<bool> active(static_cast<std::size_t>(mg), false);
  // Start with the tight inequalities active (up to tolerance).
  for (Eigen::Index r = 0; r < mg; ++r)
    if (G.row(r).dot(x) >= h[r] - 1e-10) active[static_cast<std::size_t>(r)] = true;

  auto solve_eqp = [&](const std::vector<Eigen::Index>& act, const Eigen::VectorXd& g,
                       Eigen::VectorXd* p_out, Eigen::VectorXd* mult_out) {
    const auto ma = static_cast<Eigen::Index>(act.size());
    Eigen::MatrixXd A(meq + ma, n);
    if (meq > 0) A.topRows(meq) = Aeq;
    for (Eigen::Index i = 0; i < ma; ++i) A.row(meq + i) = G.row(act[static_cast<std::size_t>(i)]);

    Eigen::MatrixXd Z;  // null-space basis of A
    Eigen::Index rank = 0;
    if (A.rows() > 0) {
      Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
      const auto& sv = svd.singularValues();
      double smax = sv.size() > 0 ? sv[0] : 0.0;
      for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (smax > 0 && sv[i] > 1e-12 * smax) ++rank;
      Z = svd.matrixV().rightCols(n - rank);
    } else {
      Z = Eigen::MatrixXd::Identity(n, n);
    }

    if (Z.cols() == 0) {
      p_out->setZero(n);
    } else {
      Eigen::MatrixXd H = Z.transpose() * P * Z;
      Eigen::VectorXd rhs = -Z.transpose() * g;
      Eigen::VectorXd y = H.ldlt().solve(rhs);
      *p_out = Z * y;
    }
    if (mult_out) {
      if (A.rows() > 0) {
        Eigen::VectorXd resid = -(g + P * *p_out);
        *mult_out = A.transpose()
                        .colPivHouseholderQr()
                        .solve(resid);
      } else {
        mult_out->resize(0);
      }
    }
  };

  int iter = 0;
  while (iter < max_it) {
    ++iter;
    std::vector<Eigen::Index> act;
    for (Eigen::Index r = 0; r < mg; ++r)
      if (active[static_cast<std::size_t>(r)]) act.push_back(r);

    Eigen::VectorXd g = P * x + c;
    Eigen::VectorXd p(n), mult;
    solve_eqp(act, g, &p, nullptr);

    if (p.lpNorm<Eigen::Infinity>() <= 1e-11 * (1.0 + x.lpNorm<Eigen::Infinity>())) {
      solve_eqp(act, g, &p, &mult);
      // Multipliers for the active inequalities sit after the equalities.
      double worst = -opt.mult_tol;
      Eigen::Index drop = -1;
      for (std::size_t i = 0; i < act.size(); ++i) {
        double lam = mult.size() > 0 ? mult[meq + static_cast<Eigen::Index>(i)] : 0.0;
        if (lam < worst) {
          worst = lam;
          drop = act[i];
        }
      }
      if (drop < 0) return {SolveCode::Optimal, x, iter};
      active[static_cast<std::size_t>(drop)] = false;
      continue;
    }

    // Ratio test against the inactive inequalities.
    double alpha = 1.0;
    Eigen::Index block = -1;
    for (Eigen::Index r = 0; r < mg; ++r) {
      if (active[static_cast<std::size_t>(r)]) continue;
      double gp = G.row(r).dot(p);
      if (gp > 1e-12) {
        double a = (h[r] - G.row(r).dot(x)) / gp;
        if (a < alpha - 1e-14) {
          alpha = std::max(a, 0.0);
          block = r;
        }
      }
    }
    x += alpha * p;
    if (block >= 0) active[static_cast<std::size_t>(block)] = true;
    if (x.lpNorm<Eigen::Infinity>() > 1e12)
      return {SolveCode::Unbounded, x, iter};
  }
  return {SolveCode::IterationLimit, x, iter};
}

}  // namespace

SolveStatus solve_qp(const QpProblem& p, const QpOptions& opt) {
  const Eigen::Index n = p.n();
  SolveStatus st;
  if (n == 0) {
    st.code = SolveCode::Optimal;
    st.objective = 0.0;
    st.x.resize(0);
    return st;
  }

  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.P);
    double scale = 1.0 + std::abs(es.eigenvalues().maxCoeff());
    if (es.eigenvalues().minCoeff() < -1e-10 * scale)
      throw std::invalid_argument("solve_qp: cost matrix is not PSD");
  }

  Standardized s = stack_inequalities(p);
  double ridge = 1e-9 * (1.0 + p.P.cwiseAbs().maxCoeff());
  Eigen::MatrixXd Preg = p.P + ridge * Eigen::MatrixXd::Identity(n, n);

  // Feasible start: least-squares on the equalities, then a phase-1 QP
  // minimizing the inequality violations when needed.
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
  if (p.Aeq.rows() > 0) {
    x0 = p.Aeq.colPivHouseholderQr().solve(p.beq);
    if ((p.Aeq * x0 - p.beq).lpNorm<Eigen::Infinity>() > 1e-7) {
      st.code = SolveCode::Infeasible;
      st.x = x0;
      return st;
    }
  }
  // Clip into finite boxes to help phase 1.
  for (Eigen::Index i = 0; i < n; ++i) {
    if (p.lb.size() == n && std::isfinite(p.lb[i])) x0[i] = std::max(x0[i], p.lb[i]);
    if (p.ub.size() == n && std::isfinite(p.ub[i])) x0[i] = std::min(x0[i], p.ub[i]);
  }
  if (p.Aeq.rows() > 0 && (p.Aeq * x0 - p.beq).lpNorm<Eigen::Infinity>() > 1e-9) {
    // Clipping broke the equalities; fall back to the unclipped point.
    x0 = p.Aeq.colPivHouseholderQr().solve(p.beq);
  }

  Eigen::VectorXd viol = s.G * x0 - s.h;
  if (viol.size() > 0 && viol.maxCoeff() > opt.feas_tol) {
    // Phase 1 over (x, t): minimize violations t with Gx - t <= h, t >= 0.
    const Eigen::Index m = s.G.rows();
    Eigen::MatrixXd P1 = Eigen::MatrixXd::Zero(n + m, n + m);
    P1.topLeftCorner(n, n) = 1e-6 * Eigen::MatrixXd::Identity(n, n);
    P1.bottomRightCorner(m, m) = Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd c1 = Eigen::VectorXd::Zero(n + m);
    c1.head(n) = -1e-6 * x0;
    Eigen::MatrixXd Aeq1(p.Aeq.rows(), n + m);
    if (p.Aeq.rows() > 0) {
      Aeq1.setZero();
      Aeq1.leftCols(n) = p.Aeq;
    }
    Eigen::MatrixXd G1(2 * m, n + m);
    Eigen::VectorXd h1(2 * m);
    G1.setZero();
    G1.topLeftCorner(m, n) = s.G;
    G1.topRightCorner(m, m) = -Eigen::MatrixXd::Identity(m, m);
    h1.head(m) = s.h;
    G1.bottomRightCorner(m, m) = -Eigen::MatrixXd::Identity(m, m);
    h1.tail(m).setZero();

    Eigen::VectorXd z0(n + m);
    z0.head(n) = x0;
    z0.tail(m) = viol.cwiseMax(0.0);
    auto r1 = active_set_core(P1, c1, Aeq1, G1, h1, z0, opt);
    double worst = r1.x.tail(m).maxCoeff();
    if (worst > 1e-7) {
      st.code = SolveCode::Infeasible;
      st.x = r1.x.head(n);
      st.iterations = r1.iterations;
      return st;
    }
    x0 = r1.x.head(n);
  }

  auto r = active_set_core(Preg, p.c, p.Aeq, s.G, s.h, x0, opt);
  st.code = r.code;
  st.x = r.x;
  st.iterations = r.iterations;
  st.objective = p.objective(r.x);
  return st;
}

SolveStatus solve_qcqp(const QpProblem& p, const std::vector<QuadConstraint>& quad,
                       const QpOptions& opt) {
  if (quad.empty()) return solve_qp(p, opt);
  QpProblem work = p;
  SolveStatus st;
  for (int round = 0; round < 60; ++round) {
    st = solve_qp(work, opt);
    if (st.code != SolveCode::Optimal) return st;
    double worst = 0.0;
    int which = -1;
    for (std::size_t j = 0; j < quad.size(); ++j) {
      double v = quad[j].eval(st.x);
      if (v > worst) {
        worst = v;
        which = static_cast<int>(j);
      }
    }
    if (worst <= 1e-7) {
      st.objective = p.objective(st.x);
      return st;
    }
    // Supporting-hyperplane cut of the most violated constraint.
    const auto& qc = quad[static_cast<std::size_t>(which)];
    Eigen::VectorXd grad = qc.Q * st.x + qc.a;
    Eigen::Index m = work.Ain.rows();
    work.Ain.conservativeResize(m + 1, work.n());
    work.bin.conservativeResize(m + 1);
    work.Ain.row(m) = grad.transpose();
    work.bin[m] = grad.dot(st.x) - qc.eval(st.x);
  }
  st.code = SolveCode::IterationLimit;
  return st;
}

}  // namespace aquactrl
