#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace aquactrl {

// min 1/2 x'Px + c'x  s.t.  Aeq x = beq,  Ain x <= bin,  lb <= x <= ub.
// P must be PSD; empty constraint blocks are allowed.
struct QpProblem {
  Eigen::MatrixXd P;
  Eigen::VectorXd c;
  Eigen::MatrixXd Aeq;
  Eigen::VectorXd beq;
  Eigen::MatrixXd Ain;
  Eigen::VectorXd bin;
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;

  Eigen::Index n() const { return c.size(); }
  void resize(Eigen::Index n);
  double objective(const Eigen::VectorXd& x) const {
    return 0.5 * x.dot(P * x) + c.dot(x);
  }
};

// Convex quadratic inequality 1/2 x'Qx + a'x <= b with Q PSD.
struct QuadConstraint {
  Eigen::MatrixXd Q;
  Eigen::VectorXd a;
  double b = 0.0;
  double eval(const Eigen::VectorXd& x) const { return 0.5 * x.dot(Q * x) + a.dot(x) - b; }
};

struct MipProblem {
  QpProblem qp;
  std::vector<Eigen::Index> binaries;
  std::vector<QuadConstraint> quad;
};

enum class SolveCode { Optimal, Infeasible, IterationLimit, Unbounded };

std::string to_string(SolveCode c);

struct SolveStatus {
  SolveCode code = SolveCode::Infeasible;
  double objective = 0.0;
  Eigen::VectorXd x;
  int iterations = 0;  // active-set steps, B&B nodes, or SLP iterations
};

struct QpOptions {
  double feas_tol = 1e-8;
  double mult_tol = 1e-8;
  int max_iterations = 0;  // 0 -> scaled default
};

// Primal active-set method with a phase-1 feasibility stage. At Optimal the
// KKT residual is below 1e-7; infeasibility is certified by the phase-1
// minimum violation staying positive.
SolveStatus solve_qp(const QpProblem& p, const QpOptions& opt = {});

// Convex QCQP via outer linearization of the quadratic constraints around
// successive QP solutions.
SolveStatus solve_qcqp(const QpProblem& p, const std::vector<QuadConstraint>& quad,
                       const QpOptions& opt = {});

struct MipOptions {
  QpOptions qp;
  int node_limit = 20000;
  double int_tol = 1e-6;
  double gap_abs = 1e-9;
};

// Best-bound branch and bound over the binary variables; branches on the
// most fractional binary with lowest-index tie-break, so results do not
// depend on exploration interleaving.
SolveStatus solve_miqp(const MipProblem& p, const MipOptions& opt = {});

struct SlpObjective {
  // Smooth term added to the quadratic objective.
  std::function<double(const Eigen::VectorXd&)> value;
  // Smooth constraints value(x) <= 0, linearized each iteration.
  std::vector<std::function<double(const Eigen::VectorXd&)>> constraints;
};

struct SlpOptions {
  int max_iter = 25;
  double trust_radius = 0.5;    // relative to variable scale
  double stat_tol = 1e-5;
  double fd_step = 1e-6;        // central-difference step scale
  MipOptions mip;
};

// Successive linearization around the incumbent: the nonconvex term is
// replaced by its first-order model, the resulting MIQP is solved inside a
// box trust region, and steps are accepted on merit decrease.
SolveStatus solve_slp(const MipProblem& shell, const SlpObjective& obj,
                      const Eigen::VectorXd& x0, const SlpOptions& opt = {});

}  // namespace aquactrl
