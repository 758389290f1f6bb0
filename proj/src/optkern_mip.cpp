#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "aquactrl/optkern.hpp"

namespace aquactrl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Node {
  Eigen::VectorXd lb, ub;
  double bound = -kInf;
  int depth = 0;
  long id = 0;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;  // best bound first
    return a.id > b.id;                                // then creation order
  }
};

}  // namespace

SolveStatus solve_miqp(const MipProblem& p, const MipOptions& opt) {
  SolveStatus best;
  best.code = SolveCode::Infeasible;
  best.objective = kInf;

  const Eigen::Index n = p.qp.n();
  Eigen::VectorXd lb0 = p.qp.lb.size() == n
                            ? p.qp.lb
                            : Eigen::VectorXd::Constant(n, -kInf);
  Eigen::VectorXd ub0 = p.qp.ub.size() == n ? p.qp.ub : Eigen::VectorXd::Constant(n, kInf);
  for (auto bi : p.binaries) {
    lb0[bi] = std::max(lb0[bi], 0.0);
    ub0[bi] = std::min(ub0[bi], 1.0);
  }

  auto relax = [&](const Node& nd) {
    QpProblem q = p.qp;
    q.lb = nd.lb;
    q.ub = nd.ub;
    return solve_qcqp(q, p.quad, opt.qp);
  };

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  long next_id = 0;
  int max_depth = 2 * static_cast<int>(p.binaries.size());
  int nodes = 0;
  bool limit_hit = false;

  Node root{lb0, ub0, -kInf, 0, next_id++};
  {
    auto r = relax(root);
    ++nodes;
    if (r.code == SolveCode::Unbounded) {
      best.code = SolveCode::Unbounded;
      return best;
    }
    if (r.code == SolveCode::Optimal) {
      root.bound = r.objective;
      open.push(root);
    }
  }

  while (!open.empty()) {
    if (nodes >= opt.node_limit) {
      limit_hit = true;
      break;
    }
    Node nd = open.top();
    open.pop();
    if (nd.bound >= best.objective - opt.gap_abs) continue;

    auto r = relax(nd);
    ++nodes;
    if (r.code != SolveCode::Optimal) continue;  // infeasible subtree
    if (r.objective >= best.objective - opt.gap_abs) continue;

    // Most fractional binary, lowest index on ties.
    Eigen::Index branch = -1;
    double best_frac = opt.int_tol;
    for (auto bi : p.binaries) {
      double v = r.x[bi];
      double dist = std::min(std::abs(v), std::abs(v - 1.0));
      if (dist > best_frac + 1e-15) {
        best_frac = dist;
        branch = bi;
      }
    }

    if (branch < 0) {
      // Integral point; polish with the binaries pinned.
      QpProblem q = p.qp;
      q.lb = nd.lb;
      q.ub = nd.ub;
      for (auto bi : p.binaries) {
        double v = std::round(r.x[bi]);
        q.lb[bi] = v;
        q.ub[bi] = v;
      }
      auto rp = solve_qcqp(q, p.quad, opt.qp);
      const auto& cand = rp.code == SolveCode::Optimal ? rp : r;
      if (cand.code == SolveCode::Optimal && cand.objective < best.objective - opt.gap_abs) {
        best.code = SolveCode::Optimal;
        best.objective = cand.objective;
        best.x = cand.x;
        for (auto bi : p.binaries) best.x[bi] = std::round(best.x[bi]);
      }
      continue;
    }

    if (nd.depth >= max_depth) continue;

    Node down = nd;
    down.ub[branch] = 0.0;
    down.bound = r.objective;
    down.depth = nd.depth + 1;
    down.id = next_id++;
    Node up = nd;
    up.lb[branch] = 1.0;
    up.bound = r.objective;
    up.depth = nd.depth + 1;
    up.id = next_id++;
    open.push(down);
    open.push(up);
  }

  best.iterations = nodes;
  if (limit_hit) best.code = SolveCode::IterationLimit;
  return best;
}

SolveStatus solve_slp(const MipProblem& shell, const SlpObjective& obj,
                      const Eigen::VectorXd& x0, const SlpOptions& opt) {
  const Eigen::Index n = shell.qp.n();
  SolveStatus out;
  out.x = x0;

  auto smooth = [&](const Eigen::VectorXd& x) { return obj.value ? obj.value(x) : 0.0; };
  auto worst_violation = [&](const Eigen::VectorXd& x) {
    double v = 0.0;
    for (const auto& c : obj.constraints) v = std::max(v, c(x));
    return v;
  };

  double rho = 1e4;  // constraint-violation weight in the merit function
  auto merit = [&](const Eigen::VectorXd& x) {
    return shell.qp.objective(x) + smooth(x) + rho * worst_violation(x);
  };

  auto gradient = [&](const std::function<double(const Eigen::VectorXd&)>& f,
                      const Eigen::VectorXd& x) {
    Eigen::VectorXd g(n);
    Eigen::VectorXd xp = x;
    for (Eigen::Index i = 0; i < n; ++i) {
      double h = opt.fd_step * (1.0 + std::abs(x[i]));
      xp[i] = x[i] + h;
      double fp = f(xp);
      xp[i] = x[i] - h;
      double fm = f(xp);
      xp[i] = x[i];
      g[i] = (fp - fm) / (2.0 * h);
      if (!std::isfinite(g[i]))
        throw std::runtime_error("solve_slp: evaluator returned a non-finite value");
    }
    return g;
  };

  Eigen::VectorXd x = x0;
  double fx = merit(x);
  double radius = opt.trust_radius;
  int iter = 0;

  while (iter < opt.max_iter) {
    ++iter;
    Eigen::VectorXd g = gradient(smooth, x);

    MipProblem sub = shell;
    sub.qp.c += g;
    // Box trust region on the continuous coordinates.
    std::vector<bool> is_bin(static_cast<std::size_t>(n), false);
    for (auto bi : shell.binaries) is_bin[static_cast<std::size_t>(bi)] = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (is_bin[static_cast<std::size_t>(i)]) continue;
      double scale = 1.0 + std::abs(x[i]);
      sub.qp.lb[i] = std::max(sub.qp.lb[i], x[i] - radius * scale);
      sub.qp.ub[i] = std::min(sub.qp.ub[i], x[i] + radius * scale);
    }
    for (const auto& cf : obj.constraints) {
      double cv = cf(x);
      Eigen::VectorXd gc = gradient(cf, x);
      Eigen::Index m = sub.qp.Ain.rows();
      sub.qp.Ain.conservativeResize(m + 1, n);
      sub.qp.bin.conservativeResize(m + 1);
      sub.qp.Ain.row(m) = gc.transpose();
      sub.qp.bin[m] = gc.dot(x) - cv;
    }

    auto r = solve_miqp(sub, opt.mip);
    if (r.code == SolveCode::Infeasible) {
      if (iter == 1) {
        out.code = SolveCode::Infeasible;
        out.x = x;
        out.objective = shell.qp.objective(x) + smooth(x);
        out.iterations = iter;
        return out;
      }
      radius *= 0.5;
      if (radius < 1e-7) break;
      continue;
    }
    if (r.code != SolveCode::Optimal && r.code != SolveCode::IterationLimit) {
      out.code = r.code;
      out.x = x;
      out.iterations = iter;
      return out;
    }

    double fy = merit(r.x);
    double step = (r.x - x).lpNorm<Eigen::Infinity>();
    if (fy < fx - 1e-12) {
      x = r.x;
      fx = fy;
      if (worst_violation(x) > 1e-6) {
        rho *= 10.0;
        fx = merit(x);
      }
      if (step <= opt.stat_tol * (1.0 + x.lpNorm<Eigen::Infinity>())) break;
    } else {
      // The subproblem returning the incumbent is the stationarity
      // certificate for the linearized model.
      if (step <= opt.stat_tol * (1.0 + x.lpNorm<Eigen::Infinity>())) break;
      radius *= 0.5;
      if (radius < 1e-7) break;
    }
  }

  out.x = x;
  out.objective = shell.qp.objective(x) + smooth(x);
  out.iterations = iter;
  if (worst_violation(x) > 1e-7) {
    out.code = SolveCode::Infeasible;
  } else {
    out.code = iter >= opt.max_iter ? SolveCode::IterationLimit : SolveCode::Optimal;
  }
  return out;
}

}  // namespace aquactrl
