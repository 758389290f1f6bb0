#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aquactrl/hydraulics.hpp"
#include "aquactrl/network.hpp"

namespace aquactrl {

struct DecayParams {
  double k_b = 0.0;  // 1/s
  double k_w = 0.0;  // ft/s
  double k_f = 0.0;  // ft/s
};

// First-order pipe decay rate, k_b + 2 k_w k_f / (r_P (k_w + k_f)).
double pipe_decay_rate(const DecayParams& d, double r_P);

struct CourantCheck {
  double lambda = 0.0;
  bool advancing = false;  // lambda > 0
  bool stable = false;     // 0 < lambda <= 1
};

CourantCheck courant(double v, double dt, double dx);

// State index layout over {reservoirs, junctions, tanks, pumps, valves,
// pipe segments}, matching the transport model's row ordering.
struct WqIndexMap {
  std::size_t n_r = 0, n_j = 0, n_tk = 0, n_m = 0, n_v = 0;
  std::vector<int> pipe_offset;  // first segment row per pipe
  std::vector<int> pipe_segments;
  std::size_t n_x = 0;

  std::size_t reservoir(std::size_t i) const { return i; }
  std::size_t junction(std::size_t i) const { return n_r + i; }
  std::size_t tank(std::size_t i) const { return n_r + n_j + i; }
  std::size_t pump(std::size_t i) const { return n_r + n_j + n_tk + i; }
  std::size_t valve(std::size_t i) const { return n_r + n_j + n_tk + n_m + i; }
  std::size_t pipe_seg(std::size_t p, int s) const {
    return static_cast<std::size_t>(pipe_offset[p] + s);
  }
  std::size_t node(const Network& net, NodeRef n) const {
    switch (n.kind) {
      case NodeKind::Reservoir: return reservoir(n.index);
      case NodeKind::Junction: return junction(n.index);
      default: return tank(n.index);
    }
  }
};

WqIndexMap make_index_map(const Network& net, const SegmentPlan& plan);

std::vector<std::string> state_labels(const Network& net, const SegmentPlan& plan);

// Time-varying linear chlorine system for one hydraulic step. A and B stay
// constant across the WQ steps inside that hydraulic step.
struct WqSystem {
  Eigen::MatrixXd A;  // n_x x n_x
  Eigen::MatrixXd B;  // n_x x n_u (one column per booster)
  Eigen::MatrixXd C;  // n_y x n_x sensor selector
  WqIndexMap map;
  std::vector<std::string> labels;
  double dt_wq = 0.0;
  std::size_t hyd_step = 0;
};

class WqError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Builds (A, B, C) from one solved hydraulic state. Junction rows mix
// inflows weighted by flow, tank rows carry the volume-weighted balance
// with decay, pump/valve rows copy their upstream node, and pipe segments
// follow the explicit upwind stencil oriented by the flow sign. Throws on
// an unstable Courant number or an unbalanced (unsolved) state.
WqSystem assemble_wq(const Network& net, const HydraulicState& state,
                     const SegmentPlan& plan);

// One transport step, x' = A x + B u.
Eigen::VectorXd wq_step(const WqSystem& sys, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& u);

struct WqTrace {
  std::vector<double> times;            // sample times incl. t = 0
  std::vector<Eigen::VectorXd> states;  // x at each sample
  std::vector<Eigen::VectorXd> outputs; // y = C x at each sample
  std::size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
};

using InjectionSchedule = std::function<Eigen::VectorXd(double t)>;

// Chains assemble_wq per hydraulic step and wq_step inside it.
WqTrace simulate_wq(const Network& net, const HydraulicTrajectory& hyd,
                    const SegmentPlan& plan, const InjectionSchedule& u,
                    const Eigen::VectorXd& x0);

}  // namespace aquactrl
