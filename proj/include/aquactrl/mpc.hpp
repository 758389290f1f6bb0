#pragma once

#include <vector>

#include "aquactrl/optkern.hpp"
#include "aquactrl/scheduling.hpp"
#include "aquactrl/water_quality.hpp"

namespace aquactrl {

struct MpcConfig {
  int horizon = 30;        // prediction horizon, WQ steps
  double q_weight = 1.0;   // tracking weight on sensor outputs
  double r_weight = 0.1;   // input weight
  double y_ref = 2.0;      // mg/L setpoint
  double x_min = 0.2;      // mg/L state bounds
  double x_max = 4.0;
  double u_max = 4.0;      // mg/L injected concentration cap
  bool soften_state_bounds = false;
  double slack_penalty = 1e6;
  double band = 0.05;      // setpoint band for time-to-setpoint

  void validate() const {
    if (x_min >= x_max) throw InputError("mpc config: x_min must be below x_max");
    if (horizon < 1) throw InputError("mpc config: horizon must be >= 1");
    if (r_weight <= 0) throw InputError("mpc config: input weight must be positive");
  }
};

struct MpcResult {
  std::vector<double> times;                // injection times
  std::vector<Eigen::VectorXd> injections;  // u per WQ step
  std::vector<SolveCode> statuses;
  WqTrace trace;                            // realized closed loop
  double total_mass_g = 0.0;                // injected chlorine mass
  double time_to_setpoint = -1.0;           // s, -1 when never reached
};

// One receding-horizon move: minimizes tracking error plus input effort
// over the (possibly time-varying) system sequence, subject to the state
// box and input bounds; returns the first input.
Eigen::VectorXd mpc_step(const std::vector<const WqSystem*>& horizon_systems,
                         const Eigen::VectorXd& x_now, const MpcConfig& cfg,
                         SolveCode* status = nullptr);

// Closed loop over a schedule's hydraulics: assemble per hydraulic step,
// one QP per WQ step, advance through the transport recursion.
MpcResult run_closed_loop(const Network& net, const ScheduleResult& schedule,
                          const SegmentPlan& plan, const MpcConfig& cfg,
                          const Eigen::VectorXd& x0);

MpcResult run_closed_loop(const Network& net, const HydraulicTrajectory& traj,
                          const SegmentPlan& plan, const MpcConfig& cfg,
                          const Eigen::VectorXd& x0);

}  // namespace aquactrl
