#pragma once

#include <cstdint>
#include <vector>

#include "aquactrl/network.hpp"

namespace aquactrl {

// Heads, flows, and pump speeds for one hydraulic step.
struct HydraulicState {
  double t = 0.0;                    // s
  std::vector<double> tank_heads;    // ft, n_TK
  std::vector<double> junction_heads;  // ft, n_J
  std::vector<double> flows;         // ft^3/s, link layout {pipes, pumps, valves}
  std::vector<double> speeds;        // relative, n_M
  std::vector<double> demands;       // ft^3/s, n_J
  std::vector<bool> tank_bound_flag; // head left [h_min, h_max] after advancing
};

struct HydraulicTrajectory {
  std::vector<HydraulicState> states;  // one per hydraulic step
};

// Per-pipe spatial discretization of the transport model.
struct SegmentPlan {
  std::vector<int> segments;  // n_s per pipe, >= 1
  double dx(const Network& net, std::size_t pipe) const {
    return net.pipes[pipe].length / segments[pipe];
  }
};

class HydraulicError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Head drop through a pipe, r*q*|q|^(mu-1). Odd in q.
double pipe_headloss(double q, double r, double mu);

// Signed head change through a pump, -s^2*(h0 - alpha*(q/s)^nu).
// Throws HydraulicError for s == 0: the relation is undefined and the
// caller must branch to the off-pump convention.
double pump_headgain(double q, double s, const Pump& pump);

// Head drop through an open valve, m*q*|q|.
double valve_headloss(double q, double m);

struct SolveOptions {
  double tolerance = 1e-8;  // ft^3/s junction residual, ft head residual
  int max_iterations = 50;
};

// Steady-state solve of the per-step network equations: junction mass
// balance plus the link head relations, with tank/reservoir heads fixed.
// Off pumps (s = 0) and pumps that cannot meet the required lift carry
// zero flow (check-valve convention). Closed valves decouple their
// endpoints. Throws HydraulicError on non-convergence or when a positive
// demand cannot reach any fixed-head source.
HydraulicState solve_hydraulic_step(const Network& net, const std::vector<double>& speeds,
                                    const std::vector<double>& demands,
                                    const std::vector<double>& tank_heads,
                                    std::size_t step_index = 0,
                                    const SolveOptions& opt = {});

// Explicit tank head update over one hydraulic step,
// w_i += (dt_H/A_i) * (inflow - outflow). Reservoirs are unaffected.
// Heads leaving [h_min, h_max] are flagged on the returned state copy.
std::vector<double> advance_tanks(const Network& net, const HydraulicState& state,
                                  std::vector<bool>* bound_flags = nullptr);

// Chains solve_hydraulic_step / advance_tanks over the horizon.
// speed_schedule[k] holds the pump speeds for step k.
HydraulicTrajectory simulate_hydraulics(const Network& net,
                                        const std::vector<std::vector<double>>& speed_schedule,
                                        const SolveOptions& opt = {});

// Mean flow velocity in a pipe, |q| / (pi r^2).
double pipe_velocity(const Network& net, std::size_t pipe, double q);

// Segment count for one pipe under one sizing scenario; v <= 0 hits the cap.
int segments_for_velocity(double length, double v, double dt, int n_max);

// Deterministic sizing core: per pipe, the minimum over scenarios of the
// per-velocity count. scenarios[k][p] is the velocity of pipe p in scenario k.
SegmentPlan plan_from_scenario_velocities(const Network& net,
                                          const std::vector<std::vector<double>>& scenarios,
                                          int n_max = 200);

// Offline segment sizing: random pump speeds in (0, s_max] and random
// demand steps are solved; each pipe gets the minimum over scenarios of
// max(1, floor(L/(v dt_WQ))), capped at n_max. The result keeps the
// Courant number <= 1 on every sampled scenario.
SegmentPlan size_segments(const Network& net, int scenario_count, std::uint64_t seed,
                          int n_max = 200);

// Single-state plan per the transport model's own definition,
// n_s = max(1, floor(L/(v dt_WQ))) capped at n_cap. Used by the per-step
// controllability analysis.
SegmentPlan per_step_plan(const Network& net, const HydraulicState& state, int n_cap = 1000);

}  // namespace aquactrl
