#pragma once

#include <functional>
#include <vector>

#include "aquactrl/network.hpp"

namespace aquactrl {

struct PwlSegment {
  double slope = 0.0;      // m~
  double intercept = 0.0;  // b~
  double q_min = 0.0;
  double q_max = 0.0;
};

// Chord linearization of one link's head-loss curve. Segments are
// contiguous, ordered by flow, and exact at every breakpoint. When the flow
// box spans zero, the first ceil(N/2) segments are assigned to reverse flow
// for the direction-selection binaries.
struct PwlLink {
  std::vector<PwlSegment> segments;
  int n_reverse = 0;
};

struct FlowBox {
  double lo = 0.0;
  double hi = 0.0;
};

struct PwlPlan {
  std::vector<PwlLink> pipes;
  std::vector<PwlLink> valves;
  std::vector<FlowBox> pipe_box;
  std::vector<FlowBox> valve_box;
  int n_pw = 0;
};

// Equal-spaced chord segments of f over [lo, hi].
std::vector<PwlSegment> chord_segments(const std::function<double(double)>& f, double lo,
                                       double hi, int n_segments);

// Builds the piecewise plan for every pipe (and open-valve loss curve) from
// the given flow boxes.
PwlPlan pwl_pipes(const Network& net, int n_pw, const std::vector<FlowBox>& pipe_bounds,
                  const std::vector<FlowBox>& valve_bounds = {});

// Symmetric default flow boxes sized from pump runout and peak demand.
std::vector<FlowBox> default_pipe_bounds(const Network& net);
std::vector<FlowBox> default_valve_bounds(const Network& net);

// Flow at which a pump's head gain reaches zero at full speed.
double pump_runout_flow(const Pump& p);

}  // namespace aquactrl
