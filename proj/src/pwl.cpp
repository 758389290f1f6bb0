#include "aquactrl/pwl.hpp"

#include <cmath>

#include "aquactrl/hydraulics.hpp"

namespace aquactrl {

std::vector<PwlSegment> chord_segments(const std::function<double(double)>& f, double lo,
                                       double hi, int n_segments) {
  if (n_segments < 1) throw InputError("chord_segments: need at least one segment");
  if (!(hi > lo)) throw InputError("chord_segments: zero-width flow box");
  std::vector<PwlSegment> out;
  out.reserve(static_cast<std::size_t>(n_segments));
  double prev_q = lo;
  double prev_f = f(lo);
  for (int k = 1; k <= n_segments; ++k) {
    double q = lo + (hi - lo) * static_cast<double>(k) / n_segments;
    double fq = f(q);
    PwlSegment s;
    s.q_min = prev_q;
    s.q_max = q;
    s.slope = (fq - prev_f) / (q - prev_q);
    s.intercept = prev_f - s.slope * prev_q;
    out.push_back(s);
    prev_q = q;
    prev_f = fq;
  }
  return out;
}

namespace {

PwlLink make_link(const std::function<double(double)>& f, const FlowBox& box, int n_pw) {
  PwlLink link;
  link.segments = chord_segments(f, box.lo, box.hi, n_pw);
  if (box.lo < 0.0 && box.hi > 0.0)
    link.n_reverse = (n_pw + 1) / 2;
  else if (box.hi <= 0.0)
    link.n_reverse = n_pw;
  else
    link.n_reverse = 0;
  return link;
}

}  // namespace

PwlPlan pwl_pipes(const Network& net, int n_pw, const std::vector<FlowBox>& pipe_bounds,
                  const std::vector<FlowBox>& valve_bounds) {
  if (pipe_bounds.size() != net.n_pipes())
    throw InputError("pwl_pipes: one flow box per pipe required");
  PwlPlan plan;
  plan.n_pw = n_pw;
  plan.pipe_box = pipe_bounds;
  for (std::size_t p = 0; p < net.n_pipes(); ++p) {
    const auto& pipe = net.pipes[p];
    auto f = [&pipe](double q) { return pipe_headloss(q, pipe.resistance, pipe.exponent); };
    plan.pipes.push_back(make_link(f, pipe_bounds[p], n_pw));
  }
  plan.valve_box = valve_bounds.empty() ? default_valve_bounds(net) : valve_bounds;
  for (std::size_t v = 0; v < net.n_valves(); ++v) {
    double m = net.valves[v].minor_loss;
    auto f = [m](double q) { return valve_headloss(q, m); };
    plan.valves.push_back(make_link(f, plan.valve_box[v], n_pw));
  }
  return plan;
}

double pump_runout_flow(const Pump& p) {
  return p.s_max * std::pow(p.shutoff_head / p.alpha, 1.0 / p.nu);
}

namespace {

double network_flow_scale(const Network& net) {
  double peak_demand = 0.0;
  for (const auto& j : net.junctions) {
    double mult = 1.0;
    if (!j.pattern.empty()) {
      const auto& pat = net.patterns.at(j.pattern).multipliers;
      for (double m : pat) mult = std::max(mult, m);
    }
    peak_demand += j.demand_base * mult;
  }
  double runout = 0.0;
  for (const auto& m : net.pumps) runout = std::max(runout, pump_runout_flow(m));
  return std::max({1.0, 1.5 * peak_demand, 1.1 * runout});
}

}  // namespace

std::vector<FlowBox> default_pipe_bounds(const Network& net) {
  double q = network_flow_scale(net);
  return std::vector<FlowBox>(net.n_pipes(), FlowBox{-q, q});
}

std::vector<FlowBox> default_valve_bounds(const Network& net) {
  double q = network_flow_scale(net);
  return std::vector<FlowBox>(net.n_valves(), FlowBox{-q, q});
}

}  // namespace aquactrl
