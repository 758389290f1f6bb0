#include "aquactrl/hydraulics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <random>
#include <set>

#include <Eigen/Dense>

namespace aquactrl {

double pipe_headloss(double q, double r, double mu) {
  return r * q * std::pow(std::abs(q), mu - 1.0);
}

double pump_headgain(double q, double s, const Pump& pump) {
  if (s == 0.0)
    throw HydraulicError("pump off: head relation undefined at s = 0, caller must branch");
  return -s * s * (pump.shutoff_head - pump.alpha * std::pow(q / s, pump.nu));
}

double valve_headloss(double q, double m) { return m * q * std::abs(q); }

double pipe_velocity(const Network& net, std::size_t pipe, double q) {
  double r = net.pipes[pipe].radius;
  return std::abs(q) / (std::numbers::pi * r * r);
}

namespace {

constexpr double kFlowFloor = 1e-10;  // below this, flows count as zero
// The inverted head laws have infinite slope at zero drop; below this flow
// the law is replaced by a linear core through the matching point, which
// keeps Newton regular while the induced head-relation error stays under
// r * kLinFlow^mu ~ 1e-8 ft.
constexpr double kLinFlow = 5e-5;

// Flow through a pipe/valve given the signed head drop, and its
// derivative with respect to the drop.
struct FlowDeriv {
  double q;
  double dq_ddh;
};

FlowDeriv pipe_flow(double dh, double r, double mu) {
  double dh_lin = r * std::pow(kLinFlow, mu);
  if (std::abs(dh) <= dh_lin) {
    double slope = kLinFlow / dh_lin;
    return {dh * slope, slope};
  }
  double aq = std::pow(std::abs(dh) / r, 1.0 / mu);
  double q = (dh >= 0 ? aq : -aq);
  return {q, 1.0 / (mu * r * std::pow(aq, mu - 1.0))};
}

FlowDeriv valve_flow(double dh, double m) {
  if (m <= 0.0) m = 1e-8;  // ideal open valve: near-zero loss
  double dh_lin = m * kLinFlow * kLinFlow;
  if (std::abs(dh) <= dh_lin) {
    double slope = kLinFlow / dh_lin;
    return {dh * slope, slope};
  }
  double aq = std::sqrt(std::abs(dh) / m);
  double q = (dh >= 0 ? aq : -aq);
  return {q, 1.0 / (2.0 * m * aq)};
}

// Pump flow for required lift dH = h_to - h_from at speed s > 0. The pump
// shuts (q = 0) when the lift exceeds what the curve can deliver.
FlowDeriv pump_flow(double dH, double s, const Pump& p) {
  double avail = s * s * p.shutoff_head;
  if (dH >= avail) return {0.0, 0.0};
  double u = p.shutoff_head - dH / (s * s);
  double q = s * std::pow(u / p.alpha, 1.0 / p.nu);
  double ue = std::max(u, 1e-9 * p.shutoff_head);
  double dq_ddH = -(q / (p.nu * ue)) / (s * s);
  return {q, dq_ddH};
}

}  // namespace

HydraulicState solve_hydraulic_step(const Network& net, const std::vector<double>& speeds,
                                    const std::vector<double>& demands,
                                    const std::vector<double>& tank_heads,
                                    std::size_t step_index, const SolveOptions& opt) {
  if (speeds.size() != net.n_pumps() || demands.size() != net.n_junctions() ||
      tank_heads.size() != net.n_tanks())
    throw HydraulicError("solve_hydraulic_step: dimension mismatch");
  for (std::size_t i = 0; i < speeds.size(); ++i)
    if (speeds[i] < 0.0 || speeds[i] > net.pumps[i].s_max + 1e-12)
      throw HydraulicError("pump speed outside [0, s_max]: " + net.pumps[i].id);

  auto links = net.all_links();
  std::vector<bool> conducting(links.size(), true);
  for (std::size_t k = 0; k < links.size(); ++k) {
    const auto& l = links[k];
    if (l.kind == LinkKind::Pump && speeds[l.index] == 0.0) conducting[k] = false;
    if (l.kind == LinkKind::Valve) {
      const auto& v = net.valves[l.index];
      bool open = v.open_state.empty() ? true
                                       : v.open_state[std::min(step_index, v.open_state.size() - 1)];
      conducting[k] = open;
    }
  }

  // Junctions reachable from a fixed-head node through conducting links are
  // solved; isolated zero-demand junctions rest at their elevation.
  std::size_t nj = net.n_junctions();
  std::vector<bool> reachable(nj, false);
  {
    std::map<std::string, std::vector<std::string>> adj;
    for (std::size_t k = 0; k < links.size(); ++k) {
      if (!conducting[k]) continue;
      const auto& a = net.link_from_id(links[k]);
      const auto& b = net.link_to_id(links[k]);
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
    std::queue<std::string> q;
    std::set<std::string> seen;
    for (const auto& r : net.reservoirs) {
      q.push(r.id);
      seen.insert(r.id);
    }
    for (const auto& t : net.tanks) {
      q.push(t.id);
      seen.insert(t.id);
    }
    while (!q.empty()) {
      auto cur = q.front();
      q.pop();
      for (const auto& nb : adj[cur])
        if (seen.insert(nb).second) q.push(nb);
    }
    for (std::size_t i = 0; i < nj; ++i) {
      reachable[i] = seen.count(net.junctions[i].id) > 0;
      if (!reachable[i] && demands[i] > opt.tolerance)
        throw HydraulicError("disconnected demand node: " + net.junctions[i].id);
    }
  }

  std::vector<int> unknown(nj, -1);
  std::vector<std::size_t> unk_list;
  for (std::size_t i = 0; i < nj; ++i)
    if (reachable[i]) {
      unknown[i] = static_cast<int>(unk_list.size());
      unk_list.push_back(i);
    }
  const std::size_t nu = unk_list.size();

  // Initial guess: mean of the fixed heads keeps the first Newton step on
  // the right scale regardless of network datum.
  double href = 0.0;
  std::size_t nfix = net.n_reservoirs() + net.n_tanks();
  if (nfix > 0) {
    for (const auto& r : net.reservoirs) href += r.head;
    for (double w : tank_heads) href += w;
    href /= static_cast<double>(nfix);
  }
  Eigen::VectorXd l = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(nu), href);

  auto head_of = [&](NodeRef n, const Eigen::VectorXd& lv) {
    if (n.kind == NodeKind::Junction) {
      int u = unknown[n.index];
      return u >= 0 ? lv[u] : net.junctions[n.index].elevation;
    }
    return net.fixed_head(n, tank_heads);
  };

  std::vector<double> flows(links.size(), 0.0);
  std::vector<double> dqs(links.size(), 0.0);

  auto eval = [&](const Eigen::VectorXd& lv, Eigen::VectorXd& F) {
    F.setZero(static_cast<Eigen::Index>(nu));
    for (std::size_t i = 0; i < nu; ++i) F[static_cast<Eigen::Index>(i)] = -demands[unk_list[i]];
    for (std::size_t k = 0; k < links.size(); ++k) {
      if (!conducting[k]) {
        flows[k] = 0.0;
        dqs[k] = 0.0;
        continue;
      }
      const auto& lk = links[k];
      NodeRef a = net.link_from(lk);
      NodeRef b = net.link_to(lk);
      double ha = head_of(a, lv);
      double hb = head_of(b, lv);
      FlowDeriv fd{};
      switch (lk.kind) {
        case LinkKind::Pipe: {
          const auto& p = net.pipes[lk.index];
          fd = pipe_flow(ha - hb, p.resistance, p.exponent);
          break;
        }
        case LinkKind::Valve:
          fd = valve_flow(ha - hb, net.valves[lk.index].minor_loss);
          break;
        case LinkKind::Pump:
          fd = pump_flow(hb - ha, speeds[lk.index], net.pumps[lk.index]);
          break;
      }
      flows[k] = fd.q;
      dqs[k] = fd.dq_ddh;
      if (a.kind == NodeKind::Junction && unknown[a.index] >= 0)
        F[unknown[a.index]] -= fd.q;
      if (b.kind == NodeKind::Junction && unknown[b.index] >= 0)
        F[unknown[b.index]] += fd.q;
    }
  };

  Eigen::VectorXd F(static_cast<Eigen::Index>(nu));
  eval(l, F);
  double resid = nu > 0 ? F.lpNorm<Eigen::Infinity>() : 0.0;

  int iter = 0;
  while (resid > opt.tolerance) {
    if (++iter > opt.max_iterations)
      throw HydraulicError("no convergence after " + std::to_string(opt.max_iterations) +
                           " iterations (residual " + std::to_string(resid) + ")");
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nu),
                                              static_cast<Eigen::Index>(nu));
    for (std::size_t k = 0; k < links.size(); ++k) {
      if (!conducting[k] || dqs[k] == 0.0) continue;
      const auto& lk = links[k];
      NodeRef a = net.link_from(lk);
      NodeRef b = net.link_to(lk);
      int ua = (a.kind == NodeKind::Junction) ? unknown[a.index] : -1;
      int ub = (b.kind == NodeKind::Junction) ? unknown[b.index] : -1;
      // For pipes/valves q = g(ha - hb); for pumps q = p(hb - ha) with
      // dqs already holding dq/d(hb - ha).
      double sgn = (lk.kind == LinkKind::Pump) ? -1.0 : 1.0;
      double d = sgn * dqs[k];
      if (ua >= 0) {
        J(ua, ua) -= d;
        if (ub >= 0) J(ua, ub) += d;
      }
      if (ub >= 0) {
        J(ub, ub) -= d;
        if (ua >= 0) J(ub, ua) += d;
      }
    }

    Eigen::VectorXd dl = J.fullPivLu().solve(-F);
    if (!dl.allFinite()) throw HydraulicError("singular Jacobian in hydraulic solve");

    // Damped step: best residual over a fixed ladder. The 0.54 entry is
    // 1/mu, the optimal damping at the head laws' degenerate zero-flow
    // roots where full Newton steps oscillate.
    static constexpr double kLadder[] = {1.0, 0.54, 0.25, 0.1, 0.04, 0.01, 0.002};
    double best_r = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_l, best_F, Ftrial(F.size());
    for (double alpha : kLadder) {
      Eigen::VectorXd ltrial = l + alpha * dl;
      eval(ltrial, Ftrial);
      double r = Ftrial.lpNorm<Eigen::Infinity>();
      if (r < best_r) {
        best_r = r;
        best_l = ltrial;
        best_F = Ftrial;
      }
      if (r <= opt.tolerance) break;
    }
    if (best_r >= resid && best_r > opt.tolerance)
      throw HydraulicError("no convergence: residual stalled at " + std::to_string(best_r));
    l = best_l;
    F = best_F;
    resid = best_r;
  }

  eval(l, F);  // refresh flows at the converged point

  HydraulicState st;
  st.t = static_cast<double>(step_index) * net.dt_hyd;
  st.tank_heads = tank_heads;
  st.junction_heads.resize(nj);
  for (std::size_t i = 0; i < nj; ++i)
    st.junction_heads[i] =
        unknown[i] >= 0 ? l[unknown[i]] : net.junctions[i].elevation;
  st.flows.assign(links.size(), 0.0);
  for (std::size_t k = 0; k < links.size(); ++k)
    st.flows[k] = std::abs(flows[k]) < kFlowFloor ? 0.0 : flows[k];
  st.speeds = speeds;
  st.demands = demands;
  st.tank_bound_flag.assign(net.n_tanks(), false);
  return st;
}

std::vector<double> advance_tanks(const Network& net, const HydraulicState& state,
                                  std::vector<bool>* bound_flags) {
  std::vector<double> next = state.tank_heads;
  auto links = net.all_links();
  for (std::size_t ti = 0; ti < net.n_tanks(); ++ti) {
    const auto& tk = net.tanks[ti];
    double qnet = 0.0;
    for (std::size_t k = 0; k < links.size(); ++k) {
      NodeRef a = net.link_from(links[k]);
      NodeRef b = net.link_to(links[k]);
      if (a.kind == NodeKind::Tank && a.index == ti) qnet -= state.flows[k];
      if (b.kind == NodeKind::Tank && b.index == ti) qnet += state.flows[k];
    }
    next[ti] += net.dt_hyd / tk.area * qnet;
    if (bound_flags) {
      bool out = next[ti] < tk.h_min - 1e-9 || next[ti] > tk.h_max + 1e-9;
      (*bound_flags)[ti] = out;
    }
  }
  return next;
}

HydraulicTrajectory simulate_hydraulics(const Network& net,
                                        const std::vector<std::vector<double>>& speed_schedule,
                                        const SolveOptions& opt) {
  if (speed_schedule.size() != net.n_steps())
    throw HydraulicError("speed schedule length must equal the number of hydraulic steps");
  HydraulicTrajectory traj;
  std::vector<double> w(net.n_tanks());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = net.tanks[i].h_init;
  for (std::size_t k = 0; k < net.n_steps(); ++k) {
    double t = static_cast<double>(k) * net.dt_hyd;
    auto demands = demand_vector(net, t);
    HydraulicState st;
    try {
      st = solve_hydraulic_step(net, speed_schedule[k], demands, w, k, opt);
    } catch (const HydraulicError& e) {
      throw HydraulicError("step " + std::to_string(k) + ": " + e.what());
    }
    st.tank_bound_flag.assign(net.n_tanks(), false);
    w = advance_tanks(net, st, &st.tank_bound_flag);
    traj.states.push_back(std::move(st));
  }
  return traj;
}

int segments_for_velocity(double length, double v, double dt, int n_max) {
  if (v <= 0.0) return n_max;
  double n = std::floor(length / (v * dt));
  if (n < 1.0) return 1;
  if (n > static_cast<double>(n_max)) return n_max;
  return static_cast<int>(n);
}

SegmentPlan plan_from_scenario_velocities(const Network& net,
                                          const std::vector<std::vector<double>>& scenarios,
                                          int n_max) {
  SegmentPlan plan;
  plan.segments.assign(net.n_pipes(), n_max);
  for (const auto& vs : scenarios) {
    for (std::size_t p = 0; p < net.n_pipes(); ++p) {
      int n = segments_for_velocity(net.pipes[p].length, vs[p], net.dt_wq, n_max);
      plan.segments[p] = std::min(plan.segments[p], n);
    }
  }
  for (auto& n : plan.segments) n = std::max(n, 1);
  return plan;
}

SegmentPlan size_segments(const Network& net, int scenario_count, std::uint64_t seed,
                          int n_max) {
  if (scenario_count < 1) throw HydraulicError("scenario_count must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  std::vector<std::vector<double>> scenario_velocities;

  // Deterministic envelope scenarios: full speed against the lowest tank
  // heads, with zero and with peak demand, bound the sampled velocities.
  {
    std::vector<double> speeds(net.n_pumps());
    for (std::size_t m = 0; m < speeds.size(); ++m) speeds[m] = net.pumps[m].s_max;
    std::vector<double> w(net.n_tanks());
    for (std::size_t t = 0; t < w.size(); ++t) w[t] = net.tanks[t].h_min;
    std::vector<double> zero(net.n_junctions(), 0.0);
    std::vector<double> peak(net.n_junctions(), 0.0);
    for (std::size_t j = 0; j < net.n_junctions(); ++j) {
      const auto& jn = net.junctions[j];
      double mult = 1.0;
      if (!jn.pattern.empty())
        for (double mm : net.patterns.at(jn.pattern).multipliers) mult = std::max(mult, mm);
      peak[j] = jn.demand_base * mult;
    }
    for (const auto& demands : {zero, peak}) {
      std::vector<double> vs(net.n_pipes(), 0.0);
      try {
        auto st = solve_hydraulic_step(net, speeds, demands, w, 0);
        for (std::size_t pi = 0; pi < net.n_pipes(); ++pi)
          vs[pi] = pipe_velocity(net, pi, st.flows[pi]);
      } catch (const HydraulicError&) {
      }
      scenario_velocities.push_back(std::move(vs));
    }
  }

  for (int sc = 0; sc < scenario_count; ++sc) {
    std::vector<double> speeds(net.n_pumps());
    for (std::size_t m = 0; m < speeds.size(); ++m)
      speeds[m] = uni(rng) * net.pumps[m].s_max;
    std::size_t step = net.n_steps() > 0
                           ? static_cast<std::size_t>(uni(rng) * static_cast<double>(net.n_steps())) %
                                 net.n_steps()
                           : 0;
    std::vector<double> w(net.n_tanks());
    for (std::size_t t = 0; t < w.size(); ++t) {
      const auto& tk = net.tanks[t];
      w[t] = tk.h_min + uni(rng) * (tk.h_max - tk.h_min);
    }
    auto demands = demand_vector(net, static_cast<double>(step) * net.dt_hyd);
    std::vector<double> vs(net.n_pipes(), 0.0);
    try {
      auto st = solve_hydraulic_step(net, speeds, demands, w, step);
      for (std::size_t p = 0; p < net.n_pipes(); ++p)
        vs[p] = pipe_velocity(net, p, st.flows[p]);
    } catch (const HydraulicError&) {
      // Unsolvable sample (e.g. all pumps shut against the lift): treat as
      // stagnant, which only loosens this scenario's requirement.
    }
    scenario_velocities.push_back(std::move(vs));
  }
  return plan_from_scenario_velocities(net, scenario_velocities, n_max);
}

SegmentPlan per_step_plan(const Network& net, const HydraulicState& state, int n_cap) {
  SegmentPlan plan;
  plan.segments.resize(net.n_pipes());
  for (std::size_t p = 0; p < net.n_pipes(); ++p) {
    double v = pipe_velocity(net, p, state.flows[p]);
    plan.segments[p] = segments_for_velocity(net.pipes[p].length, v, net.dt_wq, n_cap);
  }
  return plan;
}

}  // namespace aquactrl
