#include "aquactrl/water_quality.hpp"

#include <cmath>
#include <numbers>

namespace aquactrl {

double pipe_decay_rate(const DecayParams& d, double r_P) {
  if (r_P <= 0) throw WqError("pipe radius must be positive");
  if (d.k_w == 0.0 || d.k_f == 0.0) return d.k_b;
  return d.k_b + 2.0 * d.k_w * d.k_f / (r_P * (d.k_w + d.k_f));
}

CourantCheck courant(double v, double dt, double dx) {
  if (dx <= 0 || dt <= 0) throw WqError("courant: dt and dx must be positive");
  CourantCheck c;
  c.lambda = v * dt / dx;
  c.advancing = c.lambda > 0.0;
  c.stable = c.advancing && c.lambda <= 1.0 + 1e-12;
  return c;
}

WqIndexMap make_index_map(const Network& net, const SegmentPlan& plan) {
  if (plan.segments.size() != net.n_pipes())
    throw WqError("segment plan does not match pipe count");
  WqIndexMap m;
  m.n_r = net.n_reservoirs();
  m.n_j = net.n_junctions();
  m.n_tk = net.n_tanks();
  m.n_m = net.n_pumps();
  m.n_v = net.n_valves();
  int off = static_cast<int>(m.n_r + m.n_j + m.n_tk + m.n_m + m.n_v);
  for (std::size_t p = 0; p < net.n_pipes(); ++p) {
    if (plan.segments[p] < 1) throw WqError("segment count must be >= 1");
    m.pipe_offset.push_back(off);
    m.pipe_segments.push_back(plan.segments[p]);
    off += plan.segments[p];
  }
  m.n_x = static_cast<std::size_t>(off);
  return m;
}

std::vector<std::string> state_labels(const Network& net, const SegmentPlan& plan) {
  std::vector<std::string> out;
  for (const auto& r : net.reservoirs) out.push_back("R:" + r.id);
  for (const auto& j : net.junctions) out.push_back("J:" + j.id);
  for (const auto& t : net.tanks) out.push_back("TK:" + t.id);
  for (const auto& m : net.pumps) out.push_back("M:" + m.id);
  for (const auto& v : net.valves) out.push_back("V:" + v.id);
  for (std::size_t p = 0; p < net.n_pipes(); ++p)
    for (int s = 0; s < plan.segments[p]; ++s)
      out.push_back("P:" + net.pipes[p].id + "[" + std::to_string(s + 1) + "]");
  return out;
}

namespace {

// State index holding the concentration that link k delivers into its
// downstream node: the flow-adjacent boundary segment for pipes, the link's
// own state for pumps and valves.
std::size_t delivery_index(const Network& net, const WqIndexMap& map, LinkRef lk,
                           double q) {
  if (lk.kind == LinkKind::Pipe) {
    int ns = map.pipe_segments[lk.index];
    return q >= 0 ? map.pipe_seg(lk.index, ns - 1) : map.pipe_seg(lk.index, 0);
  }
  if (lk.kind == LinkKind::Pump) return map.pump(lk.index);
  return map.valve(lk.index);
}

}  // namespace

WqSystem assemble_wq(const Network& net, const HydraulicState& state,
                     const SegmentPlan& plan) {
  const double dt = net.dt_wq;
  WqSystem sys;
  sys.map = make_index_map(net, plan);
  sys.labels = state_labels(net, plan);
  sys.dt_wq = dt;
  sys.hyd_step = step_of_time(net, state.t);
  const auto& map = sys.map;
  const auto links = net.all_links();

  // Unbalanced junctions mean the state was never solved.
  {
    std::vector<double> resid(net.n_junctions(), 0.0);
    for (std::size_t i = 0; i < net.n_junctions(); ++i) resid[i] = -state.demands[i];
    for (std::size_t k = 0; k < links.size(); ++k) {
      NodeRef a = net.link_from(links[k]);
      NodeRef b = net.link_to(links[k]);
      if (a.kind == NodeKind::Junction) resid[a.index] -= state.flows[k];
      if (b.kind == NodeKind::Junction) resid[b.index] += state.flows[k];
    }
    for (std::size_t i = 0; i < resid.size(); ++i)
      if (std::abs(resid[i]) > 1e-6)
        throw WqError("unsolved hydraulic state: junction " + net.junctions[i].id +
                      " is off balance by " + std::to_string(resid[i]));
  }

  const auto n = static_cast<Eigen::Index>(map.n_x);
  sys.A = Eigen::MatrixXd::Zero(n, n);
  sys.B = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(net.boosters.size()));

  // Reservoirs hold their concentration.
  for (std::size_t i = 0; i < map.n_r; ++i) {
    auto r = static_cast<Eigen::Index>(map.reservoir(i));
    sys.A(r, r) = 1.0;
  }

  // Per-node inflow/outflow bookkeeping.
  std::vector<std::vector<std::pair<std::size_t, double>>> inflow(map.n_j + map.n_tk);
  std::vector<double> out_sum(map.n_j + map.n_tk, 0.0);
  auto local = [&](NodeRef nd) -> int {
    if (nd.kind == NodeKind::Junction) return static_cast<int>(nd.index);
    if (nd.kind == NodeKind::Tank) return static_cast<int>(map.n_j + nd.index);
    return -1;
  };
  for (std::size_t k = 0; k < links.size(); ++k) {
    double q = state.flows[k];
    if (q == 0.0) continue;
    NodeRef a = net.link_from(links[k]);
    NodeRef b = net.link_to(links[k]);
    NodeRef up = q > 0 ? a : b;
    NodeRef dn = q > 0 ? b : a;
    int li = local(dn);
    if (li >= 0)
      inflow[static_cast<std::size_t>(li)].push_back(
          {delivery_index(net, map, links[k], q), std::abs(q)});
    int lo = local(up);
    if (lo >= 0) out_sum[static_cast<std::size_t>(lo)] += std::abs(q);
  }

  // Junction rows: flow-weighted complete mixing. A junction with no
  // throughflow and no demand holds its state.
  for (std::size_t j = 0; j < map.n_j; ++j) {
    auto row = static_cast<Eigen::Index>(map.junction(j));
    double denom = state.demands[j] + out_sum[j];
    if (denom <= 1e-12) {
      sys.A(row, row) = 1.0;
      continue;
    }
    for (const auto& [src, q] : inflow[j])
      sys.A(row, static_cast<Eigen::Index>(src)) += q / denom;
  }

  // Tank rows: volume-weighted mass balance with bulk decay.
  for (std::size_t t = 0; t < map.n_tk; ++t) {
    auto row = static_cast<Eigen::Index>(map.tank(t));
    const auto& tk = net.tanks[t];
    double v0 = tk.area * (state.tank_heads[t] - tk.elevation);
    if (v0 <= 0) throw WqError("tank volume nonpositive: " + tk.id);
    double qin = 0.0;
    for (const auto& [src, q] : inflow[map.n_j + t]) qin += q;
    double vnext = v0 + (qin - out_sum[map.n_j + t]) * dt;
    if (vnext <= 0) throw WqError("tank drains within one WQ step: " + tk.id);
    sys.A(row, row) =
        (v0 * (1.0 - tk.bulk_decay * dt) - out_sum[map.n_j + t] * dt) / vnext;
    for (const auto& [src, q] : inflow[map.n_j + t])
      sys.A(row, static_cast<Eigen::Index>(src)) += q * dt / vnext;
  }

  // Pumps and valves copy the upstream node; stagnant links hold.
  for (std::size_t k = 0; k < links.size(); ++k) {
    const auto& lk = links[k];
    if (lk.kind == LinkKind::Pipe) continue;
    auto row = static_cast<Eigen::Index>(
        lk.kind == LinkKind::Pump ? map.pump(lk.index) : map.valve(lk.index));
    double q = state.flows[k];
    if (q == 0.0) {
      sys.A(row, row) = 1.0;
      continue;
    }
    NodeRef up = q > 0 ? net.link_from(lk) : net.link_to(lk);
    sys.A(row, static_cast<Eigen::Index>(map.node(net, up))) = 1.0;
  }

  // Pipe segment rows: explicit upwind, oriented by the flow sign.
  for (std::size_t k = 0; k < links.size(); ++k) {
    const auto& lk = links[k];
    if (lk.kind != LinkKind::Pipe) continue;
    const auto& pipe = net.pipes[lk.index];
    int ns = map.pipe_segments[lk.index];
    double q = state.flows[k];
    double v = pipe_velocity(net, lk.index, q);
    double dx = pipe.length / ns;
    auto cfl = courant(v, dt, dx);
    if (cfl.advancing && !cfl.stable)
      throw WqError("unstable Courant number " + std::to_string(cfl.lambda) + " in pipe " +
                    pipe.id);
    double kP = pipe_decay_rate({pipe.decay.k_b, pipe.decay.k_w, pipe.decay.k_f},
                                pipe.radius);
    double aP = 1.0 - cfl.lambda - kP * dt;
    std::size_t up_node =
        map.node(net, q >= 0 ? net.link_from(lk) : net.link_to(lk));
    for (int s = 0; s < ns; ++s) {
      auto row = static_cast<Eigen::Index>(map.pipe_seg(lk.index, s));
      sys.A(row, row) = aP;
      if (cfl.lambda == 0.0) continue;
      // Upwind neighbor: previous segment in the flow direction, with the
      // upstream node feeding the entry segment.
      std::size_t src;
      if (q >= 0)
        src = (s == 0) ? up_node : map.pipe_seg(lk.index, s - 1);
      else
        src = (s == ns - 1) ? up_node : map.pipe_seg(lk.index, s + 1);
      sys.A(row, static_cast<Eigen::Index>(src)) = cfl.lambda;
    }
  }

  // Booster columns. Junction boosters are flow-paced (entry q_B / (q_D +
  // sum of outflows)); tank boosters inject a volume q_B * dt.
  for (std::size_t bi = 0; bi < net.boosters.size(); ++bi) {
    const auto& bo = net.boosters[bi];
    NodeRef nd = net.node(bo.node);
    auto col = static_cast<Eigen::Index>(bi);
    if (nd.kind == NodeKind::Junction) {
      double denom = state.demands[nd.index] + out_sum[nd.index];
      if (denom > 1e-12)
        sys.B(static_cast<Eigen::Index>(map.junction(nd.index)), col) = bo.flow / denom;
    } else if (nd.kind == NodeKind::Tank) {
      const auto& tk = net.tanks[nd.index];
      double v0 = tk.area * (state.tank_heads[nd.index] - tk.elevation);
      double qin = 0.0;
      for (const auto& [src, q] : inflow[map.n_j + nd.index]) qin += q;
      double vnext = v0 + (qin - out_sum[map.n_j + nd.index]) * dt;
      sys.B(static_cast<Eigen::Index>(map.tank(nd.index)), col) = bo.flow * dt / vnext;
    } else {
      throw WqError("booster at a reservoir is not supported: " + bo.node);
    }
  }

  sys.C = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(net.sensors.size()), n);
  for (std::size_t si = 0; si < net.sensors.size(); ++si) {
    NodeRef nd = net.node(net.sensors[si]);
    sys.C(static_cast<Eigen::Index>(si), static_cast<Eigen::Index>(map.node(net, nd))) =
        1.0;
  }

  return sys;
}

Eigen::VectorXd wq_step(const WqSystem& sys, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& u) {
  if (x.size() != sys.A.rows() || u.size() != sys.B.cols())
    throw WqError("wq_step: dimension mismatch");
  return sys.A * x + sys.B * u;
}

WqTrace simulate_wq(const Network& net, const HydraulicTrajectory& hyd,
                    const SegmentPlan& plan, const InjectionSchedule& u,
                    const Eigen::VectorXd& x0) {
  WqTrace trace;
  const auto inner = static_cast<std::size_t>(net.dt_hyd / net.dt_wq + 0.5);
  Eigen::VectorXd x = x0;
  double t = 0.0;
  bool first = true;
  for (const auto& st : hyd.states) {
    WqSystem sys = assemble_wq(net, st, plan);
    if (first) {
      if (x.size() != sys.A.rows()) throw WqError("simulate_wq: x0 dimension mismatch");
      trace.times.push_back(0.0);
      trace.states.push_back(x);
      trace.outputs.push_back(sys.C * x);
      first = false;
    }
    for (std::size_t k = 0; k < inner; ++k) {
      Eigen::VectorXd uk = u(t);
      x = wq_step(sys, x, uk);
      t += net.dt_wq;
      trace.times.push_back(t);
      trace.states.push_back(x);
      trace.outputs.push_back(sys.C * x);
    }
  }
  return trace;
}

}  // namespace aquactrl
