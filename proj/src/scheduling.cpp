#include "aquactrl/scheduling.hpp"

#include <algorithm>
#include <cmath>

#include "aquactrl/gramian.hpp"
#include "aquactrl/water_quality.hpp"

namespace aquactrl {

std::string to_string(PumpStatus s) {
  switch (s) {
    case PumpStatus::On: return "On";
    case PumpStatus::Bypass: return "Bypass";
    case PumpStatus::CheckValveShut: return "CheckValveShut";
    case PumpStatus::Off: return "Off";
  }
  return "?";
}

ScheduleFits make_fits(const Network& net, double tariff_per_kwh, int n_pw,
                       EfficiencyModel eta) {
  ScheduleFits fits;
  fits.pwl = pwl_pipes(net, n_pw, default_pipe_bounds(net), default_valve_bounds(net));
  fits.tariff = tariff_per_kwh;
  fits.eta = eta;
  for (const auto& pump : net.pumps) {
    auto grid = default_operating_grid(pump);
    fits.curves.push_back(fit_pump_curve(pump, grid));
    fits.power.push_back(fit_power(pump, tariff_per_kwh, eta, grid));
  }
  return fits;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool valve_open(const Network& net, std::size_t v, std::size_t step) {
  const auto& va = net.valves[v];
  return va.open_state.empty() ? true
                               : va.open_state[std::min(step, va.open_state.size() - 1)];
}

}  // namespace

StepProblem build_decoupled(const Network& net, const ScheduleFits& fits, std::size_t step,
                            const std::vector<double>& tank_heads,
                            const std::vector<double>& demands) {
  if (fits.curves.size() != net.n_pumps() || fits.power.size() != net.n_pumps())
    throw SchedError("missing pump fits");
  StepProblem p;
  p.step = step;
  p.tank_heads = tank_heads;
  p.demands = demands;

  const auto nj = static_cast<Eigen::Index>(net.n_junctions());
  const auto nl = static_cast<Eigen::Index>(net.n_links());
  const auto ntk = static_cast<Eigen::Index>(net.n_tanks());
  const auto nm = static_cast<Eigen::Index>(net.n_pumps());

  auto& map = p.map;
  map.l0 = 0;
  map.z0 = nj;
  map.w0 = nj + nl;
  map.s0 = nj + nl + ntk;
  Eigen::Index off = map.s0 + nm;
  map.n_pipes = net.n_pipes();
  // PWL blocks: every pipe, then every open valve.
  std::vector<const PwlLink*> pwl_links;
  std::vector<LinkRef> pwl_refs;
  for (std::size_t i = 0; i < net.n_pipes(); ++i) {
    pwl_links.push_back(&fits.pwl.pipes[i]);
    pwl_refs.push_back({LinkKind::Pipe, i});
  }
  for (std::size_t v = 0; v < net.n_valves(); ++v) {
    if (!valve_open(net, v, step)) continue;
    pwl_links.push_back(&fits.pwl.valves[v]);
    pwl_refs.push_back({LinkKind::Valve, v});
  }
  for (const auto* link : pwl_links) {
    auto nseg = static_cast<Eigen::Index>(link->segments.size());
    map.zeta0.push_back(off);
    off += nseg;
    map.omega0.push_back(off);
    off += nseg;
    map.seg_count.push_back(static_cast<int>(nseg));
  }
  map.n = off;

  auto& qp = p.mip.qp;
  qp.resize(map.n);

  // Objective: per-pump second-order cost rate times the step length in
  // hours (tariff already folded into the fit).
  const double hours = net.dt_hyd / 3600.0;
  for (Eigen::Index m = 0; m < nm; ++m) {
    const auto& pf = fits.power[static_cast<std::size_t>(m)];
    Eigen::Index q = map.z0 + static_cast<Eigen::Index>(net.link_offset(LinkKind::Pump)) + m;
    Eigen::Index s = map.s0 + m;
    qp.P(q, q) += 2.0 * pf.theta3 * hours;
    qp.P(s, s) += 2.0 * pf.theta5 * hours;
    qp.P(q, s) += pf.theta6 * hours;
    qp.P(s, q) += pf.theta6 * hours;
    qp.c[q] += pf.theta2 * hours;
    qp.c[s] += pf.theta4 * hours;
    p.objective_offset += pf.theta1 * hours;
  }

  // Equalities: junction balance, tank dynamics, PWL head and flow rows,
  // segment selection.
  std::vector<Eigen::VectorXd> eq_rows;
  std::vector<double> eq_rhs;
  auto new_eq = [&]() -> std::pair<Eigen::VectorXd*, double*> {
    eq_rows.emplace_back(Eigen::VectorXd::Zero(map.n));
    eq_rhs.push_back(0.0);
    return {&eq_rows.back(), &eq_rhs.back()};
  };

  const auto links = net.all_links();
  // Junction mass balance: sum(in) - sum(out) = demand.
  for (Eigen::Index j = 0; j < nj; ++j) {
    auto [row, rhs] = new_eq();
    for (std::size_t k = 0; k < links.size(); ++k) {
      NodeRef a = net.link_from(links[k]);
      NodeRef b = net.link_to(links[k]);
      auto zk = map.z0 + static_cast<Eigen::Index>(k);
      if (a.kind == NodeKind::Junction && static_cast<Eigen::Index>(a.index) == j)
        (*row)[zk] -= 1.0;
      if (b.kind == NodeKind::Junction && static_cast<Eigen::Index>(b.index) == j)
        (*row)[zk] += 1.0;
    }
    *rhs = demands[static_cast<std::size_t>(j)];
  }
  // Tank dynamics: w_next - (dt/A) * net inflow = w_now.
  for (Eigen::Index t = 0; t < ntk; ++t) {
    auto [row, rhs] = new_eq();
    const auto& tk = net.tanks[static_cast<std::size_t>(t)];
    (*row)[map.w0 + t] = 1.0;
    double c = net.dt_hyd / tk.area;
    for (std::size_t k = 0; k < links.size(); ++k) {
      NodeRef a = net.link_from(links[k]);
      NodeRef b = net.link_to(links[k]);
      auto zk = map.z0 + static_cast<Eigen::Index>(k);
      if (a.kind == NodeKind::Tank && static_cast<Eigen::Index>(a.index) == t)
        (*row)[zk] += c;
      if (b.kind == NodeKind::Tank && static_cast<Eigen::Index>(b.index) == t)
        (*row)[zk] -= c;
    }
    *rhs = tank_heads[static_cast<std::size_t>(t)];
  }

  std::vector<Eigen::VectorXd> in_rows;
  std::vector<double> in_rhs;
  auto new_in = [&]() -> std::pair<Eigen::VectorXd*, double*> {
    in_rows.emplace_back(Eigen::VectorXd::Zero(map.n));
    in_rhs.push_back(0.0);
    return {&in_rows.back(), &in_rhs.back()};
  };

  // PWL links: head-loss linkage, flow equality, segment selection, boxes.
  for (std::size_t li = 0; li < pwl_links.size(); ++li) {
    const auto& link = *pwl_links[li];
    LinkRef ref = pwl_refs[li];
    auto z = map.z0 + static_cast<Eigen::Index>(net.link_row(ref));
    auto nseg = static_cast<Eigen::Index>(link.segments.size());
    {
      // h_from - h_to - sum(m zeta) - sum(b omega) = 0, with fixed heads
      // moved to the right-hand side.
      auto [row, rhs] = new_eq();
      NodeRef a = net.link_from(ref);
      NodeRef b = net.link_to(ref);
      if (a.kind == NodeKind::Junction)
        (*row)[map.l0 + static_cast<Eigen::Index>(a.index)] += 1.0;
      else
        *rhs -= net.fixed_head(a, tank_heads);
      if (b.kind == NodeKind::Junction)
        (*row)[map.l0 + static_cast<Eigen::Index>(b.index)] -= 1.0;
      else
        *rhs += net.fixed_head(b, tank_heads);
      for (Eigen::Index nsg = 0; nsg < nseg; ++nsg) {
        (*row)[map.zeta0[li] + nsg] = -link.segments[static_cast<std::size_t>(nsg)].slope;
        (*row)[map.omega0[li] + nsg] = -link.segments[static_cast<std::size_t>(nsg)].intercept;
      }
    }
    {
      auto [row, rhs] = new_eq();  // z - sum(zeta) = 0
      (*row)[z] = 1.0;
      for (Eigen::Index nsg = 0; nsg < nseg; ++nsg) (*row)[map.zeta0[li] + nsg] = -1.0;
      *rhs = 0.0;
    }
    {
      auto [row, rhs] = new_eq();  // sum(omega) = 1
      for (Eigen::Index nsg = 0; nsg < nseg; ++nsg) (*row)[map.omega0[li] + nsg] = 1.0;
      *rhs = 1.0;
    }
    for (Eigen::Index nsg = 0; nsg < nseg; ++nsg) {
      const auto& seg = link.segments[static_cast<std::size_t>(nsg)];
      {
        auto [row, rhs] = new_in();  // zeta <= q_max * omega
        (*row)[map.zeta0[li] + nsg] = 1.0;
        (*row)[map.omega0[li] + nsg] = -seg.q_max;
      }
      {
        auto [row, rhs] = new_in();  // q_min * omega <= zeta
        (*row)[map.zeta0[li] + nsg] = -1.0;
        (*row)[map.omega0[li] + nsg] = seg.q_min;
      }
      p.mip.binaries.push_back(map.omega0[li] + nsg);
      qp.lb[map.zeta0[li] + nsg] = std::min(seg.q_min, 0.0);
      qp.ub[map.zeta0[li] + nsg] = std::max(seg.q_max, 0.0);
    }
  }

  // Pump curve relaxation: beta1 q^2 + beta2 q + beta3 s^2 + beta4 <= h_from - h_to,
  // a convex quadratic constraint; pumps are one-directional.
  for (Eigen::Index m = 0; m < nm; ++m) {
    const auto& cf = fits.curves[static_cast<std::size_t>(m)];
    LinkRef ref{LinkKind::Pump, static_cast<std::size_t>(m)};
    auto q = map.z0 + static_cast<Eigen::Index>(net.link_row(ref));
    auto s = map.s0 + m;
    QuadConstraint qc;
    qc.Q = Eigen::MatrixXd::Zero(map.n, map.n);
    qc.a = Eigen::VectorXd::Zero(map.n);
    qc.b = -cf.beta4;
    qc.Q(q, q) = 2.0 * cf.beta1;
    qc.Q(s, s) = 2.0 * cf.beta3;
    qc.a[q] = cf.beta2;
    NodeRef a = net.link_from(ref);
    NodeRef b = net.link_to(ref);
    if (a.kind == NodeKind::Junction)
      qc.a[map.l0 + static_cast<Eigen::Index>(a.index)] -= 1.0;
    else
      qc.b += net.fixed_head(a, tank_heads);
    if (b.kind == NodeKind::Junction)
      qc.a[map.l0 + static_cast<Eigen::Index>(b.index)] += 1.0;
    else
      qc.b -= net.fixed_head(b, tank_heads);
    p.mip.quad.push_back(std::move(qc));
  }

  // Box bounds.
  for (Eigen::Index j = 0; j < nj; ++j)
    qp.lb[map.l0 + j] = net.junctions[static_cast<std::size_t>(j)].elevation;
  for (Eigen::Index t = 0; t < ntk; ++t) {
    qp.lb[map.w0 + t] = net.tanks[static_cast<std::size_t>(t)].h_min;
    qp.ub[map.w0 + t] = net.tanks[static_cast<std::size_t>(t)].h_max;
  }
  for (Eigen::Index m = 0; m < nm; ++m) {
    qp.lb[map.s0 + m] = 0.0;
    qp.ub[map.s0 + m] = net.pumps[static_cast<std::size_t>(m)].s_max;
    auto q = map.z0 + static_cast<Eigen::Index>(net.link_offset(LinkKind::Pump)) + m;
    qp.lb[q] = 0.0;
    qp.ub[q] = 1.05 * pump_runout_flow(net.pumps[static_cast<std::size_t>(m)]);
  }
  for (std::size_t pi = 0; pi < net.n_pipes(); ++pi) {
    auto z = map.z0 + static_cast<Eigen::Index>(pi);
    qp.lb[z] = fits.pwl.pipe_box[pi].lo;
    qp.ub[z] = fits.pwl.pipe_box[pi].hi;
  }
  for (std::size_t v = 0; v < net.n_valves(); ++v) {
    auto z = map.z0 + static_cast<Eigen::Index>(net.link_offset(LinkKind::Valve) + v);
    if (valve_open(net, v, step)) {
      qp.lb[z] = fits.pwl.valve_box[v].lo;
      qp.ub[z] = fits.pwl.valve_box[v].hi;
    } else {
      qp.lb[z] = 0.0;  // closed valve decouples its endpoints
      qp.ub[z] = 0.0;
    }
  }

  // Assemble the stacked constraint matrices.
  qp.Aeq.resize(static_cast<Eigen::Index>(eq_rows.size()), map.n);
  qp.beq.resize(static_cast<Eigen::Index>(eq_rows.size()));
  for (std::size_t r = 0; r < eq_rows.size(); ++r) {
    qp.Aeq.row(static_cast<Eigen::Index>(r)) = eq_rows[r].transpose();
    qp.beq[static_cast<Eigen::Index>(r)] = eq_rhs[r];
  }
  qp.Ain.resize(static_cast<Eigen::Index>(in_rows.size()), map.n);
  qp.bin.resize(static_cast<Eigen::Index>(in_rows.size()));
  for (std::size_t r = 0; r < in_rows.size(); ++r) {
    qp.Ain.row(static_cast<Eigen::Index>(r)) = in_rows[r].transpose();
    qp.bin[static_cast<Eigen::Index>(r)] = in_rhs[r];
  }

  return p;
}

DecisionVector extract_decision(const Network& net, const StepProblem& p,
                                const Eigen::VectorXd& x) {
  DecisionVector d;
  d.raw = x;
  const auto& map = p.map;
  d.junction_heads.assign(net.n_junctions(), 0.0);
  for (std::size_t j = 0; j < net.n_junctions(); ++j)
    d.junction_heads[j] = x[map.l0 + static_cast<Eigen::Index>(j)];
  d.flows.assign(net.n_links(), 0.0);
  for (std::size_t k = 0; k < net.n_links(); ++k)
    d.flows[k] = x[map.z0 + static_cast<Eigen::Index>(k)];
  d.tank_heads = p.tank_heads;
  d.tank_heads_next.assign(net.n_tanks(), 0.0);
  for (std::size_t t = 0; t < net.n_tanks(); ++t)
    d.tank_heads_next[t] = x[map.w0 + static_cast<Eigen::Index>(t)];
  d.speeds.assign(net.n_pumps(), 0.0);
  for (std::size_t m = 0; m < net.n_pumps(); ++m)
    d.speeds[m] = x[map.s0 + static_cast<Eigen::Index>(m)];
  for (std::size_t li = 0; li < map.zeta0.size(); ++li) {
    std::vector<double> zeta, omega;
    for (int k = 0; k < map.seg_count[li]; ++k) {
      zeta.push_back(x[map.zeta0[li] + k]);
      omega.push_back(x[map.omega0[li] + k]);
    }
    d.zeta.push_back(std::move(zeta));
    d.omega.push_back(std::move(omega));
  }
  d.objective = p.mip.qp.objective(x) + p.objective_offset;
  return d;
}

StepSolveResult solve_decoupled(const Network& net, const ScheduleFits& fits,
                                const StepProblem& p) {
  StepSolveResult out;
  out.status = solve_miqp(p.mip);
  if (out.status.code == SolveCode::Optimal ||
      (out.status.code == SolveCode::IterationLimit && out.status.x.size() == p.map.n)) {
    out.decision = extract_decision(net, p, out.status.x);
    out.status.objective = out.decision.objective;
  }
  (void)fits;
  return out;
}

ApproxWqInput approx_input_from_decision(const Network& net, const ScheduleFits& fits,
                                         const StepProblem& p, const Eigen::VectorXd& x) {
  ApproxWqInput in;
  const auto& map = p.map;
  in.flows.assign(net.n_links(), 0.0);
  for (std::size_t k = 0; k < net.n_links(); ++k)
    in.flows[k] = x[map.z0 + static_cast<Eigen::Index>(k)];
  in.demands = p.demands;
  in.tank_heads = p.tank_heads;
  in.pipe_dir.resize(net.n_pipes());
  for (std::size_t pi = 0; pi < net.n_pipes(); ++pi) {
    const auto& link = fits.pwl.pipes[pi];
    double fwd = 0.0, rev = 0.0;
    for (int k = 0; k < map.seg_count[pi]; ++k) {
      double w = x[map.omega0[pi] + k];
      if (k < link.n_reverse)
        rev += w;
      else
        fwd += w;
    }
    in.pipe_dir[pi] = std::make_pair(fwd, rev);
  }
  return in;
}

namespace {

StepSolveResult run_slp_proxy(const Network& net, const ScheduleFits& fits,
                              const StepProblem& p, const SlpObjective& obj) {
  auto base = solve_decoupled(net, fits, p);
  if (base.status.code != SolveCode::Optimal) return base;

  StepSolveResult out;
  SlpOptions opt;
  auto st = solve_slp(p.mip, obj, base.status.x, opt);
  out.status = st;
  if (st.x.size() == p.map.n) {
    out.decision = extract_decision(net, p, st.x);
    out.status.objective = out.decision.objective;
  }
  return out;
}

}  // namespace

StepSolveResult solve_rank_informed(const Network& net, const ScheduleFits& fits,
                                    const StepProblem& p, const GramianProxyContext& ctx,
                                    const RankProxy& proxy) {
  if (proxy.l_r > static_cast<int>(proxy.targets.size())) {
    // The spectral surrogate l_r * ||W|| <= trace(W) cannot hold beyond the
    // target dimension unless W vanishes.
    StepSolveResult out;
    out.status.code = SolveCode::Infeasible;
    return out;
  }
  Eigen::MatrixXd C_T = make_selector(state_labels(net, ctx.plan), proxy.targets);
  const int N = ctx.horizon_steps;

  auto wtilde = [&, C_T](const Eigen::VectorXd& x) {
    return approx_target_gramian(net, approx_input_from_decision(net, fits, p, x),
                                 ctx.plan, C_T, N);
  };

  SlpObjective obj;
  if (proxy.theta3 != 0.0) {
    double th = proxy.theta3;
    obj.value = [wtilde, th](const Eigen::VectorXd& x) {
      return -th * nuclear_norm(wtilde(x));
    };
  }
  if (proxy.l_r > 0) {
    double lr = proxy.l_r;
    obj.constraints.push_back([wtilde, lr](const Eigen::VectorXd& x) {
      Eigen::MatrixXd W = wtilde(x);
      return lr * spectral_norm(W) - W.trace();
    });
  }
  return run_slp_proxy(net, fits, p, obj);
}

StepSolveResult solve_energy_driven(const Network& net, const ScheduleFits& fits,
                                    const StepProblem& p, const GramianProxyContext& ctx,
                                    const EnergyProxy& proxy) {
  if (proxy.target_sets.size() != proxy.thetas.size())
    throw SchedError("energy proxy: one weight per target set required");
  auto labels = state_labels(net, ctx.plan);
  const int N = ctx.horizon_steps;

  SlpObjective obj;
  std::vector<std::function<double(const Eigen::VectorXd&)>> traces;
  for (std::size_t i = 0; i < proxy.target_sets.size(); ++i) {
    Eigen::MatrixXd C_T = make_selector(labels, proxy.target_sets[i]);
    auto tr = [&, C_T](const Eigen::VectorXd& x) {
      return approx_target_gramian(net, approx_input_from_decision(net, fits, p, x),
                                   ctx.plan, C_T, N)
          .trace();
    };
    traces.push_back(tr);
  }
  bool any_weight = false;
  for (double th : proxy.thetas)
    if (th != 0.0) any_weight = true;
  if (any_weight) {
    auto thetas = proxy.thetas;
    obj.value = [traces, thetas](const Eigen::VectorXd& x) {
      double v = 0.0;
      for (std::size_t i = 0; i < traces.size(); ++i) v -= thetas[i] * traces[i](x);
      return v;
    };
  }
  for (auto& tr : traces)
    obj.constraints.push_back([tr](const Eigen::VectorXd& x) { return -tr(x); });
  return run_slp_proxy(net, fits, p, obj);
}

std::vector<PumpStatus> classify_pump_states(const Network& net, DecisionVector& d,
                                             double tol) {
  std::vector<PumpStatus> out;
  auto head_of = [&](NodeRef nd) {
    if (nd.kind == NodeKind::Junction) return d.junction_heads[nd.index];
    if (nd.kind == NodeKind::Tank) return d.tank_heads[nd.index];
    return net.reservoirs[nd.index].head;
  };
  for (std::size_t m = 0; m < net.n_pumps(); ++m) {
    LinkRef ref{LinkKind::Pump, m};
    double q = d.flows[net.link_row(ref)];
    double gain = head_of(net.link_to(ref)) - head_of(net.link_from(ref));
    PumpStatus st;
    if (q > tol)
      st = std::abs(gain) <= tol ? PumpStatus::Bypass : PumpStatus::On;
    else
      st = gain > tol ? PumpStatus::CheckValveShut : PumpStatus::Off;
    if (st != PumpStatus::On) d.speeds[m] = 0.0;  // pseudo speed disregarded
    out.push_back(st);
  }
  return out;
}

ScheduleResult run_framework(const Network& net, const ScheduleFits& fits,
                             const FrameworkConfig& cfg) {
  ScheduleResult sr;
  std::vector<double> w(net.n_tanks());
  for (std::size_t t = 0; t < w.size(); ++t) w[t] = net.tanks[t].h_init;

  for (std::size_t step = 0; step < net.n_steps(); ++step) {
    StepProxyConfig pc;
    if (!cfg.per_step.empty())
      pc = cfg.per_step[cfg.per_step.size() == 1 ? 0 : std::min(step, cfg.per_step.size() - 1)];

    auto demands = demand_vector(net, static_cast<double>(step) * net.dt_hyd);
    StepProblem p = build_decoupled(net, fits, step, w, demands);

    StepRecord rec;
    bool solved = false;

    if (pc.kind == ProxyKind::Rank) {
      RankProxy rp = pc.rank;
      for (int red = 0; red <= cfg.policy.max_reductions && !solved; ++red) {
        if (rp.l_r < cfg.policy.l_floor) break;
        auto r = solve_rank_informed(net, fits, p, cfg.ctx, rp);
        if (r.status.code == SolveCode::Optimal ||
            r.status.code == SolveCode::IterationLimit) {
          rec.decision = r.decision;
          rec.status = r.status.code;
          rec.proxy_used = "rank";
          solved = true;
        } else {
          rec.events.push_back("step " + std::to_string(step) +
                               ": rank proxy infeasible at l_r=" + std::to_string(rp.l_r));
          rp.l_r -= 1;
        }
      }
    } else if (pc.kind == ProxyKind::Energy) {
      EnergyProxy ep = pc.energy;
      for (int red = 0; red <= cfg.policy.max_reductions && !solved; ++red) {
        double wmax = 0.0;
        for (double th : ep.thetas) wmax = std::max(wmax, th);
        if (wmax < cfg.policy.theta_floor) break;
        auto r = solve_energy_driven(net, fits, p, cfg.ctx, ep);
        if (r.status.code == SolveCode::Optimal ||
            r.status.code == SolveCode::IterationLimit) {
          rec.decision = r.decision;
          rec.status = r.status.code;
          rec.proxy_used = "energy";
          solved = true;
        } else {
          rec.events.push_back("step " + std::to_string(step) +
                               ": energy proxy infeasible, halving weights");
          for (double& th : ep.thetas) th *= 0.5;
        }
      }
    }

    if (!solved) {
      if (pc.kind != ProxyKind::Decoupled)
        rec.events.push_back("step " + std::to_string(step) + ": fell back to decoupled");
      auto r = solve_decoupled(net, fits, p);
      if (r.status.code != SolveCode::Optimal)
        throw SchedError("step " + std::to_string(step) + ": decoupled problem " +
                         to_string(r.status.code));
      rec.decision = r.decision;
      rec.status = r.status.code;
      rec.proxy_used = "decoupled";
    }

    rec.pump_states = classify_pump_states(net, rec.decision);
    rec.cost = rec.decision.objective;
    sr.total_cost += rec.cost;
    for (const auto& e : rec.events) sr.events.push_back(e);
    w = rec.decision.tank_heads_next;
    sr.steps.push_back(std::move(rec));
  }
  return sr;
}

HydraulicTrajectory trajectory_from_schedule(const Network& net, const ScheduleResult& sr) {
  HydraulicTrajectory traj;
  for (std::size_t k = 0; k < sr.steps.size(); ++k) {
    const auto& d = sr.steps[k].decision;
    HydraulicState st;
    st.t = static_cast<double>(k) * net.dt_hyd;
    st.tank_heads = d.tank_heads;
    st.junction_heads = d.junction_heads;
    st.flows = d.flows;
    st.speeds = d.speeds;
    st.demands = demand_vector(net, st.t);
    traj.states.push_back(std::move(st));
  }
  return traj;
}

}  // namespace aquactrl
