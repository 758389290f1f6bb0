#include <doctest.h>

#include <cmath>

#include "aquactrl/scheduling.hpp"
#include "aquactrl/water_quality.hpp"
#include "fixtures.hpp"

using namespace aquactrl;

TEST_CASE("chord segments interpolate the curve") {
  SUBCASE("quadratic with breakpoints 0,1,2") {
    auto segs = chord_segments([](double q) { return q * q; }, 0.0, 2.0, 2);
    REQUIRE(segs.size() == 2);
    CHECK(segs[0].slope == doctest::Approx(1.0));
    CHECK(segs[0].intercept == doctest::Approx(0.0));
    CHECK(segs[1].slope == doctest::Approx(3.0));
    CHECK(segs[1].intercept == doctest::Approx(-2.0));
  }
  SUBCASE("single chord of an odd curve passes through the origin") {
    auto f = [](double q) { return pipe_headloss(q, 2.0, 1.852); };
    auto segs = chord_segments(f, -1.5, 1.5, 1);
    REQUIRE(segs.size() == 1);
    CHECK(segs[0].slope == doctest::Approx(f(1.5) / 1.5).epsilon(1e-12));
    CHECK(segs[0].intercept == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("chord values are exact at every breakpoint") {
    auto f = [](double q) { return pipe_headloss(q, 0.93, 1.852); };
    auto segs = chord_segments(f, -2.0, 2.0, 5);
    for (const auto& s : segs) {
      CHECK(s.slope * s.q_min + s.intercept == doctest::Approx(f(s.q_min)).epsilon(1e-10));
      CHECK(s.slope * s.q_max + s.intercept == doctest::Approx(f(s.q_max)).epsilon(1e-10));
    }
  }
  SUBCASE("zero-width box is rejected") {
    CHECK_THROWS(chord_segments([](double q) { return q; }, 1.0, 1.0, 2));
  }
  SUBCASE("reverse-segment split covers the negative half") {
    auto net = testing::load_fixture("three_node.json");
    auto plan = pwl_pipes(net, 3, {{-2.0, 2.0}});
    CHECK(plan.pipes[0].n_reverse == 2);  // ceil(3/2)
    auto plan1 = pwl_pipes(net, 3, {{0.0, 2.0}});
    CHECK(plan1.pipes[0].n_reverse == 0);
  }
}

TEST_CASE("pump curve fit") {
  Pump fig13;
  fig13.shutoff_head = 393.7;
  fig13.alpha = 3.7e-6 * std::pow(1.0 / 0.0022280093, 2.59);
  fig13.nu = 2.59;
  fig13.s_max = 1.0;

  SUBCASE("data in the model family is recovered") {
    OperatingGrid grid;
    std::vector<double> values;
    for (double q : {0.0, 0.5, 1.0, 1.7, 2.3})
      for (double s : {0.4, 0.7, 1.0}) {
        grid.push_back({q, s});
        values.push_back(0.8 * q * q + 1.5 * q + 2.0 * s * s - 250.0);
      }
    auto fit = fit_curve_surrogate(grid, values);
    CHECK(fit.beta1 == doctest::Approx(0.8).epsilon(1e-8));
    CHECK(fit.beta2 == doctest::Approx(1.5).epsilon(1e-8));
    CHECK(fit.beta3 == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(fit.beta4 == doctest::Approx(-250.0).epsilon(1e-8));
    CHECK(fit.residual <= 1e-8);
  }
  SUBCASE("reference pump yields admissible curvature signs") {
    auto fit = fit_pump_curve(fig13, default_operating_grid(fig13));
    CHECK(fit.beta1 >= 0.0);
    CHECK(fit.beta3 >= 0.0);
    CHECK(fit.residual > 0.0);  // the power-law curve is outside the family
  }
  SUBCASE("degenerate grid is reported") {
    OperatingGrid one = {{1.0, 1.0}};
    CHECK_THROWS_AS(fit_pump_curve(fig13, one), FitError);
    OperatingGrid same(8, {1.0, 1.0});
    CHECK_THROWS_AS(fit_pump_curve(fig13, same), FitError);
  }
}

TEST_CASE("power consumption fit") {
  Pump fig13;
  fig13.shutoff_head = 393.7;
  fig13.alpha = 3.7e-6 * std::pow(1.0 / 0.0022280093, 2.59);
  fig13.nu = 2.59;
  fig13.s_max = 1.0;

  SUBCASE("convex quadratic data is recovered with a PSD hessian") {
    OperatingGrid pts;
    std::vector<double> values;
    for (double q : {0.0, 0.6, 1.2, 2.0})
      for (double s : {0.3, 0.65, 1.0}) {
        pts.push_back({q, s});
        values.push_back(1.0 + 0.5 * q + 1.0 * q * q + 0.2 * s + 1.0 * s * s);
      }
    auto fit = fit_power_surrogate(pts, values);
    CHECK(fit.theta3 == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(fit.theta5 == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(fit.theta6) <= 1e-6);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(fit.hessian());
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  }
  SUBCASE("reference pump cost surface fits with a PSD hessian") {
    auto fit = fit_power(fig13, 0.12, {}, default_operating_grid(fig13));
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(fit.hessian());
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  }
  SUBCASE("identical operating points are rank deficient") {
    OperatingGrid same(10, {1.0, 0.8});
    CHECK_THROWS_WITH_AS(fit_power(fig13, 0.12, {}, same),
                         doctest::Contains("rank-deficient"), FitError);
  }
}

namespace {

struct Desk {
  Network net;
  ScheduleFits fits;
  std::vector<double> w0;
  std::vector<double> demands;
  StepProblem step;
};

Desk three_node_step(std::size_t step = 0) {
  Desk d;
  d.net = testing::load_fixture("three_node.json");
  d.fits = make_fits(d.net, 0.12, 3);
  d.w0 = {d.net.tanks[0].h_init};
  d.demands = demand_vector(d.net, static_cast<double>(step) * d.net.dt_hyd);
  d.step = build_decoupled(d.net, d.fits, step, d.w0, d.demands);
  return d;
}

// Exhaustive check over the omega assignments of a small step problem.
double enumerate_step(const StepProblem& p) {
  double best = std::numeric_limits<double>::infinity();
  const auto nb = p.mip.binaries.size();
  for (std::size_t mask = 0; mask < (1ull << nb); ++mask) {
    QpProblem q = p.mip.qp;
    for (std::size_t i = 0; i < nb; ++i) {
      double v = (mask >> i) & 1 ? 1.0 : 0.0;
      q.lb[p.mip.binaries[i]] = v;
      q.ub[p.mip.binaries[i]] = v;
    }
    auto st = solve_qcqp(q, p.mip.quad);
    if (st.code == SolveCode::Optimal) best = std::min(best, st.objective);
  }
  return best;
}

}  // namespace

TEST_CASE("decoupled step problem structure") {
  auto d = three_node_step();
  CHECK(d.step.mip.binaries.size() == 3);  // one pipe, three segments
  CHECK(d.step.mip.quad.size() == 1);      // one pump curve constraint

  auto net1 = testing::load_fixture("net1.json");
  auto fits1 = make_fits(net1, 0.12, 3);
  auto demands1 = demand_vector(net1, 0.0);
  auto p1 = build_decoupled(net1, fits1, 0, {net1.tanks[0].h_init}, demands1);
  CHECK(p1.mip.binaries.size() == 36);  // 12 pipes x 3 segments
}

TEST_CASE("decoupled solve matches binary enumeration on the three-node step") {
  auto d = three_node_step();
  auto r = solve_decoupled(d.net, d.fits, d.step);
  REQUIRE(r.status.code == SolveCode::Optimal);
  double oracle = enumerate_step(d.step) + d.step.objective_offset;
  CHECK(r.decision.objective == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("feasible decisions satisfy the piecewise structure") {
  auto d = three_node_step(9);  // peak-demand step
  auto r = solve_decoupled(d.net, d.fits, d.step);
  REQUIRE(r.status.code == SolveCode::Optimal);
  const auto& dec = r.decision;

  // Segment selection, boxes, and flow equality.
  for (std::size_t li = 0; li < dec.omega.size(); ++li) {
    double wsum = 0.0, zsum = 0.0;
    for (std::size_t n = 0; n < dec.omega[li].size(); ++n) {
      double w = dec.omega[li][n];
      CHECK((std::abs(w) <= 1e-6 || std::abs(w - 1.0) <= 1e-6));
      wsum += w;
      zsum += dec.zeta[li][n];
      const auto& seg = d.fits.pwl.pipes[li].segments[n];
      CHECK(dec.zeta[li][n] >= seg.q_min * w - 1e-6);
      CHECK(dec.zeta[li][n] <= seg.q_max * w + 1e-6);
    }
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(zsum == doctest::Approx(dec.flows[li]).epsilon(1e-6));
  }

  // The head-loss expression matches the selected chord at the pipe flow.
  const auto& link = d.fits.pwl.pipes[0];
  double q = dec.flows[0];
  double chord = 0.0;
  for (std::size_t n = 0; n < link.segments.size(); ++n)
    chord += link.segments[n].slope * dec.zeta[0][n] +
             link.segments[n].intercept * dec.omega[0][n];
  double head_diff = dec.junction_heads[0] - d.w0[0];
  CHECK(head_diff == doctest::Approx(chord).epsilon(1e-6));

  // Junction balance and tank dynamics chain.
  double qm = dec.flows[d.net.link_row({LinkKind::Pump, 0})];
  CHECK(qm - d.demands[0] - q == doctest::Approx(0.0).epsilon(1e-7));
  double w_next = d.w0[0] + d.net.dt_hyd / d.net.tanks[0].area * q;
  CHECK(dec.tank_heads_next[0] == doctest::Approx(w_next).epsilon(1e-7));

  // Step cost equals a post-hoc re-evaluation of the fitted rate.
  const auto& pf = d.fits.power[0];
  double s = dec.speeds[0];
  double cost = pf.eval(qm, s) * d.net.dt_hyd / 3600.0;
  CHECK(dec.objective == doctest::Approx(cost).epsilon(1e-8));
}

TEST_CASE("zero-demand step turns the pumps off at enumeration cost") {
  auto d = three_node_step();
  auto z = d.net;
  z.junctions[0].demand_base = 0.0;
  auto p = build_decoupled(z, d.fits, 0, d.w0, {0.0});
  auto r = solve_decoupled(z, d.fits, p);
  REQUIRE(r.status.code == SolveCode::Optimal);
  double oracle = enumerate_step(p) + p.objective_offset;
  CHECK(r.decision.objective == doctest::Approx(oracle).epsilon(1e-6));
  CHECK(std::abs(r.decision.flows[1]) <= 1e-5);  // pump carries no flow
}

TEST_CASE("demand beyond pump and tank capacity is infeasible") {
  auto d = three_node_step();
  std::vector<double> demands = {5000.0 * 0.0022280093};
  auto p = build_decoupled(d.net, d.fits, 0, d.w0, demands);
  auto r = solve_decoupled(d.net, d.fits, p);
  CHECK(r.status.code == SolveCode::Infeasible);
}

TEST_CASE("two-pipe instance matches the four-binary enumeration") {
  Network net;
  net.dt_hyd = 3600.0;
  net.dt_wq = 10.0;
  net.horizon = 3600.0;
  net.reservoirs.push_back({"R", 100.0});
  net.junctions.push_back({"J1", 90.0, 0.3, "", false});
  net.junctions.push_back({"J2", 90.0, 0.2, "", false});
  Tank tk;
  tk.id = "TK";
  tk.elevation = 120.0;
  tk.h_min = 128.0;
  tk.h_max = 140.0;
  tk.h_init = 130.0;
  tk.area = 500.0;
  net.tanks.push_back(tk);
  Pipe p1{"P1", "J1", "J2", 800.0, 0.5, 1.2, 1.852, {}};
  Pipe p2{"P2", "J2", "TK", 600.0, 0.5, 0.9, 1.852, {}};
  net.pipes = {p1, p2};
  Pump m;
  m.id = "M";
  m.from = "R";
  m.to = "J1";
  m.shutoff_head = 80.0;
  m.alpha = 8.0;
  m.nu = 2.0;
  m.s_max = 1.0;
  net.pumps.push_back(m);
  net.rebuild_index();

  auto fits = make_fits(net, 0.1, 2);  // two segments per pipe -> 4 binaries
  auto p = build_decoupled(net, fits, 0, {130.0}, {0.3, 0.2});
  REQUIRE(p.mip.binaries.size() == 4);
  auto r = solve_decoupled(net, fits, p);
  REQUIRE(r.status.code == SolveCode::Optimal);
  double oracle = enumerate_step(p) + p.objective_offset;
  CHECK(r.decision.objective == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("pump state classification") {
  auto net = testing::load_fixture("three_node.json");
  DecisionVector d;
  d.tank_heads = {912.0};
  d.tank_heads_next = {912.0};
  d.flows = {0.0, 0.0};
  d.speeds = {0.0};

  SUBCASE("delivering pump is On") {
    d.flows = {1.0, 1.0};
    d.speeds = {1.0};
    d.junction_heads = {912.0};  // gain 212 over the reservoir
    auto st = classify_pump_states(net, d);
    CHECK(st[0] == PumpStatus::On);
    CHECK(d.speeds[0] == 1.0);
  }
  SUBCASE("positive flow at zero head increase is a Bypass") {
    d.flows = {2.0, 2.0};
    d.speeds = {0.7};  // pseudo speed
    d.junction_heads = {700.0};
    auto st = classify_pump_states(net, d);
    CHECK(st[0] == PumpStatus::Bypass);
    CHECK(d.speeds[0] == 0.0);  // disregarded
  }
  SUBCASE("zero flow holding back head is a CheckValveShut") {
    d.flows = {0.0, 0.0};
    d.speeds = {0.4};
    d.junction_heads = {750.0};  // +50 over the reservoir with no flow
    auto st = classify_pump_states(net, d);
    CHECK(st[0] == PumpStatus::CheckValveShut);
    CHECK(d.speeds[0] == 0.0);
  }
  SUBCASE("no flow and no head difference is Off") {
    d.junction_heads = {700.0};
    auto st = classify_pump_states(net, d);
    CHECK(st[0] == PumpStatus::Off);
  }
}

TEST_CASE("coupled modes with zero weights reproduce the decoupled solution") {
  auto d = three_node_step();
  auto base = solve_decoupled(d.net, d.fits, d.step);
  REQUIRE(base.status.code == SolveCode::Optimal);

  GramianProxyContext ctx;
  ctx.plan = size_segments(d.net, 10, 3);
  ctx.horizon_steps = 20;

  SUBCASE("rank mode, theta3 = 0 and l_r = 0") {
    RankProxy rp;
    rp.targets = {"J:J1", "TK:TK1"};
    rp.l_r = 0;
    rp.theta3 = 0.0;
    auto r = solve_rank_informed(d.net, d.fits, d.step, ctx, rp);
    REQUIRE(r.status.code == SolveCode::Optimal);
    CHECK(r.decision.objective == doctest::Approx(base.decision.objective).epsilon(1e-8));
    CHECK((r.decision.raw - base.decision.raw).lpNorm<Eigen::Infinity>() <= 1e-8);
  }
  SUBCASE("energy mode, all weights zero") {
    EnergyProxy ep;
    ep.target_sets = {{"TK:TK1"}};
    ep.thetas = {0.0};
    auto r = solve_energy_driven(d.net, d.fits, d.step, ctx, ep);
    REQUIRE(r.status.code == SolveCode::Optimal);
    CHECK(r.decision.objective == doctest::Approx(base.decision.objective).epsilon(1e-8));
    CHECK((r.decision.raw - base.decision.raw).lpNorm<Eigen::Infinity>() <= 1e-8);
  }
}

TEST_CASE("rank level beyond the target dimension is infeasible by construction") {
  auto d = three_node_step();
  GramianProxyContext ctx;
  ctx.plan = size_segments(d.net, 10, 3);
  RankProxy rp;
  rp.targets = {"J:J1", "TK:TK1"};
  rp.l_r = 3;  // exceeds n_yf = 2
  auto r = solve_rank_informed(d.net, d.fits, d.step, ctx, rp);
  CHECK(r.status.code == SolveCode::Infeasible);
}

TEST_CASE("energy proxy with a large tank weight pumps at least as hard") {
  auto d = three_node_step();
  auto base = solve_decoupled(d.net, d.fits, d.step);
  REQUIRE(base.status.code == SolveCode::Optimal);

  GramianProxyContext ctx;
  ctx.plan = size_segments(d.net, 10, 3);
  ctx.horizon_steps = 20;
  EnergyProxy ep;
  ep.target_sets = {{"TK:TK1"}};
  ep.thetas = {50.0};
  auto r = solve_energy_driven(d.net, d.fits, d.step, ctx, ep);
  REQUIRE((r.status.code == SolveCode::Optimal ||
           r.status.code == SolveCode::IterationLimit));
  CHECK(r.decision.speeds[0] >= base.decision.speeds[0] - 1e-6);
  // The reward is monotone in the tank inflow, so the coupled pipe flow
  // does not drop below the decoupled one.
  CHECK(r.decision.flows[0] >= base.decision.flows[0] - 1e-6);
}

TEST_CASE("framework: all-decoupled configuration equals the per-step chain") {
  auto net = testing::load_fixture("three_node.json");
  net.horizon = 4 * 3600.0;  // keep the chain short
  auto fits = make_fits(net, 0.12, 3);

  FrameworkConfig cfg;
  cfg.per_step = {StepProxyConfig{}};  // broadcast decoupled
  cfg.ctx.plan = size_segments(net, 10, 3);
  auto sr = run_framework(net, fits, cfg);
  REQUIRE(sr.steps.size() == 4);
  CHECK(sr.events.empty());

  std::vector<double> w = {net.tanks[0].h_init};
  double total = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    auto demands = demand_vector(net, k * 3600.0);
    auto p = build_decoupled(net, fits, k, w, demands);
    auto r = solve_decoupled(net, fits, p);
    REQUIRE(r.status.code == SolveCode::Optimal);
    CHECK(sr.steps[k].cost == doctest::Approx(r.decision.objective).epsilon(1e-7));
    w = r.decision.tank_heads_next;
    total += r.decision.objective;
  }
  CHECK(sr.total_cost == doctest::Approx(total).epsilon(1e-7));
}

TEST_CASE("framework: unsatisfiable rank level falls back to decoupled") {
  auto net = testing::load_fixture("three_node.json");
  net.horizon = 2 * 3600.0;
  auto fits = make_fits(net, 0.12, 3);

  FrameworkConfig cfg;
  StepProxyConfig pc;
  pc.kind = ProxyKind::Rank;
  pc.rank.targets = {"J:J1", "TK:TK1"};
  pc.rank.l_r = 5;  // unattainable: beyond the target dimension
  pc.rank.theta3 = 0.1;
  cfg.per_step = {pc};
  cfg.policy.l_floor = 3;  // floor still above the dimension
  cfg.ctx.plan = size_segments(net, 10, 3);

  auto sr = run_framework(net, fits, cfg);
  REQUIRE(sr.steps.size() == 2);
  for (const auto& rec : sr.steps) CHECK(rec.proxy_used == "decoupled");
  bool fallback_logged = false;
  for (const auto& e : sr.events)
    if (e.find("fell back to decoupled") != std::string::npos) fallback_logged = true;
  CHECK(fallback_logged);
}
