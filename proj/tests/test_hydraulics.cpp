#include <doctest.h>

#include <cmath>
#include <random>

#include "aquactrl/hydraulics.hpp"
#include "aquactrl/network_io.hpp"
#include "fixtures.hpp"

using namespace aquactrl;

TEST_CASE("pipe head loss closed form") {
  CHECK(pipe_headloss(0.0, 1.0, 1.852) == 0.0);
  CHECK(pipe_headloss(1.0, 1.0, 1.852) == doctest::Approx(1.0).epsilon(1e-15));
  // High-precision oracle for r=0.5, mu=1.852, q=2.
  long double oracle = 0.5L * 2.0L * std::pow(2.0L, 0.852L);
  CHECK(pipe_headloss(2.0, 0.5, 1.852) ==
        doctest::Approx(static_cast<double>(oracle)).epsilon(1e-12));
}

TEST_CASE("pipe and valve losses are odd functions") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.01, 20.0);
  for (int i = 0; i < 200; ++i) {
    double q = u(rng);
    double r = u(rng);
    CHECK(pipe_headloss(-q, r, 1.852) ==
          doctest::Approx(-pipe_headloss(q, r, 1.852)).epsilon(1e-12));
    CHECK(valve_headloss(-q, r) == doctest::Approx(-valve_headloss(q, r)).epsilon(1e-12));
  }
}

TEST_CASE("pump head gain") {
  Pump p;
  p.shutoff_head = 393.7;
  p.alpha = 3.7e-6;  // flow-unit free at q = 0
  p.nu = 2.59;
  p.s_max = 1.0;

  SUBCASE("shutoff point") {
    CHECK(pump_headgain(0.0, 1.0, p) == doctest::Approx(-393.7).epsilon(1e-15));
  }
  SUBCASE("pump off is an excluded domain") {
    CHECK_THROWS_WITH_AS(pump_headgain(1.0, 0.0, p), doctest::Contains("pump off"),
                         HydraulicError);
  }
  SUBCASE("affinity scaling: fixed q/s ratio scales the gain by s^2") {
    p.alpha = 27.0;
    double g1 = pump_headgain(1.2, 1.0, p);
    for (double s : {0.3, 0.5, 0.8}) {
      double gs = pump_headgain(1.2 * s, s, p);
      CHECK(gs == doctest::Approx(s * s * g1).epsilon(1e-12));
    }
  }
  SUBCASE("gain stays nonpositive over the delivering domain") {
    p.alpha = 27.0;
    for (double s : {0.2, 0.5, 1.0}) {
      double q_zero = s * std::pow(p.shutoff_head / p.alpha, 1.0 / p.nu);
      for (int k = 0; k <= 20; ++k) {
        double q = q_zero * k / 20.0;
        CHECK(pump_headgain(q, s, p) <= 1e-12);
      }
    }
  }
}

TEST_CASE("valve head loss") {
  CHECK(valve_headloss(0.0, 2.0) == 0.0);
  CHECK(valve_headloss(3.0, 2.0) == doctest::Approx(18.0));
  CHECK(valve_headloss(-3.0, 2.0) == doctest::Approx(-18.0));
}

TEST_CASE("two reservoirs joined by one pipe solve analytically") {
  auto net = testing::two_reservoir_net(110.0, 100.0, 10.0, 1.852);
  auto st = solve_hydraulic_step(net, {}, {}, {});
  // q = (dh/r)^(1/mu) = (10/10)^(1/1.852) = 1.
  CHECK(st.flows[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("three-node pump flow matches a bisection oracle") {
  auto net = testing::load_fixture("three_node.json");
  auto demands = demand_vector(net, 0.0);
  std::vector<double> w = {net.tanks[0].h_init};
  auto st = solve_hydraulic_step(net, {1.0}, demands, w);

  const auto& pump = net.pumps[0];
  const auto& pipe = net.pipes[0];
  double h_r = net.reservoirs[0].head;
  double w0 = w[0];
  double qd = demands[0];
  // Junction balance residual as a function of pump flow.
  auto resid = [&](double qm) {
    double l = h_r - pump_headgain(qm, 1.0, pump);
    double qp = l > w0 ? std::pow((l - w0) / pipe.resistance, 1.0 / pipe.exponent)
                       : -std::pow((w0 - l) / pipe.resistance, 1.0 / pipe.exponent);
    return qm - qd - qp;
  };
  double lo = 0.0, hi = pump.s_max * std::pow(pump.shutoff_head / pump.alpha, 1.0 / pump.nu);
  REQUIRE(resid(lo) < 0.0);
  REQUIRE(resid(hi) > 0.0);
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (resid(mid) < 0 ? lo : hi) = mid;
  }
  double q_oracle = 0.5 * (lo + hi);

  std::size_t pump_row = net.link_row({LinkKind::Pump, 0});
  CHECK(st.flows[pump_row] == doctest::Approx(q_oracle).epsilon(1e-7));

  // Mass balance and the head relations hold at the solution.
  double qm = st.flows[pump_row];
  double qp = st.flows[0];
  CHECK(std::abs(qm - qd - qp) <= 1e-8);
  double l = st.junction_heads[0];
  CHECK(std::abs((h_r - l) - pump_headgain(qm, 1.0, pump)) <= 1e-8);
  CHECK(std::abs((l - w0) - pipe_headloss(qp, pipe.resistance, pipe.exponent)) <= 1e-8);
}

TEST_CASE("all-off network rests at the connected fixed heads") {
  auto net = testing::load_fixture("three_node.json");
  auto demands = std::vector<double>{0.0};
  auto st = solve_hydraulic_step(net, {0.0}, demands, {912.0});
  for (double q : st.flows) CHECK(q == 0.0);
  // J1 connects to the tank through the pipe; the off pump blocks R1.
  CHECK(st.junction_heads[0] == doctest::Approx(912.0).epsilon(1e-9));
}

TEST_CASE("positive demand with no source path is an error") {
  auto net = testing::load_fixture("three_node.json");
  net.tanks.clear();
  net.pipes.clear();
  net.rebuild_index();
  // Only the off pump reaches J1 now.
  CHECK_THROWS_WITH_AS(solve_hydraulic_step(net, {0.0}, {1.0}, {}),
                       doctest::Contains("disconnected demand node"), HydraulicError);
}

TEST_CASE("tank advancement arithmetic and flags") {
  auto net = testing::load_fixture("three_node.json");
  net.tanks[0].area = 100.0;

  HydraulicState st;
  st.tank_heads = {912.0};
  st.junction_heads = {900.0};
  st.flows = {1.0, 1.0};  // pipe J1->TK1 carries 1 ft^3/s in
  st.speeds = {1.0};
  st.demands = {0.0};

  SUBCASE("dh = (dt/A) * net inflow") {
    auto w = advance_tanks(net, st);
    CHECK(w[0] == doctest::Approx(912.0 + 36.0).epsilon(1e-12));
  }
  SUBCASE("zero net inflow leaves the head unchanged") {
    st.flows = {0.0, 0.0};
    auto w = advance_tanks(net, st);
    CHECK(w[0] == 912.0);
  }
  SUBCASE("outflow at the minimum head raises the flag") {
    st.tank_heads = {904.0};
    st.flows = {-0.5, -0.5};  // draining
    std::vector<bool> flags(1, false);
    auto w = advance_tanks(net, st, &flags);
    CHECK(w[0] < 904.0);
    CHECK(flags[0]);
  }
}

TEST_CASE("simulate_hydraulics chains steps over the horizon") {
  auto net = testing::load_fixture("three_node.json");
  std::vector<std::vector<double>> schedule(24, {1.0});
  auto traj = simulate_hydraulics(net, schedule);
  CHECK(traj.states.size() == 24);

  SUBCASE("tank head rises while the pipe feeds it") {
    for (std::size_t k = 0; k + 1 < traj.states.size(); ++k) {
      if (traj.states[k].flows[0] > 0)
        CHECK(traj.states[k + 1].tank_heads[0] >= traj.states[k].tank_heads[0]);
    }
  }
  SUBCASE("constant zero demand and pumps off give a constant trajectory") {
    auto z = net;
    z.junctions[0].demand_base = 0.0;
    std::vector<std::vector<double>> off(24, {0.0});
    auto tr = simulate_hydraulics(z, off);
    for (const auto& s : tr.states) {
      CHECK(s.tank_heads[0] == tr.states[0].tank_heads[0]);
      for (double q : s.flows) CHECK(q == 0.0);
    }
  }
}

TEST_CASE("mass conservation on the branched fixture") {
  auto net = testing::load_fixture("richmond_mini.json");
  auto demands = demand_vector(net, 0.0);
  std::vector<double> w = {net.tanks[0].h_init, net.tanks[1].h_init};
  auto st = solve_hydraulic_step(net, {0.9, 0.85}, demands, w);
  auto links = net.all_links();
  for (std::size_t j = 0; j < net.n_junctions(); ++j) {
    double balance = -demands[j];
    for (std::size_t k = 0; k < links.size(); ++k) {
      if (net.link_from(links[k]).kind == NodeKind::Junction &&
          net.link_from(links[k]).index == j)
        balance -= st.flows[k];
      if (net.link_to(links[k]).kind == NodeKind::Junction &&
          net.link_to(links[k]).index == j)
        balance += st.flows[k];
    }
    CHECK(std::abs(balance) <= 1e-8);
  }
}

TEST_CASE("segment sizing") {
  SUBCASE("single velocity formula") {
    CHECK(segments_for_velocity(1000.0, 1.0, 10.0, 200) == 100);
    CHECK(segments_for_velocity(1000.0, 2.0, 10.0, 200) == 50);
    CHECK(segments_for_velocity(1000.0, 0.0, 10.0, 200) == 200);
    CHECK(segments_for_velocity(10.0, 5.0, 10.0, 200) == 1);  // floor below 1
  }
  SUBCASE("minimum over scenarios") {
    auto net = testing::load_fixture("three_node.json");
    auto plan = plan_from_scenario_velocities(net, {{1.0}, {2.0}}, 200);
    CHECK(plan.segments[0] == 50);
  }
  SUBCASE("all-zero velocities cap at n_max") {
    auto net = testing::load_fixture("three_node.json");
    auto plan = plan_from_scenario_velocities(net, {{0.0}}, 200);
    CHECK(plan.segments[0] == 200);
  }
  SUBCASE("sampled plan keeps the Courant number at or below one") {
    auto net = testing::load_fixture("three_node.json");
    auto plan = size_segments(net, 25, 42);
    // Validate against a fresh envelope of solved velocities.
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int sc = 0; sc < 10; ++sc) {
      std::vector<double> w = {904.0 + 20.0 * u(rng)};
      auto demands = demand_vector(net, 3600.0 * (sc % 24));
      auto st = solve_hydraulic_step(net, {u(rng)}, demands, w);
      for (std::size_t p = 0; p < net.n_pipes(); ++p) {
        double v = pipe_velocity(net, p, st.flows[p]);
        double dx = plan.dx(net, p);
        CHECK(v * net.dt_wq / dx <= 1.0 + 1e-9);
      }
    }
  }
  SUBCASE("determinism: same seed, same plan") {
    auto net = testing::load_fixture("richmond_mini.json");
    auto p1 = size_segments(net, 12, 7);
    auto p2 = size_segments(net, 12, 7);
    CHECK(p1.segments == p2.segments);
  }
}
