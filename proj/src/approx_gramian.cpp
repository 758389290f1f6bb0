#include "aquactrl/approx_gramian.hpp"

#include <cmath>
#include <numbers>

#include "aquactrl/gramian.hpp"
#include "aquactrl/water_quality.hpp"

namespace aquactrl {

namespace {

double flow_reference(const Network& net) {
  double q = 0.0;
  for (const auto& j : net.junctions) q += j.demand_base;
  for (const auto& b : net.boosters) q += b.flow;
  return std::max(1.0, 2.0 * q);
}

}  // namespace

void assemble_approx_wq(const Network& net, const ApproxWqInput& in,
                        const SegmentPlan& plan, Eigen::MatrixXd* A_out,
                        Eigen::MatrixXd* B_out) {
  const double dt = net.dt_wq;
  WqIndexMap map = make_index_map(net, plan);
  const auto n = static_cast<Eigen::Index>(map.n_x);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd B =
      Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(net.boosters.size()));
  const auto links = net.all_links();
  const double q_ref = flow_reference(net);

  const bool have_dir = !in.pipe_dir.empty();
  auto dir_of = [&](std::size_t pipe) -> std::pair<double, double> {
    if (have_dir) {
      if (pipe >= in.pipe_dir.size() || !in.pipe_dir[pipe])
        throw WqError("missing direction binaries for bidirectional pipe " +
                      net.pipes[pipe].id);
      return *in.pipe_dir[pipe];
    }
    return in.flows[pipe] >= 0 ? std::make_pair(1.0, 0.0) : std::make_pair(0.0, 1.0);
  };

  for (std::size_t i = 0; i < map.n_r; ++i) {
    auto r = static_cast<Eigen::Index>(map.reservoir(i));
    A(r, r) = 1.0;
  }

  // Signed per-node inflow terms (source index, polynomial flow weight) and
  // outflow sums, with pipe terms weighted by the direction selectors.
  std::vector<std::vector<std::pair<std::size_t, double>>> inflow(map.n_j + map.n_tk);
  std::vector<double> out_sum(map.n_j + map.n_tk, 0.0);
  auto local = [&](NodeRef nd) -> int {
    if (nd.kind == NodeKind::Junction) return static_cast<int>(nd.index);
    if (nd.kind == NodeKind::Tank) return static_cast<int>(map.n_j + nd.index);
    return -1;
  };
  for (std::size_t k = 0; k < links.size(); ++k) {
    const auto& lk = links[k];
    double q = in.flows[k];
    NodeRef a = net.link_from(lk);
    NodeRef b = net.link_to(lk);
    if (lk.kind == LinkKind::Pipe) {
      auto [wf, wr] = dir_of(lk.index);
      int ns = map.pipe_segments[lk.index];
      int ito = local(b), ifrom = local(a);
      if (ito >= 0)
        inflow[static_cast<std::size_t>(ito)].push_back(
            {map.pipe_seg(lk.index, ns - 1), q * wf});
      if (ifrom >= 0)
        inflow[static_cast<std::size_t>(ifrom)].push_back(
            {map.pipe_seg(lk.index, 0), -q * wr});
      if (ifrom >= 0) out_sum[static_cast<std::size_t>(ifrom)] += q * wf;
      if (ito >= 0) out_sum[static_cast<std::size_t>(ito)] += -q * wr;
    } else {
      // Pumps are one-directional; valves follow the flow sign.
      double qa = std::abs(q);
      NodeRef up = q >= 0 ? a : b;
      NodeRef dn = q >= 0 ? b : a;
      std::size_t src = lk.kind == LinkKind::Pump ? map.pump(lk.index) : map.valve(lk.index);
      int li = local(dn);
      if (li >= 0 && qa > 0) inflow[static_cast<std::size_t>(li)].push_back({src, qa});
      int lo = local(up);
      if (lo >= 0) out_sum[static_cast<std::size_t>(lo)] += qa;
    }
  }

  // Junction rows, denominators cleared and scaled by 1/q_ref.
  for (std::size_t j = 0; j < map.n_j; ++j) {
    auto row = static_cast<Eigen::Index>(map.junction(j));
    for (const auto& [src, w] : inflow[j])
      A(row, static_cast<Eigen::Index>(src)) += w / q_ref;
  }

  // Tank rows, next-volume denominator cleared and scaled by 1/V_ref.
  for (std::size_t t = 0; t < map.n_tk; ++t) {
    auto row = static_cast<Eigen::Index>(map.tank(t));
    const auto& tk = net.tanks[t];
    double v0 = tk.area * (in.tank_heads[t] - tk.elevation);
    double v_ref = tk.area * (tk.h_max - tk.elevation);
    A(row, row) = (v0 * (1.0 - tk.bulk_decay * dt) - out_sum[map.n_j + t] * dt) / v_ref;
    for (const auto& [src, w] : inflow[map.n_j + t])
      A(row, static_cast<Eigen::Index>(src)) += w * dt / v_ref;
  }

  // Pumps/valves copy upstream (entries already polynomial constants).
  for (std::size_t k = 0; k < links.size(); ++k) {
    const auto& lk = links[k];
    if (lk.kind == LinkKind::Pipe) continue;
    auto row = static_cast<Eigen::Index>(
        lk.kind == LinkKind::Pump ? map.pump(lk.index) : map.valve(lk.index));
    double q = in.flows[k];
    if (q == 0.0) {
      A(row, row) = 1.0;
      continue;
    }
    NodeRef up = q > 0 ? net.link_from(lk) : net.link_to(lk);
    A(row, static_cast<Eigen::Index>(map.node(net, up))) = 1.0;
  }

  // Pipe stencils: lambda written as a direction-resolved polynomial in q.
  for (std::size_t k = 0; k < links.size(); ++k) {
    const auto& lk = links[k];
    if (lk.kind != LinkKind::Pipe) continue;
    const auto& pipe = net.pipes[lk.index];
    auto [wf, wr] = dir_of(lk.index);
    int ns = map.pipe_segments[lk.index];
    double dx = pipe.length / ns;
    double area = std::numbers::pi * pipe.radius * pipe.radius;
    double lam = (in.flows[k] * (wf - wr)) / area * dt / dx;
    double kP = pipe_decay_rate({pipe.decay.k_b, pipe.decay.k_w, pipe.decay.k_f},
                                pipe.radius);
    std::size_t from_node = map.node(net, net.link_from(lk));
    std::size_t to_node = map.node(net, net.link_to(lk));
    for (int s = 0; s < ns; ++s) {
      auto row = static_cast<Eigen::Index>(map.pipe_seg(lk.index, s));
      A(row, row) = 1.0 - lam - kP * dt;
      std::size_t fwd_src = (s == 0) ? from_node : map.pipe_seg(lk.index, s - 1);
      std::size_t rev_src = (s == ns - 1) ? to_node : map.pipe_seg(lk.index, s + 1);
      A(row, static_cast<Eigen::Index>(fwd_src)) += lam * wf;
      A(row, static_cast<Eigen::Index>(rev_src)) += lam * wr;
    }
  }

  for (std::size_t bi = 0; bi < net.boosters.size(); ++bi) {
    const auto& bo = net.boosters[bi];
    NodeRef nd = net.node(bo.node);
    auto col = static_cast<Eigen::Index>(bi);
    if (nd.kind == NodeKind::Junction) {
      B(static_cast<Eigen::Index>(map.junction(nd.index)), col) = bo.flow / q_ref;
    } else if (nd.kind == NodeKind::Tank) {
      const auto& tk = net.tanks[nd.index];
      double v_ref = tk.area * (tk.h_max - tk.elevation);
      B(static_cast<Eigen::Index>(map.tank(nd.index)), col) = bo.flow * dt / v_ref;
    }
  }

  *A_out = std::move(A);
  *B_out = std::move(B);
}

Eigen::MatrixXd approx_target_gramian(const Network& net, const ApproxWqInput& in,
                                      const SegmentPlan& plan,
                                      const Eigen::MatrixXd& C_T, int N) {
  Eigen::MatrixXd A, B;
  assemble_approx_wq(net, in, plan, &A, &B);
  Eigen::MatrixXd W = gramian(A, B, N);
  return C_T * W * C_T.transpose();
}

}  // namespace aquactrl
