#include "aquactrl/io_csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

namespace aquactrl {

std::uint64_t config_hash(const std::string& canonical) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string Manifest::line() const {
  char buf[128];
  std::snprintf(buf, sizeof buf, "# %s config_hash=%016llx seed=%llu", kArtifactVersion,
                static_cast<unsigned long long>(hash), static_cast<unsigned long long>(seed));
  return buf;
}

namespace {

std::ofstream open_out(const std::string& path, const Manifest& m) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot open output file: " + path);
  f << m.line() << "\n";
  return f;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

void write_hyd_csv(const std::string& path, const Network& net,
                   const HydraulicTrajectory& traj, const Manifest& m) {
  auto f = open_out(path, m);
  f << "t_s";
  for (const auto& r : net.reservoirs) f << ",head:" << r.id;
  for (const auto& j : net.junctions) f << ",head:" << j.id;
  for (const auto& t : net.tanks) f << ",head:" << t.id;
  for (auto lk : net.all_links()) f << ",flow:" << net.link_id(lk);
  for (const auto& p : net.pumps) f << ",speed:" << p.id;
  f << "\n";
  for (const auto& st : traj.states) {
    f << num(st.t);
    for (const auto& r : net.reservoirs) f << "," << num(r.head);
    for (std::size_t j = 0; j < net.n_junctions(); ++j) f << "," << num(st.junction_heads[j]);
    for (std::size_t t = 0; t < net.n_tanks(); ++t) f << "," << num(st.tank_heads[t]);
    for (std::size_t k = 0; k < net.n_links(); ++k) f << "," << num(st.flows[k]);
    for (std::size_t p = 0; p < net.n_pumps(); ++p) f << "," << num(st.speeds[p]);
    f << "\n";
  }
}

void write_wq_csv(const std::string& path, const std::vector<std::string>& labels,
                  const WqTrace& trace, const Manifest& m) {
  auto f = open_out(path, m);
  f << "t_s,state,mg_per_L\n";
  for (std::size_t k = 0; k < trace.times.size(); ++k)
    for (std::size_t i = 0; i < labels.size(); ++i)
      f << num(trace.times[k]) << "," << labels[i] << ","
        << num(trace.states[k][static_cast<Eigen::Index>(i)]) << "\n";
}

void write_sensor_csv(const std::string& path, const std::vector<std::string>& sensors,
                      const WqTrace& trace, const Manifest& m) {
  auto f = open_out(path, m);
  f << "t_s,sensor,mg_per_L\n";
  for (std::size_t k = 0; k < trace.times.size(); ++k)
    for (std::size_t i = 0; i < sensors.size(); ++i)
      f << num(trace.times[k]) << "," << sensors[i] << ","
        << num(trace.outputs[k][static_cast<Eigen::Index>(i)]) << "\n";
}

void write_gramian_csv(const std::string& path, const std::vector<GramianRow>& rows,
                       const Manifest& m) {
  auto f = open_out(path, m);
  f << "step,n_sub,rank,rank_pct,trace,logdet,lambda_min\n";
  for (const auto& r : rows)
    f << r.step << "," << r.n_sub << "," << r.rank << "," << num(r.rank_pct) << ","
      << num(r.trace) << "," << num(r.logdet) << "," << num(r.lambda_min) << "\n";
}

void write_schedule_csv(const std::string& path, const Network& net,
                        const ScheduleResult& sr, const Manifest& m) {
  auto f = open_out(path, m);
  f << "step,pump,speed,flow_ft3s,head_gain_ft,status,step_cost_usd,proxy_mode\n";
  for (std::size_t k = 0; k < sr.steps.size(); ++k) {
    const auto& rec = sr.steps[k];
    for (std::size_t mi = 0; mi < net.n_pumps(); ++mi) {
      LinkRef ref{LinkKind::Pump, mi};
      const auto& d = rec.decision;
      auto head_of = [&](NodeRef nd) {
        if (nd.kind == NodeKind::Junction) return d.junction_heads[nd.index];
        if (nd.kind == NodeKind::Tank) return d.tank_heads[nd.index];
        return net.reservoirs[nd.index].head;
      };
      double gain = head_of(net.link_to(ref)) - head_of(net.link_from(ref));
      f << k << "," << net.pumps[mi].id << "," << num(d.speeds[mi]) << ","
        << num(d.flows[net.link_row(ref)]) << "," << num(gain) << ","
        << to_string(rec.pump_states[mi]) << "," << num(rec.cost) << ","
        << rec.proxy_used << "\n";
    }
  }
}

void write_run_manifest(const std::string& path, const std::string& config_echo,
                        const Manifest& m, const std::vector<std::string>& events) {
  nlohmann::json j;
  j["artifact"] = kArtifactVersion;
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(m.hash));
  j["config_hash"] = hex;
  j["seed"] = m.seed;
  j["config"] = config_echo;
  j["events"] = events;
  std::ofstream f(path);
  if (!f) throw InputError("cannot open output file: " + path);
  f << j.dump(2) << "\n";
}

void write_injection_csv(const std::string& path, const Network& net, const MpcResult& r,
                         const Manifest& m) {
  auto f = open_out(path, m);
  f << "t_s,booster,mg_per_L_injected\n";
  for (std::size_t k = 0; k < r.times.size(); ++k)
    for (std::size_t b = 0; b < net.boosters.size(); ++b)
      f << num(r.times[k]) << "," << net.boosters[b].node << ","
        << num(r.injections[k][static_cast<Eigen::Index>(b)]) << "\n";
}

void write_mpc_summary(const std::string& path, const MpcResult& r, const Manifest& m) {
  nlohmann::json j;
  j["artifact"] = kArtifactVersion;
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(m.hash));
  j["config_hash"] = hex;
  j["seed"] = m.seed;
  j["total_mass_g"] = r.total_mass_g;
  j["time_to_setpoint_s"] = r.time_to_setpoint;
  int infeasible = 0;
  for (auto c : r.statuses)
    if (c != SolveCode::Optimal) ++infeasible;
  j["nonoptimal_steps"] = infeasible;
  std::ofstream f(path);
  if (!f) throw InputError("cannot open output file: " + path);
  f << j.dump(2) << "\n";
}

}  // namespace aquactrl
