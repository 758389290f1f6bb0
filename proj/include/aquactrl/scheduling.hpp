#pragma once

#include <string>
#include <vector>

#include "aquactrl/approx_gramian.hpp"
#include "aquactrl/hydraulics.hpp"
#include "aquactrl/network.hpp"
#include "aquactrl/optkern.hpp"
#include "aquactrl/pump_fit.hpp"
#include "aquactrl/pwl.hpp"

namespace aquactrl {

class SchedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PumpStatus { On, Bypass, CheckValveShut, Off };
std::string to_string(PumpStatus s);

// One hydraulic step's decision variables.
struct DecisionVector {
  std::vector<double> junction_heads;    // l
  std::vector<double> flows;             // z, link layout
  std::vector<double> tank_heads;        // w(t), chained in
  std::vector<double> tank_heads_next;   // w(t + dt_H)
  std::vector<double> speeds;            // s
  std::vector<std::vector<double>> zeta;   // per PWL link: pipes then valves
  std::vector<std::vector<double>> omega;
  double objective = 0.0;  // step energy cost, $
  Eigen::VectorXd raw;
};

// Offline pre-optimization artifacts: pipe/valve chords and pump fits.
struct ScheduleFits {
  PwlPlan pwl;
  std::vector<PumpCurveFit> curves;
  std::vector<PowerFit> power;
  double tariff = 0.0;  // $/kWh
  EfficiencyModel eta;
};

ScheduleFits make_fits(const Network& net, double tariff_per_kwh = 0.12, int n_pw = 3,
                       EfficiencyModel eta = {});

// Variable layout of one step problem:
// [l | z | w_next | s | zeta/omega blocks per PWL link].
struct StepVarMap {
  Eigen::Index l0 = 0, z0 = 0, w0 = 0, s0 = 0;
  std::vector<Eigen::Index> zeta0;   // per PWL link
  std::vector<Eigen::Index> omega0;
  std::vector<int> seg_count;
  Eigen::Index n = 0;
  std::size_t n_pipes = 0;  // PWL links: pipes first, then open valves
};

struct StepProblem {
  MipProblem mip;
  StepVarMap map;
  double objective_offset = 0.0;  // constant cost terms
  std::size_t step = 0;
  std::vector<double> tank_heads;  // w(t), fixed within the step
  std::vector<double> demands;
};

// Per-step MIQCQP: power-cost objective over the linearized network
// equations, segment-selection binaries, the convex pump-curve surrogate,
// and the physical box bounds.
StepProblem build_decoupled(const Network& net, const ScheduleFits& fits, std::size_t step,
                            const std::vector<double>& tank_heads,
                            const std::vector<double>& demands);

DecisionVector extract_decision(const Network& net, const StepProblem& p,
                                const Eigen::VectorXd& x);

struct StepSolveResult {
  DecisionVector decision;
  SolveStatus status;
};

StepSolveResult solve_decoupled(const Network& net, const ScheduleFits& fits,
                                const StepProblem& p);

// Shared precomputed context for the coupled proxies (offline boxes of the
// framework loop).
struct GramianProxyContext {
  SegmentPlan plan;       // offline segment sizing
  int horizon_steps = 24; // N for the approximate Gramian
};

struct RankProxy {
  std::vector<std::string> targets;  // state labels, e.g. "TK:TK1", "P:P1[1]"
  int l_r = 0;                       // required rank level
  double theta3 = 0.0;               // nuclear-norm weight
};

struct EnergyProxy {
  std::vector<std::vector<std::string>> target_sets;
  std::vector<double> thetas;
};

// Operating point for the denominator-free Gramian taken from a candidate
// decision vector; pipe direction weights come from the omega split.
ApproxWqInput approx_input_from_decision(const Network& net, const ScheduleFits& fits,
                                         const StepProblem& p, const Eigen::VectorXd& x);

// Quality-aware step solves: power cost minus a controllability reward,
// local-solved by successive linearization from the decoupled solution.
StepSolveResult solve_rank_informed(const Network& net, const ScheduleFits& fits,
                                    const StepProblem& p, const GramianProxyContext& ctx,
                                    const RankProxy& proxy);
StepSolveResult solve_energy_driven(const Network& net, const ScheduleFits& fits,
                                    const StepProblem& p, const GramianProxyContext& ctx,
                                    const EnergyProxy& proxy);

// Labels each pump from its flow and head increase (h_to - h_from); the
// reported speed is nulled unless the pump is On.
std::vector<PumpStatus> classify_pump_states(const Network& net, DecisionVector& d,
                                             double tol = 1e-6);

enum class ProxyKind { Decoupled, Rank, Energy };

struct StepProxyConfig {
  ProxyKind kind = ProxyKind::Decoupled;
  RankProxy rank;
  EnergyProxy energy;
};

struct LevelPolicy {
  int l_floor = 1;            // lowest admissible rank level
  double theta_floor = 1e-4;  // lowest admissible energy weight
  int max_reductions = 6;
};

struct FrameworkConfig {
  std::vector<StepProxyConfig> per_step;  // broadcast when a single entry
  LevelPolicy policy;
  GramianProxyContext ctx;
};

struct StepRecord {
  DecisionVector decision;
  SolveCode status = SolveCode::Infeasible;
  std::string proxy_used;  // decoupled | rank | energy
  std::vector<PumpStatus> pump_states;
  std::vector<std::string> events;
  double cost = 0.0;
};

struct ScheduleResult {
  std::vector<StepRecord> steps;
  double total_cost = 0.0;
  std::vector<std::string> events;  // fallbacks and level reductions
};

// The framework loop: per hydraulic step, solve the configured coupled
// proxy, reduce the controllability level on infeasibility, fall back to
// the decoupled problem below the floor, and chain tank heads.
ScheduleResult run_framework(const Network& net, const ScheduleFits& fits,
                             const FrameworkConfig& cfg);

// Hydraulic trajectory induced by a schedule's decisions (for WQ replay).
HydraulicTrajectory trajectory_from_schedule(const Network& net, const ScheduleResult& sr);

}  // namespace aquactrl
