#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aquactrl/gramian.hpp"
#include "aquactrl/mpc.hpp"
#include "aquactrl/scheduling.hpp"
#include "aquactrl/water_quality.hpp"

namespace aquactrl {

inline constexpr const char* kArtifactVersion = "aquactrl v0.1.0";

// FNV-1a over the canonical config string; stamped into every output.
std::uint64_t config_hash(const std::string& canonical);

struct Manifest {
  std::uint64_t hash = 0;
  std::uint64_t seed = 0;
  std::string line() const;  // "# aquactrl v0.1.0 config_hash=... seed=..."
};

void write_hyd_csv(const std::string& path, const Network& net,
                   const HydraulicTrajectory& traj, const Manifest& m);

void write_wq_csv(const std::string& path, const std::vector<std::string>& labels,
                  const WqTrace& trace, const Manifest& m);

void write_sensor_csv(const std::string& path, const std::vector<std::string>& sensors,
                      const WqTrace& trace, const Manifest& m);

struct GramianRow {
  std::size_t step = 0;
  int n_sub = 0;
  int rank = 0;
  double rank_pct = 0.0;
  double trace = 0.0;
  double logdet = 0.0;
  double lambda_min = 0.0;
};

void write_gramian_csv(const std::string& path, const std::vector<GramianRow>& rows,
                       const Manifest& m);

void write_schedule_csv(const std::string& path, const Network& net,
                        const ScheduleResult& sr, const Manifest& m);

// JSON run manifest: config echo, seed, fallback events.
void write_run_manifest(const std::string& path, const std::string& config_echo,
                        const Manifest& m, const std::vector<std::string>& events);

void write_injection_csv(const std::string& path, const Network& net, const MpcResult& r,
                         const Manifest& m);

void write_mpc_summary(const std::string& path, const MpcResult& r, const Manifest& m);

}  // namespace aquactrl
