#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "aquactrl/network_io.hpp"

namespace testing {

inline std::string data_path(const std::string& name) {
  return std::string(AQUACTRL_DATA_DIR) + "/" + name;
}

inline std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline aquactrl::Network load_fixture(const std::string& name) {
  return aquactrl::load_network(data_path(name));
}

// Two reservoirs joined by a single pipe; no junctions.
inline aquactrl::Network two_reservoir_net(double h1, double h2, double r, double mu) {
  aquactrl::Network net;
  net.reservoirs.push_back({"A", h1});
  net.reservoirs.push_back({"B", h2});
  aquactrl::Pipe p;
  p.id = "P";
  p.from = "A";
  p.to = "B";
  p.length = 1000.0;
  p.radius = 0.5;
  p.resistance = r;
  p.exponent = mu;
  net.pipes.push_back(p);
  net.dt_hyd = 3600.0;
  net.dt_wq = 10.0;
  net.horizon = 3600.0;
  net.rebuild_index();
  return net;
}

}  // namespace testing
