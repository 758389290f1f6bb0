#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace aquactrl {

// Thrown on malformed input documents and contract violations at the
// library boundary. Numerical solvers report through status enums instead.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Reservoir {
  std::string id;
  double head = 0.0;  // ft, fixed over the horizon
};

struct Tank {
  std::string id;
  double elevation = 0.0;  // ft, water volume datum
  double area = 0.0;       // ft^2, constant cross section
  double h_min = 0.0;      // ft
  double h_max = 0.0;      // ft
  double h_init = 0.0;     // ft
  double bulk_decay = 0.0; // 1/s
};

struct Booster {
  std::string node;     // junction (or tank) id
  double flow = 0.0;    // ft^3/s injection carrier flow
  double u_max = 4.0;   // mg/L maximum injected concentration
};

struct Junction {
  std::string id;
  double elevation = 0.0;    // ft
  double demand_base = 0.0;  // ft^3/s
  std::string pattern;       // empty -> constant multiplier 1
  bool sensor = false;
};

struct PipeDecay {
  double k_b = 0.0;  // 1/s bulk
  double k_w = 0.0;  // ft/s wall
  double k_f = 0.0;  // ft/s mass transfer
};

struct Pipe {
  std::string id;
  std::string from, to;
  double length = 0.0;      // ft
  double radius = 0.0;      // ft
  double resistance = 0.0;  // head-loss coefficient
  double exponent = 1.852;  // Hazen-Williams flow exponent
  PipeDecay decay;
};

struct Pump {
  std::string id;
  std::string from, to;
  double shutoff_head = 0.0;  // ft, gain at zero flow
  double alpha = 0.0;         // curve coefficient, internal flow units
  double nu = 0.0;            // curve exponent
  double s_max = 1.0;         // maximum relative speed
};

struct Valve {
  std::string id;
  std::string from, to;
  double minor_loss = 0.0;       // loss coefficient
  std::vector<bool> open_state;  // one entry per hydraulic step
};

struct Pattern {
  std::vector<double> multipliers;  // one per hydraulic step
};

enum class NodeKind { Reservoir, Junction, Tank };
enum class LinkKind { Pipe, Pump, Valve };

struct NodeRef {
  NodeKind kind;
  std::size_t index;  // into the matching vector
};

struct LinkRef {
  LinkKind kind;
  std::size_t index;
};

// Immutable once parsed; safe to share across concurrent analyses.
class Network {
 public:
  std::vector<Reservoir> reservoirs;
  std::vector<Junction> junctions;
  std::vector<Tank> tanks;
  std::vector<Pipe> pipes;
  std::vector<Pump> pumps;
  std::vector<Valve> valves;
  std::map<std::string, Pattern> patterns;
  std::vector<Booster> boosters;
  std::vector<std::string> sensors;  // node ids

  double dt_hyd = 3600.0;  // s
  double dt_wq = 10.0;     // s
  double horizon = 86400.0;  // s

  std::size_t n_reservoirs() const { return reservoirs.size(); }
  std::size_t n_junctions() const { return junctions.size(); }
  std::size_t n_tanks() const { return tanks.size(); }
  std::size_t n_pipes() const { return pipes.size(); }
  std::size_t n_pumps() const { return pumps.size(); }
  std::size_t n_valves() const { return valves.size(); }
  std::size_t n_links() const { return pipes.size() + pumps.size() + valves.size(); }
  std::size_t n_steps() const { return static_cast<std::size_t>(horizon / dt_hyd + 0.5); }

  // Link flow vector layout: pipes, then pumps, then valves.
  std::size_t link_offset(LinkKind k) const {
    switch (k) {
      case LinkKind::Pipe: return 0;
      case LinkKind::Pump: return pipes.size();
      case LinkKind::Valve: return pipes.size() + pumps.size();
    }
    return 0;
  }
  std::size_t link_row(LinkRef r) const { return link_offset(r.kind) + r.index; }

  const NodeRef& node(const std::string& id) const {
    auto it = node_index_.find(id);
    if (it == node_index_.end()) throw InputError("unknown node id: " + id);
    return it->second;
  }
  bool has_node(const std::string& id) const { return node_index_.count(id) > 0; }

  NodeRef link_from(LinkRef r) const { return node(link_from_id(r)); }
  NodeRef link_to(LinkRef r) const { return node(link_to_id(r)); }

  const std::string& link_from_id(LinkRef r) const {
    switch (r.kind) {
      case LinkKind::Pipe: return pipes[r.index].from;
      case LinkKind::Pump: return pumps[r.index].from;
      default: return valves[r.index].from;
    }
  }
  const std::string& link_to_id(LinkRef r) const {
    switch (r.kind) {
      case LinkKind::Pipe: return pipes[r.index].to;
      case LinkKind::Pump: return pumps[r.index].to;
      default: return valves[r.index].to;
    }
  }
  const std::string& link_id(LinkRef r) const {
    switch (r.kind) {
      case LinkKind::Pipe: return pipes[r.index].id;
      case LinkKind::Pump: return pumps[r.index].id;
      default: return valves[r.index].id;
    }
  }

  std::vector<LinkRef> all_links() const {
    std::vector<LinkRef> out;
    out.reserve(n_links());
    for (std::size_t i = 0; i < pipes.size(); ++i) out.push_back({LinkKind::Pipe, i});
    for (std::size_t i = 0; i < pumps.size(); ++i) out.push_back({LinkKind::Pump, i});
    for (std::size_t i = 0; i < valves.size(); ++i) out.push_back({LinkKind::Valve, i});
    return out;
  }

  // Fixed head of a reservoir node, or the supplied tank head.
  double fixed_head(NodeRef n, const std::vector<double>& tank_heads) const {
    if (n.kind == NodeKind::Reservoir) return reservoirs[n.index].head;
    if (n.kind == NodeKind::Tank) return tank_heads.at(n.index);
    throw InputError("fixed_head called on a junction");
  }

  double pattern_multiplier(const std::string& name, std::size_t step) const;

  // Called by the parser after the element vectors are filled.
  void rebuild_index();

 private:
  std::map<std::string, NodeRef> node_index_;
};

// Piecewise-constant junction demand vector at time t (ft^3/s).
std::vector<double> demand_vector(const Network& net, double t);

// Hydraulic step index containing time t; t == horizon maps to the final step.
std::size_t step_of_time(const Network& net, double t);

}  // namespace aquactrl
