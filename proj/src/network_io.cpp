#include "aquactrl/network_io.hpp"

#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "aquactrl/units.hpp"

namespace aquactrl {

using nlohmann::json;

namespace {

// Reads a quantity stored under `<base>_<tag>` and converts to internal
// units. Exactly one tag from `tags` may be present; any other `<base>_*`
// key is an unknown unit tag.
double read_qty(const json& obj, const std::string& where, const std::string& base,
                const std::vector<std::pair<std::string, double>>& tags,
                std::optional<double> fallback = std::nullopt) {
  const json* found = nullptr;
  double factor = 1.0;
  for (const auto& [tag, f] : tags) {
    std::string key = base + "_" + tag;
    if (obj.contains(key)) {
      if (found) throw InputError(where + ": duplicate unit tags for " + base);
      found = &obj.at(key);
      factor = f;
    }
  }
  if (!found) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (it.key().rfind(base + "_", 0) == 0)
        throw InputError(where + ": unit tag unknown: " + it.key());
    }
    if (fallback) return *fallback;
    throw InputError(where + ": missing field " + base);
  }
  if (!found->is_number()) throw InputError(where + ": " + base + " must be a number");
  return found->get<double>() * factor;
}

const std::vector<std::pair<std::string, double>> kLen = {{"ft", 1.0}};
const std::vector<std::pair<std::string, double>> kArea = {{"ft2", 1.0}};
const std::vector<std::pair<std::string, double>> kFlow = {
    {"GPM", units::GPM_TO_FT3S}, {"ft3_per_s", 1.0}};
const std::vector<std::pair<std::string, double>> kPerS = {{"per_s", 1.0}};
const std::vector<std::pair<std::string, double>> kVel = {{"ft_per_s", 1.0}};
const std::vector<std::pair<std::string, double>> kConc = {{"mg_per_L", 1.0}};
const std::vector<std::pair<std::string, double>> kTime = {{"s", 1.0}};

std::string want_id(const json& obj, const std::string& where) {
  if (!obj.contains("id")) throw InputError(where + ": missing id");
  return obj.at("id").get<std::string>();
}

}  // namespace

double Network::pattern_multiplier(const std::string& name, std::size_t step) const {
  if (name.empty()) return 1.0;
  auto it = patterns.find(name);
  if (it == patterns.end()) throw InputError("unknown pattern: " + name);
  const auto& m = it->second.multipliers;
  if (m.empty()) return 1.0;
  return m[std::min(step, m.size() - 1)];
}

void Network::rebuild_index() {
  node_index_.clear();
  for (std::size_t i = 0; i < reservoirs.size(); ++i)
    node_index_[reservoirs[i].id] = {NodeKind::Reservoir, i};
  for (std::size_t i = 0; i < junctions.size(); ++i)
    node_index_[junctions[i].id] = {NodeKind::Junction, i};
  for (std::size_t i = 0; i < tanks.size(); ++i)
    node_index_[tanks[i].id] = {NodeKind::Tank, i};
}

std::size_t step_of_time(const Network& net, double t) {
  if (t < 0.0 || t > net.horizon)
    throw InputError("time outside horizon [0," + std::to_string(net.horizon) + "]: " +
                     std::to_string(t));
  auto step = static_cast<std::size_t>(t / net.dt_hyd);
  // t == horizon lands on the final step (closed-interval convention).
  if (step >= net.n_steps()) step = net.n_steps() - 1;
  return step;
}

std::vector<double> demand_vector(const Network& net, double t) {
  std::size_t step = step_of_time(net, t);
  std::vector<double> out(net.n_junctions());
  for (std::size_t i = 0; i < net.junctions.size(); ++i) {
    const auto& j = net.junctions[i];
    out[i] = j.demand_base * net.pattern_multiplier(j.pattern, step);
  }
  return out;
}

Network parse_network(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("syntax error: ") + e.what());
  }

  Network net;

  const json& meta = doc.value("meta", json::object());
  net.dt_hyd = meta.value("dt_hydraulic_s", 3600.0);
  net.dt_wq = meta.value("dt_wq_s", 10.0);
  net.horizon = meta.value("horizon_s", 86400.0);
  if (net.dt_hyd <= 0 || net.dt_wq <= 0 || net.horizon <= 0)
    throw InputError("meta: time steps and horizon must be positive");
  double ratio = net.dt_hyd / net.dt_wq;
  if (std::abs(ratio - std::round(ratio)) > 1e-9)
    throw InputError("meta: dt_hydraulic_s must be an integer multiple of dt_wq_s");

  const json& nodes = doc.value("nodes", json::object());
  for (const auto& r : nodes.value("reservoirs", json::array())) {
    Reservoir res;
    res.id = want_id(r, "reservoir");
    res.head = read_qty(r, "reservoir " + res.id, "head", kLen);
    net.reservoirs.push_back(res);
  }
  for (const auto& j : nodes.value("junctions", json::array())) {
    Junction jn;
    jn.id = want_id(j, "junction");
    std::string where = "junction " + jn.id;
    jn.elevation = read_qty(j, where, "elevation", kLen, 0.0);
    jn.demand_base = read_qty(j, where, "demand_base", kFlow, 0.0);
    jn.pattern = j.value("pattern", "");
    net.junctions.push_back(jn);
  }
  for (const auto& t : nodes.value("tanks", json::array())) {
    Tank tk;
    tk.id = want_id(t, "tank");
    std::string where = "tank " + tk.id;
    tk.elevation = read_qty(t, where, "elevation", kLen, 0.0);
    tk.area = read_qty(t, where, "area", kArea);
    tk.h_min = read_qty(t, where, "h_min", kLen);
    tk.h_max = read_qty(t, where, "h_max", kLen);
    tk.h_init = read_qty(t, where, "h_init", kLen);
    tk.bulk_decay = read_qty(t, where, "bulk_decay", kPerS, 0.0);
    net.tanks.push_back(tk);
  }
  if (net.reservoirs.empty() && net.junctions.empty() && net.tanks.empty())
    throw InputError("no nodes");

  net.rebuild_index();

  const json& quality = doc.value("quality", json::object());
  PipeDecay decay_default;
  if (quality.contains("decay_defaults")) {
    const json& d = quality.at("decay_defaults");
    decay_default.k_b = read_qty(d, "decay_defaults", "k_b", kPerS, 0.0);
    decay_default.k_w = read_qty(d, "decay_defaults", "k_w", kVel, 0.0);
    decay_default.k_f = read_qty(d, "decay_defaults", "k_f", kVel, 0.0);
  }

  auto check_node = [&](const std::string& id, const std::string& where) {
    if (!net.has_node(id)) throw InputError(where + ": missing referenced node " + id);
  };

  const json& links = doc.value("links", json::object());
  for (const auto& p : links.value("pipes", json::array())) {
    Pipe pi;
    pi.id = want_id(p, "pipe");
    std::string where = "pipe " + pi.id;
    pi.from = p.value("from", "");
    pi.to = p.value("to", "");
    check_node(pi.from, where);
    check_node(pi.to, where);
    pi.length = read_qty(p, where, "length", kLen);
    pi.radius = read_qty(p, where, "radius", kLen);
    if (!p.contains("resistance")) throw InputError(where + ": missing field resistance");
    pi.resistance = p.at("resistance").get<double>();
    pi.exponent = p.value("exponent", 1.852);
    pi.decay = decay_default;
    if (p.contains("decay")) {
      const json& d = p.at("decay");
      pi.decay.k_b = read_qty(d, where + " decay", "k_b", kPerS, decay_default.k_b);
      pi.decay.k_w = read_qty(d, where + " decay", "k_w", kVel, decay_default.k_w);
      pi.decay.k_f = read_qty(d, where + " decay", "k_f", kVel, decay_default.k_f);
    }
    net.pipes.push_back(pi);
  }
  for (const auto& m : links.value("pumps", json::array())) {
    Pump pu;
    pu.id = want_id(m, "pump");
    std::string where = "pump " + pu.id;
    pu.from = m.value("from", "");
    pu.to = m.value("to", "");
    check_node(pu.from, where);
    check_node(pu.to, where);
    pu.shutoff_head = read_qty(m, where, "shutoff_head", kLen);
    if (!m.contains("alpha") || !m.contains("nu"))
      throw InputError(where + ": missing curve coefficients alpha/nu");
    pu.nu = m.at("nu").get<double>();
    double alpha = m.at("alpha").get<double>();
    // Curve coefficients are quoted for a flow unit; rescale alpha so the
    // curve evaluates with internal ft^3/s flows.
    std::string funit = m.value("curve_flow_unit", "GPM");
    if (funit == "GPM")
      pu.alpha = alpha * std::pow(1.0 / units::GPM_TO_FT3S, pu.nu);
    else if (funit == "ft3_per_s")
      pu.alpha = alpha;
    else
      throw InputError(where + ": unit tag unknown: curve_flow_unit " + funit);
    pu.s_max = m.value("s_max", 1.0);
    net.pumps.push_back(pu);
  }
  for (const auto& v : links.value("valves", json::array())) {
    Valve va;
    va.id = want_id(v, "valve");
    std::string where = "valve " + va.id;
    va.from = v.value("from", "");
    va.to = v.value("to", "");
    check_node(va.from, where);
    check_node(va.to, where);
    if (!v.contains("minor_loss")) throw InputError(where + ": missing field minor_loss");
    va.minor_loss = v.at("minor_loss").get<double>();
    if (v.contains("states")) {
      for (const auto& s : v.at("states")) va.open_state.push_back(s.get<int>() != 0);
    }
    net.valves.push_back(va);
  }

  const json patterns_obj = doc.value("patterns", json::object());
  for (const auto& [name, arr] : patterns_obj.items()) {
    Pattern pat;
    for (const auto& x : arr) pat.multipliers.push_back(x.get<double>());
    net.patterns[name] = pat;
  }

  for (const auto& b : quality.value("boosters", json::array())) {
    Booster bo;
    bo.node = b.value("node", "");
    check_node(bo.node, "booster");
    bo.flow = read_qty(b, "booster " + bo.node, "flow", kFlow);
    bo.u_max = read_qty(b, "booster " + bo.node, "u_max", kConc, 4.0);
    net.boosters.push_back(bo);
  }
  for (const auto& s : quality.value("sensors", json::array())) {
    std::string id = s.get<std::string>();
    check_node(id, "sensor");
    net.sensors.push_back(id);
  }

  return net;
}

Network load_network(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open network file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_network(ss.str());
}

std::string serialize_network(const Network& net) {
  json doc;
  doc["meta"] = {{"dt_hydraulic_s", net.dt_hyd},
                 {"dt_wq_s", net.dt_wq},
                 {"horizon_s", net.horizon}};
  json reservoirs = json::array();
  for (const auto& r : net.reservoirs)
    reservoirs.push_back({{"id", r.id}, {"head_ft", r.head}});
  json junctions = json::array();
  for (const auto& j : net.junctions) {
    json o = {{"id", j.id},
              {"elevation_ft", j.elevation},
              {"demand_base_ft3_per_s", j.demand_base}};
    if (!j.pattern.empty()) o["pattern"] = j.pattern;
    junctions.push_back(o);
  }
  json tanks = json::array();
  for (const auto& t : net.tanks)
    tanks.push_back({{"id", t.id},
                     {"elevation_ft", t.elevation},
                     {"area_ft2", t.area},
                     {"h_min_ft", t.h_min},
                     {"h_max_ft", t.h_max},
                     {"h_init_ft", t.h_init},
                     {"bulk_decay_per_s", t.bulk_decay}});
  doc["nodes"] = {{"reservoirs", reservoirs}, {"junctions", junctions}, {"tanks", tanks}};

  json pipes = json::array();
  for (const auto& p : net.pipes)
    pipes.push_back({{"id", p.id},
                     {"from", p.from},
                     {"to", p.to},
                     {"length_ft", p.length},
                     {"radius_ft", p.radius},
                     {"resistance", p.resistance},
                     {"exponent", p.exponent},
                     {"decay",
                      {{"k_b_per_s", p.decay.k_b},
                       {"k_w_ft_per_s", p.decay.k_w},
                       {"k_f_ft_per_s", p.decay.k_f}}}});
  json pumps = json::array();
  for (const auto& m : net.pumps)
    pumps.push_back({{"id", m.id},
                     {"from", m.from},
                     {"to", m.to},
                     {"shutoff_head_ft", m.shutoff_head},
                     {"alpha", m.alpha},
                     {"curve_flow_unit", "ft3_per_s"},
                     {"nu", m.nu},
                     {"s_max", m.s_max}});
  json valves = json::array();
  for (const auto& v : net.valves) {
    json states = json::array();
    for (bool b : v.open_state) states.push_back(b ? 1 : 0);
    valves.push_back({{"id", v.id},
                      {"from", v.from},
                      {"to", v.to},
                      {"minor_loss", v.minor_loss},
                      {"states", states}});
  }
  doc["links"] = {{"pipes", pipes}, {"pumps", pumps}, {"valves", valves}};

  json patterns = json::object();
  for (const auto& [name, pat] : net.patterns) patterns[name] = pat.multipliers;
  doc["patterns"] = patterns;

  json boosters = json::array();
  for (const auto& b : net.boosters)
    boosters.push_back(
        {{"node", b.node}, {"flow_ft3_per_s", b.flow}, {"u_max_mg_per_L", b.u_max}});
  doc["quality"] = {{"boosters", boosters}, {"sensors", net.sensors}};

  return doc.dump(2);
}

std::vector<Diagnostic> validate_network(const Network& net) {
  std::vector<Diagnostic> out;
  auto add = [&](const std::string& id, const std::string& msg) {
    out.push_back({id, msg});
  };

  for (const auto& r : net.reservoirs)
    if (!std::isfinite(r.head)) add(r.id, "non-finite reservoir head");
  for (const auto& t : net.tanks) {
    if (t.area <= 0) add(t.id, "nonpositive tank area");
    if (t.h_min > t.h_max) add(t.id, "tank head bounds inverted");
    if (t.h_init > t.h_max) add(t.id, "tank initial head above maximum");
    if (t.h_init < t.h_min) add(t.id, "tank initial head below minimum");
    if (t.elevation >= t.h_min) add(t.id, "tank elevation must sit below h_min");
    if (t.bulk_decay < 0) add(t.id, "negative bulk decay");
  }
  for (const auto& j : net.junctions) {
    if (j.demand_base < 0) add(j.id, "negative base demand");
    if (!j.pattern.empty() && !net.patterns.count(j.pattern))
      add(j.id, "unknown pattern " + j.pattern);
  }
  for (const auto& p : net.pipes) {
    if (p.length <= 0) add(p.id, "nonpositive length");
    if (p.radius <= 0) add(p.id, "nonpositive radius");
    if (p.resistance <= 0) add(p.id, "nonpositive resistance");
    if (p.exponent <= 1.0) add(p.id, "flow exponent must exceed 1");
    if (p.decay.k_b < 0 || p.decay.k_w < 0 || p.decay.k_f < 0)
      add(p.id, "negative decay coefficient");
  }
  for (const auto& m : net.pumps) {
    if (m.s_max <= 0) add(m.id, "nonpositive maximum speed");
    if (m.shutoff_head <= 0) add(m.id, "nonpositive shutoff head");
    if (m.alpha <= 0 || m.nu <= 0) add(m.id, "nonpositive curve coefficients");
  }
  for (const auto& v : net.valves) {
    if (v.minor_loss < 0) add(v.id, "negative minor loss coefficient");
    if (v.open_state.size() < net.n_steps())
      add(v.id, "state schedule shorter than horizon");
  }
  for (const auto& [name, pat] : net.patterns) {
    if (pat.multipliers.size() < net.n_steps())
      add(name, "pattern shorter than horizon");
    for (double m : pat.multipliers)
      if (m < 0) {
        add(name, "negative pattern multiplier");
        break;
      }
  }
  for (const auto& b : net.boosters)
    if (b.flow < 0) add(b.node, "negative booster flow");

  // Weak connectivity over the undirected link graph, and source
  // reachability for every pump.
  std::map<std::string, std::vector<std::string>> adj;
  auto connect = [&](const std::string& a, const std::string& b) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  };
  for (const auto& p : net.pipes) connect(p.from, p.to);
  for (const auto& m : net.pumps) connect(m.from, m.to);
  for (const auto& v : net.valves) connect(v.from, v.to);

  std::set<std::string> all_ids;
  for (const auto& r : net.reservoirs) all_ids.insert(r.id);
  for (const auto& j : net.junctions) all_ids.insert(j.id);
  for (const auto& t : net.tanks) all_ids.insert(t.id);
  if (!all_ids.empty()) {
    std::set<std::string> seen;
    std::queue<std::string> q;
    q.push(*all_ids.begin());
    seen.insert(*all_ids.begin());
    while (!q.empty()) {
      auto cur = q.front();
      q.pop();
      for (const auto& nb : adj[cur])
        if (seen.insert(nb).second) q.push(nb);
    }
    if (seen.size() != all_ids.size())
      add("network", "graph is not weakly connected");

    std::set<std::string> sources;
    for (const auto& r : net.reservoirs) sources.insert(r.id);
    for (const auto& t : net.tanks) sources.insert(t.id);
    for (const auto& m : net.pumps) {
      bool reach = false;
      std::set<std::string> vis{m.from};
      std::queue<std::string> qq;
      qq.push(m.from);
      while (!qq.empty() && !reach) {
        auto cur = qq.front();
        qq.pop();
        if (sources.count(cur)) reach = true;
        for (const auto& nb : adj[cur])
          if (vis.insert(nb).second) qq.push(nb);
      }
      if (!reach) add(m.id, "pump has no path to any source");
    }
  }

  return out;
}

}  // namespace aquactrl
