#include "lmpsens/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace lmpsens {

using json = nlohmann::ordered_json;

std::string to_string(UnitKind k) {
  switch (k) {
    case UnitKind::Generator: return "generator";
    case UnitKind::Load: return "load";
    case UnitKind::FirmInjection: return "firm-injection";
  }
  return "?";
}

std::vector<const BidSegment*> BidCurve::segments_for_hour(int hour) const {
  std::vector<const BidSegment*> out;
  for (const auto& seg : segments) {
    if (seg.hours.empty() ||
        std::find(seg.hours.begin(), seg.hours.end(), hour) != seg.hours.end()) {
      out.push_back(&seg);
    }
  }
  return out;
}

bool Unit::active_in(int hour, int total_hours) const {
  if (hours.empty()) return hour >= 1 && hour <= total_hours;
  return std::find(hours.begin(), hours.end(), hour) != hours.end();
}

namespace {

double bound_at(const std::vector<double>& b, int hour, double fallback) {
  if (b.empty()) return fallback;
  if (b.size() == 1) return b[0];
  return b[static_cast<size_t>(hour - 1)];
}

}  // namespace

double Unit::pmin_at(int hour) const { return bound_at(p_min, hour, 0.0); }
double Unit::pmax_at(int hour) const { return bound_at(p_max, hour, 0.0); }

int Scenario::node_index(const std::string& id) const {
  for (size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i] == id) return static_cast<int>(i);
  return -1;
}

namespace {

int line_of_offset(const std::string& doc, size_t byte) {
  int line = 1;
  for (size_t i = 0; i < byte && i < doc.size(); ++i)
    if (doc[i] == '\n') ++line;
  return line;
}

std::vector<double> parse_bounds(const json& j, const std::string& unit_id,
                                 const char* field) {
  std::vector<double> out;
  if (j.is_number()) {
    out.push_back(j.get<double>());
  } else if (j.is_array()) {
    for (const auto& v : j) {
      if (!v.is_number())
        throw ScenarioError(ScenarioError::Kind::Semantic, unit_id,
                            "unit '" + unit_id + "': " + field +
                                " entries must be numbers");
      out.push_back(v.get<double>());
    }
  } else {
    throw ScenarioError(ScenarioError::Kind::Semantic, unit_id,
                        "unit '" + unit_id + "': " + field +
                            " must be a number or array");
  }
  return out;
}

std::vector<int> parse_hours(const json& j, const std::string& entity) {
  std::vector<int> out;
  for (const auto& v : j) {
    if (!v.is_number_integer())
      throw ScenarioError(ScenarioError::Kind::Semantic, entity,
                          "'" + entity + "': hours must be integers");
    out.push_back(v.get<int>());
  }
  return out;
}

BidCurve parse_bid(const json& j, const std::string& unit_id, UnitKind kind) {
  BidCurve curve;
  curve.orientation = (kind == UnitKind::Load) ? BidOrientation::Demand
                                               : BidOrientation::Supply;
  if (!j.is_array())
    throw ScenarioError(ScenarioError::Kind::Semantic, unit_id,
                        "unit '" + unit_id + "': bid must be a segment array");
  for (const auto& js : j) {
    BidSegment seg;
    seg.breakpoint = js.value("q", 0.0);
    if (!js.contains("price"))
      throw ScenarioError(ScenarioError::Kind::Semantic, unit_id,
                          "unit '" + unit_id + "': bid segment missing 'price'");
    seg.price = js.at("price").get<double>();
    seg.slope = js.value("slope", 0.0);
    if (js.contains("hours")) seg.hours = parse_hours(js.at("hours"), unit_id);
    curve.segments.push_back(seg);
  }
  return curve;
}

}  // namespace

Scenario parse_scenario(const std::string& doc) {
  json j;
  try {
    j = json::parse(doc);
  } catch (const nlohmann::json::parse_error& e) {
    std::ostringstream msg;
    msg << "scenario syntax error at line " << line_of_offset(doc, e.byte)
        << ": " << e.what();
    throw ScenarioError(ScenarioError::Kind::Syntax, "", msg.str());
  }

  auto require = [&](const char* key) -> const json& {
    if (!j.contains(key))
      throw ScenarioError(ScenarioError::Kind::Semantic, key,
                          std::string("scenario missing required field '") +
                              key + "'");
    return j.at(key);
  };

  Scenario s;
  s.hours = require("hours").get<int>();
  for (const auto& n : require("nodes")) {
    if (n.is_string())
      s.nodes.push_back(n.get<std::string>());
    else if (n.is_object() && n.contains("id"))
      s.nodes.push_back(n.at("id").get<std::string>());
    else
      throw ScenarioError(ScenarioError::Kind::Semantic, "nodes",
                          "nodes[] entries must be strings or {id} objects");
  }
  if (j.contains("lines")) {
    for (const auto& jl : j.at("lines")) {
      NetworkLine l;
      l.from = jl.at("from").get<std::string>();
      l.to = jl.at("to").get<std::string>();
      l.susceptance = jl.at("susceptance").get<double>();
      if (jl.contains("limit") && !jl.at("limit").is_null())
        l.limit = jl.at("limit").get<double>();
      if (jl.contains("loss") && !jl.at("loss").is_null())
        l.loss = jl.at("loss").get<double>();
      s.lines.push_back(l);
    }
  }
  for (const auto& ju : require("units")) {
    Unit u;
    u.id = ju.at("id").get<std::string>();
    u.node = ju.at("node").get<std::string>();
    const std::string kind = ju.at("kind").get<std::string>();
    if (kind == "generator")
      u.kind = UnitKind::Generator;
    else if (kind == "load")
      u.kind = UnitKind::Load;
    else if (kind == "firm-injection")
      u.kind = UnitKind::FirmInjection;
    else
      throw ScenarioError(ScenarioError::Kind::Semantic, u.id,
                          "unit '" + u.id + "': unknown kind '" + kind + "'");
    u.firm = ju.value("firm", std::string{});
    if (ju.contains("hours")) u.hours = parse_hours(ju.at("hours"), u.id);
    if (ju.contains("pmin")) u.p_min = parse_bounds(ju.at("pmin"), u.id, "pmin");
    if (ju.contains("pmax")) u.p_max = parse_bounds(ju.at("pmax"), u.id, "pmax");
    if (ju.contains("ramp_up") && !ju.at("ramp_up").is_null())
      u.ramp_up = ju.at("ramp_up").get<double>();
    if (ju.contains("ramp_down") && !ju.at("ramp_down").is_null())
      u.ramp_down = ju.at("ramp_down").get<double>();
    if (ju.contains("bid") && !ju.at("bid").is_null())
      u.bid = parse_bid(ju.at("bid"), u.id, u.kind);
    if (ju.contains("segment") && !ju.at("segment").is_null())
      u.segment = ju.at("segment").get<int>();
    s.units.push_back(std::move(u));
  }
  s.reference_node = require("reference_node").get<std::string>();
  s.firm_of_interest = require("firm_of_interest").get<std::string>();
  s.allow_disconnected = j.value("allow_disconnected", false);

  // Reference integrity is a hard parse failure (the rest is validate()'s job).
  for (const auto& u : s.units) {
    if (s.node_index(u.node) < 0)
      throw ScenarioError(ScenarioError::Kind::Semantic, u.node,
                          "unit '" + u.id + "' references unknown node '" +
                              u.node + "'");
  }
  for (const auto& l : s.lines) {
    for (const std::string& end : {l.from, l.to}) {
      if (s.node_index(end) < 0)
        throw ScenarioError(ScenarioError::Kind::Semantic, end,
                            "line references unknown node '" + end + "'");
    }
  }
  if (s.node_index(s.reference_node) < 0)
    throw ScenarioError(ScenarioError::Kind::Semantic, s.reference_node,
                        "reference_node '" + s.reference_node +
                            "' is not a declared node");
  return s;
}

std::string serialize_scenario(const Scenario& s) {
  json j;
  j["hours"] = s.hours;
  j["nodes"] = s.nodes;
  json jlines = json::array();
  for (const auto& l : s.lines) {
    json jl;
    jl["from"] = l.from;
    jl["to"] = l.to;
    jl["susceptance"] = l.susceptance;
    if (l.limit) jl["limit"] = *l.limit;
    if (l.loss) jl["loss"] = *l.loss;
    jlines.push_back(jl);
  }
  j["lines"] = jlines;
  json junits = json::array();
  for (const auto& u : s.units) {
    json ju;
    ju["id"] = u.id;
    ju["node"] = u.node;
    ju["kind"] = to_string(u.kind);
    if (!u.firm.empty()) ju["firm"] = u.firm;
    if (!u.hours.empty()) ju["hours"] = u.hours;
    if (!u.p_min.empty())
      ju["pmin"] = u.p_min.size() == 1 ? json(u.p_min[0]) : json(u.p_min);
    if (!u.p_max.empty())
      ju["pmax"] = u.p_max.size() == 1 ? json(u.p_max[0]) : json(u.p_max);
    if (u.ramp_up) ju["ramp_up"] = *u.ramp_up;
    if (u.ramp_down) ju["ramp_down"] = *u.ramp_down;
    if (u.bid) {
      json jb = json::array();
      for (const auto& seg : u.bid->segments) {
        json js;
        js["q"] = seg.breakpoint;
        js["price"] = seg.price;
        js["slope"] = seg.slope;
        if (!seg.hours.empty()) js["hours"] = seg.hours;
        jb.push_back(js);
      }
      ju["bid"] = jb;
    }
    if (u.segment) ju["segment"] = *u.segment;
    junits.push_back(ju);
  }
  j["units"] = junits;
  j["reference_node"] = s.reference_node;
  j["firm_of_interest"] = s.firm_of_interest;
  if (s.allow_disconnected) j["allow_disconnected"] = true;
  return j.dump(2);
}

namespace {

void check_bid_monotone(const Unit& u, int hours, std::vector<Violation>& out) {
  if (!u.bid) return;
  const bool supply = u.bid->orientation == BidOrientation::Supply;
  for (int h = 1; h <= hours; ++h) {
    if (!u.active_in(h, hours)) continue;
    auto segs = u.bid->segments_for_hour(h);
    double prev_bp = -1.0;
    for (const auto* seg : segs) {
      if (seg->breakpoint < 0.0)
        out.push_back({u.id, "bid-breakpoint-negative",
                       "unit '" + u.id + "': first breakpoint must be >= 0"});
      if (prev_bp >= 0.0 && seg->breakpoint <= prev_bp)
        out.push_back({u.id, "bid-breakpoints-order",
                       "unit '" + u.id +
                           "': breakpoints must be strictly increasing"});
      const bool slope_ok = supply ? seg->slope >= 0.0 : seg->slope <= 0.0;
      if (!slope_ok)
        out.push_back({u.id, "nonmonotone-bid",
                       "unit '" + u.id + "': " +
                           (supply ? "supply marginal price must be nondecreasing"
                                   : "demand marginal price must be nonincreasing")});
      prev_bp = seg->breakpoint;
    }
    // Junction monotonicity between consecutive segments.
    for (size_t k = 0; k + 1 < segs.size(); ++k) {
      const double q = segs[k + 1]->breakpoint;
      const double end_mp = segs[k]->price + segs[k]->slope * q;
      const double next_mp = segs[k + 1]->price + segs[k + 1]->slope * q;
      const bool jump_ok = supply ? next_mp >= end_mp - 1e-12 : next_mp <= end_mp + 1e-12;
      if (!jump_ok)
        out.push_back({u.id, "nonmonotone-bid",
                       "unit '" + u.id +
                           "': marginal price reverses at breakpoint " +
                           std::to_string(q)});
    }
  }
}

}  // namespace

std::vector<Violation> validate_scenario(const Scenario& s) {
  std::vector<Violation> out;
  if (s.hours < 1)
    out.push_back({"scenario", "hours-positive", "hours must be >= 1"});

  std::set<std::string> node_ids(s.nodes.begin(), s.nodes.end());
  if (node_ids.size() != s.nodes.size())
    out.push_back({"nodes", "duplicate-node", "node ids must be unique"});

  // At most one unit of each kind per node: keeps the nodal variable map and
  // the firm index set well defined.
  std::map<std::pair<std::string, int>, int> per_node_kind;
  std::set<std::string> unit_ids;
  int firm_units = 0;
  for (const auto& u : s.units) {
    if (!unit_ids.insert(u.id).second)
      out.push_back({u.id, "duplicate-unit", "unit id '" + u.id + "' repeats"});
    if (s.node_index(u.node) < 0)
      out.push_back({u.id, "unknown-node",
                     "unit '" + u.id + "' references unknown node '" + u.node + "'"});
    auto key = std::make_pair(u.node, static_cast<int>(u.kind));
    if (++per_node_kind[key] == 2)
      out.push_back({u.node, "multi-unit-node",
                     "node '" + u.node + "' hosts more than one " +
                         to_string(u.kind) + " unit"});

    const size_t H = static_cast<size_t>(s.hours);
    for (const auto* b : {&u.p_min, &u.p_max}) {
      if (b->size() > 1 && b->size() != H)
        out.push_back({u.id, "bounds-length",
                       "unit '" + u.id + "': per-hour bounds must have " +
                           std::to_string(s.hours) + " entries"});
    }
    for (int h = 1; h <= s.hours; ++h) {
      if (!u.active_in(h, s.hours)) continue;
      if (u.p_min.size() > 1 && u.p_min.size() != H) break;
      if (u.p_max.size() > 1 && u.p_max.size() != H) break;
      if (u.pmin_at(h) > u.pmax_at(h))
        out.push_back({u.id, "bound-order",
                       "unit '" + u.id + "': pmin > pmax in hour " +
                           std::to_string(h)});
    }
    if ((u.ramp_up && *u.ramp_up < 0.0) || (u.ramp_down && *u.ramp_down < 0.0))
      out.push_back({u.id, "ramp-negative",
                     "unit '" + u.id + "': ramp limits must be >= 0"});

    if (u.kind == UnitKind::FirmInjection) {
      if (u.bid)
        out.push_back({u.id, "costless-injection-bid",
                       "unit '" + u.id + "': firm-injection units are costless "
                       "and take no bid"});
    }
    check_bid_monotone(u, s.hours, out);

    if (u.firm == s.firm_of_interest && !s.firm_of_interest.empty()) {
      ++firm_units;
      if (u.kind == UnitKind::Load)
        out.push_back({u.id, "firm-unit-kind",
                       "unit '" + u.id + "': firm-of-interest units must be "
                       "generation-side (generator or firm-injection)"});
    }
  }
  if (firm_units == 0)
    out.push_back({"firm_of_interest", "firm-missing",
                   "firm_of_interest '" + s.firm_of_interest +
                       "' owns no units"});

  for (const auto& l : s.lines) {
    const std::string lid = l.from + "-" + l.to;
    if (l.susceptance <= 0.0)
      out.push_back({lid, "susceptance-positive",
                     "line " + lid + ": susceptance must be > 0"});
    if (l.loss && *l.loss < 0.0)
      out.push_back({lid, "loss-negative",
                     "line " + lid + ": loss coefficient must be >= 0"});
    if (s.node_index(l.from) < 0 || s.node_index(l.to) < 0)
      out.push_back({lid, "unknown-node", "line " + lid + " references unknown node"});
  }

  // Connectivity (isolated nodes count as components).
  if (!s.nodes.empty() && !s.allow_disconnected) {
    std::vector<int> comp(s.nodes.size(), -1);
    std::vector<std::vector<int>> adj(s.nodes.size());
    for (const auto& l : s.lines) {
      int a = s.node_index(l.from), b = s.node_index(l.to);
      if (a >= 0 && b >= 0) {
        adj[a].push_back(b);
        adj[b].push_back(a);
      }
    }
    std::vector<int> stack{0};
    comp[0] = 0;
    while (!stack.empty()) {
      int n = stack.back();
      stack.pop_back();
      for (int m : adj[n])
        if (comp[m] < 0) {
          comp[m] = 0;
          stack.push_back(m);
        }
    }
    if (std::any_of(comp.begin(), comp.end(), [](int c) { return c < 0; }))
      out.push_back({"scenario", "disconnected-network",
                     "network is not connected (set allow_disconnected to "
                     "accept multi-component scenarios)"});
  }
  return out;
}

Scenario builtin_scenario(const std::string& name) {
  // ramp2h pins n=8, alpha=c=1: demand caps 1.5n/3n, offers 7cn/4 and cn,
  // supplier cap 5n, upward ramp n.
  if (name == "ramp2h") {
    Scenario s;
    s.hours = 2;
    s.nodes = {"n1"};
    s.reference_node = "n1";
    s.firm_of_interest = "g";

    Unit demand;
    demand.id = "demand";
    demand.node = "n1";
    demand.kind = UnitKind::Load;
    demand.firm = "consumers";
    demand.p_min = {0.0};
    demand.p_max = {12.0, 24.0};
    BidCurve dbid;
    dbid.orientation = BidOrientation::Demand;
    dbid.segments = {{0.0, 12.0, -1.0, {1}}, {0.0, 24.0, -1.0, {2}}};
    demand.bid = dbid;
    s.units.push_back(demand);

    Unit supplier;
    supplier.id = "gprime";
    supplier.node = "n1";
    supplier.kind = UnitKind::Generator;
    supplier.firm = "gprime";
    supplier.p_min = {0.0};
    supplier.p_max = {40.0};
    supplier.ramp_up = 8.0;
    BidCurve sbid;
    sbid.orientation = BidOrientation::Supply;
    sbid.segments = {{0.0, 14.0, 0.0, {1}}, {0.0, 8.0, 0.0, {2}}};
    supplier.bid = sbid;
    s.units.push_back(supplier);

    Unit firm;
    firm.id = "g";
    firm.node = "n1";
    firm.kind = UnitKind::FirmInjection;
    firm.firm = "g";
    firm.p_min = {0.0};
    firm.p_max = {24.0};
    s.units.push_back(firm);
    return s;
  }

  if (name == "single-node-linear") {
    Scenario s;
    s.hours = 1;
    s.nodes = {"n1"};
    s.reference_node = "n1";
    s.firm_of_interest = "g";

    Unit demand;
    demand.id = "demand";
    demand.node = "n1";
    demand.kind = UnitKind::Load;
    demand.firm = "consumers";
    demand.p_min = {10.0};
    demand.p_max = {10.0};
    s.units.push_back(demand);

    Unit supplier;
    supplier.id = "s1";
    supplier.node = "n1";
    supplier.kind = UnitKind::Generator;
    supplier.firm = "s";
    supplier.p_min = {0.0};
    supplier.p_max = {20.0};
    BidCurve sbid;
    sbid.orientation = BidOrientation::Supply;
    sbid.segments = {{0.0, 1.0, 0.1, {}}};
    supplier.bid = sbid;
    s.units.push_back(supplier);

    Unit firm;
    firm.id = "g";
    firm.node = "n1";
    firm.kind = UnitKind::FirmInjection;
    firm.firm = "g";
    firm.p_min = {0.0};
    firm.p_max = {8.0};
    s.units.push_back(firm);
    return s;
  }

  if (name == "dc3") {
    Scenario s;
    s.hours = 1;
    s.nodes = {"n1", "n2", "n3"};
    s.lines = {{"n1", "n2", 10.0, 100.0, std::nullopt},
               {"n2", "n3", 10.0, 100.0, std::nullopt},
               {"n3", "n1", 10.0, 100.0, std::nullopt}};
    s.reference_node = "n1";
    s.firm_of_interest = "g";

    Unit gen;
    gen.id = "gen1";
    gen.node = "n1";
    gen.kind = UnitKind::Generator;
    gen.firm = "s";
    gen.p_min = {0.0};
    gen.p_max = {60.0};
    BidCurve gbid;
    gbid.orientation = BidOrientation::Supply;
    gbid.segments = {{0.0, 5.0, 0.25, {}}};
    gen.bid = gbid;
    s.units.push_back(gen);

    Unit load;
    load.id = "load2";
    load.node = "n2";
    load.kind = UnitKind::Load;
    load.firm = "consumers";
    load.p_min = {0.0};
    load.p_max = {60.0};
    BidCurve dbid;
    dbid.orientation = BidOrientation::Demand;
    dbid.segments = {{0.0, 30.0, -0.5, {}}};
    load.bid = dbid;
    s.units.push_back(load);

    Unit firm;
    firm.id = "g";
    firm.node = "n3";
    firm.kind = UnitKind::FirmInjection;
    firm.firm = "g";
    firm.p_min = {0.0};
    firm.p_max = {20.0};
    s.units.push_back(firm);
    return s;
  }

  throw ScenarioError(ScenarioError::Kind::Semantic, name,
                      "unknown builtin scenario '" + name + "'");
}

}  // namespace lmpsens
