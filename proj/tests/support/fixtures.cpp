#include "support/fixtures.hpp"

namespace fixtures {

using namespace lmpsens;

namespace {

Unit make_unit(std::string id, std::string node, UnitKind kind, std::string firm,
               std::vector<double> pmin, std::vector<double> pmax) {
  Unit u;
  u.id = std::move(id);
  u.node = std::move(node);
  u.kind = kind;
  u.firm = std::move(firm);
  u.p_min = std::move(pmin);
  u.p_max = std::move(pmax);
  return u;
}

BidCurve demand_bid(std::vector<BidSegment> segs) {
  BidCurve b;
  b.orientation = BidOrientation::Demand;
  b.segments = std::move(segs);
  return b;
}

BidCurve supply_bid(std::vector<BidSegment> segs) {
  BidCurve b;
  b.orientation = BidOrientation::Supply;
  b.segments = std::move(segs);
  return b;
}

}  // namespace

Scenario marginal_firm() {
  Scenario s;
  s.hours = 1;
  s.nodes = {"n1"};
  s.reference_node = "n1";
  s.firm_of_interest = "g";

  Unit d = make_unit("d1", "n1", UnitKind::Load, "consumers", {0.0}, {20.0});
  d.bid = demand_bid({{0.0, 20.0, -1.0, {}}});
  s.units.push_back(d);

  Unit sup = make_unit("s1", "n1", UnitKind::Generator, "s", {0.0}, {6.0});
  sup.bid = supply_bid({{0.0, 5.0, 0.0, {}}});
  s.units.push_back(sup);

  s.units.push_back(
      make_unit("g", "n1", UnitKind::FirmInjection, "g", {0.0}, {12.0}));
  return s;
}

Scenario prop2_capped_firm() {
  Scenario s;
  s.hours = 2;
  s.nodes = {"n1", "n2"};
  s.lines = {{"n1", "n2", 10.0, std::nullopt, std::nullopt}};
  s.reference_node = "n1";
  s.firm_of_interest = "g";

  Unit d = make_unit("d1", "n1", UnitKind::Load, "consumers", {0.0}, {48.0});
  d.bid = demand_bid({{0.0, 30.0, -0.5, {}}});
  s.units.push_back(d);

  Unit sup = make_unit("s1", "n1", UnitKind::Generator, "s", {0.0}, {60.0});
  sup.bid = supply_bid({{0.0, 10.0, 0.1, {}}});
  s.units.push_back(sup);

  Unit firm = make_unit("g", "n2", UnitKind::Generator, "g", {0.0}, {8.0});
  firm.bid = supply_bid({{0.0, 12.0, 0.0, {1}}, {0.0, 2.0, 0.0, {2}}});
  s.units.push_back(firm);
  return s;
}

Scenario prop2_coupled_firm() {
  Scenario s = prop2_capped_firm();
  for (auto& u : s.units) {
    if (u.id != "g") continue;
    u.p_max = {10.0};
    u.bid = supply_bid({{0.0, 1.0, 0.0, {}}});
    u.ramp_up = 2.0;
  }
  return s;
}

Scenario elastic_single_node() {
  Scenario s;
  s.hours = 1;
  s.nodes = {"n1"};
  s.reference_node = "n1";
  s.firm_of_interest = "g";

  Unit d = make_unit("d1", "n1", UnitKind::Load, "consumers", {0.0}, {45.0});
  d.bid = demand_bid({{0.0, 20.0, -0.4, {}}});
  s.units.push_back(d);

  Unit sup = make_unit("s1", "n1", UnitKind::Generator, "s", {0.0}, {50.0});
  sup.bid = supply_bid({{0.0, 2.0, 0.1, {}}});
  s.units.push_back(sup);

  s.units.push_back(
      make_unit("g", "n1", UnitKind::FirmInjection, "g", {0.0}, {10.0}));
  return s;
}

Scenario lossy_pair() {
  Scenario s;
  s.hours = 1;
  s.nodes = {"n1", "n2"};
  s.lines = {{"n1", "n2", 10.0, 100.0, 0.02}};
  s.reference_node = "n1";
  s.firm_of_interest = "g";

  Unit g1 = make_unit("g1", "n1", UnitKind::Generator, "s", {0.0}, {60.0});
  g1.bid = supply_bid({{0.0, 5.0, 0.2, {}}});
  s.units.push_back(g1);

  Unit d = make_unit("d2", "n2", UnitKind::Load, "consumers", {0.0}, {48.0});
  d.bid = demand_bid({{0.0, 30.0, -0.5, {}}});
  s.units.push_back(d);

  s.units.push_back(
      make_unit("g", "n2", UnitKind::FirmInjection, "g", {0.0}, {10.0}));
  return s;
}

Scenario twin_isolated() {
  Scenario s;
  s.hours = 1;
  s.nodes = {"n1", "n2"};
  s.reference_node = "n1";
  s.firm_of_interest = "g";
  s.allow_disconnected = true;

  for (int n = 1; n <= 2; ++n) {
    const std::string node = "n" + std::to_string(n);
    s.units.push_back(make_unit("d" + std::to_string(n), node, UnitKind::Load,
                                "consumers", {10.0}, {10.0}));
    Unit sup = make_unit("s" + std::to_string(n), node, UnitKind::Generator,
                         "s" + std::to_string(n), {0.0}, {20.0});
    sup.bid = supply_bid({{0.0, 1.0, 0.1, {}}});
    s.units.push_back(sup);
    s.units.push_back(make_unit("g" + std::to_string(n), node,
                                UnitKind::FirmInjection, "g", {0.0}, {8.0}));
  }
  return s;
}

}  // namespace fixtures
