// Scenario schema: declarative market descriptions, parsing, validation,
// and the pinned builtin fixtures.
#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lmpsens {

enum class UnitKind { Generator, Load, FirmInjection };
enum class BidOrientation { Supply, Demand };

std::string to_string(UnitKind k);

/// One quadratic marginal-price segment: mp(q) = price + slope * q,
/// valid from `breakpoint` up to the next segment's breakpoint.
struct BidSegment {
  double breakpoint = 0.0;  // MW
  double price = 0.0;       // $/MWh intercept
  double slope = 0.0;       // $/MWh per MW
  std::vector<int> hours;   // 1-based hours the segment applies to; empty = all
};

struct BidCurve {
  BidOrientation orientation = BidOrientation::Supply;
  std::vector<BidSegment> segments;

  /// Segments applicable in `hour`, in declaration order.
  std::vector<const BidSegment*> segments_for_hour(int hour) const;
};

struct Unit {
  std::string id;
  std::string node;
  UnitKind kind = UnitKind::Generator;
  std::string firm;
  std::vector<int> hours;     // active hours, 1-based; empty = all hours
  std::vector<double> p_min;  // MW; size 1 broadcasts to all hours
  std::vector<double> p_max;
  std::optional<double> ramp_up;    // MW per consecutive hour pair
  std::optional<double> ramp_down;
  std::optional<BidCurve> bid;      // absent for firm-injection (costless)
  std::optional<int> segment;       // pinned active segment (index per hour)

  bool active_in(int hour, int total_hours) const;
  double pmin_at(int hour) const;
  double pmax_at(int hour) const;
};

struct NetworkLine {
  std::string from;
  std::string to;
  double susceptance = 0.0;      // per-unit
  std::optional<double> limit;   // MW
  std::optional<double> loss;    // quadratic loss coefficient, per MW^2
};

struct Scenario {
  int hours = 1;
  std::vector<std::string> nodes;
  std::vector<NetworkLine> lines;
  std::vector<Unit> units;
  std::string reference_node;
  std::string firm_of_interest;
  bool allow_disconnected = false;

  int node_index(const std::string& id) const;  // -1 if unknown
};

/// Violations are data, not failures: each names the entity and rule broken.
struct Violation {
  std::string entity;
  std::string rule;
  std::string message;
};

class ScenarioError : public std::runtime_error {
 public:
  enum class Kind { Syntax, Semantic };

  ScenarioError(Kind kind, std::string entity, const std::string& message)
      : std::runtime_error(message), kind_(kind), entity_(std::move(entity)) {}

  Kind kind() const { return kind_; }
  const std::string& entity() const { return entity_; }

 private:
  Kind kind_;
  std::string entity_;
};

Scenario parse_scenario(const std::string& doc);
std::string serialize_scenario(const Scenario& s);
std::vector<Violation> validate_scenario(const Scenario& s);

/// Pinned fixtures: "ramp2h", "single-node-linear", "dc3".
Scenario builtin_scenario(const std::string& name);

}  // namespace lmpsens
