#include "lmpsens/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace lmpsens {

double QuadForm::value(const Eigen::VectorXd& z) const {
  double v = constant;
  for (const auto& t : lin) v += t.coeff * z[t.var];
  for (const auto& t : quad) v += t.coeff * z[t.v1] * z[t.v2];
  return v;
}

Eigen::VectorXd QuadForm::gradient(const Eigen::VectorXd& z, int dim) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
  for (const auto& t : lin) g[t.var] += t.coeff;
  for (const auto& t : quad) {
    if (t.v1 == t.v2) {
      g[t.v1] += 2.0 * t.coeff * z[t.v1];
    } else {
      g[t.v1] += t.coeff * z[t.v2];
      g[t.v2] += t.coeff * z[t.v1];
    }
  }
  return g;
}

void QuadForm::add_hessian(Eigen::MatrixXd& H, double scale) const {
  for (const auto& t : quad) {
    if (t.v1 == t.v2) {
      H(t.v1, t.v1) += 2.0 * scale * t.coeff;
    } else {
      H(t.v1, t.v2) += scale * t.coeff;
      H(t.v2, t.v1) += scale * t.coeff;
    }
  }
}

int Problem::balance_index(int node, int hour) const {
  if (node < 0 || node >= static_cast<int>(node_names.size())) return -1;
  if (hour < 1 || hour > hours) return -1;
  return node * hours + (hour - 1);
}

namespace {

std::string hour_key(const std::string& id, int hour) {
  return id + "@" + std::to_string(hour);
}

struct SegmentChoice {
  const BidSegment* seg;
  double lo, hi;               // effective quantity box after pinning
  double cost_offset;          // exact piecewise integral offset at segment start
  std::vector<double> watch;   // interior breakpoints the box was clamped to
};

// Integral of mp(q) = price + slope*q over [a, b].
double mp_integral(const BidSegment& s, double a, double b) {
  return s.price * (b - a) + 0.5 * s.slope * (b * b - a * a);
}

SegmentChoice choose_segment(const Unit& u, int hour, double lo, double hi) {
  auto segs = u.bid->segments_for_hour(hour);
  if (segs.empty())
    throw ScenarioError(ScenarioError::Kind::Semantic, u.id,
                        "unit '" + u.id + "': bid has no segment for hour " +
                            std::to_string(hour));
  const double inf = std::numeric_limits<double>::infinity();
  if (lo < segs.front()->breakpoint - 1e-12)
    throw ScenarioError(ScenarioError::Kind::Semantic, u.id,
                        "unit '" + u.id + "': bid does not cover quantities "
                        "down to pmin in hour " + std::to_string(hour));

  std::vector<std::pair<double, double>> spans;  // [start, end) per segment
  for (size_t k = 0; k < segs.size(); ++k) {
    double start = segs[k]->breakpoint;
    double end = (k + 1 < segs.size()) ? segs[k + 1]->breakpoint : inf;
    spans.emplace_back(start, end);
  }
  std::vector<int> overlapping;
  for (size_t k = 0; k < segs.size(); ++k) {
    if (spans[k].first < hi - 1e-12 && spans[k].second > lo + 1e-12)
      overlapping.push_back(static_cast<int>(k));
  }
  if (overlapping.empty()) {
    // Degenerate box sitting exactly on a span edge; take the covering span.
    for (size_t k = 0; k < segs.size(); ++k)
      if (lo >= spans[k].first - 1e-12 && hi <= spans[k].second + 1e-12)
        overlapping.push_back(static_cast<int>(k));
  }
  int pick;
  if (overlapping.size() == 1) {
    pick = overlapping[0];
  } else if (u.segment) {
    pick = *u.segment;
    if (pick < 0 || pick >= static_cast<int>(segs.size()))
      throw ScenarioError(ScenarioError::Kind::Semantic, u.id,
                          "unit '" + u.id + "': pinned segment index " +
                              std::to_string(pick) + " is out of range");
  } else {
    throw ScenarioError(
        ScenarioError::Kind::Semantic, u.id,
        "unit '" + u.id + "': quantity box spans " +
            std::to_string(overlapping.size()) +
            " bid segments in hour " + std::to_string(hour) +
            "; pin the active segment via the unit's 'segment' field");
  }

  SegmentChoice c;
  c.seg = segs[static_cast<size_t>(pick)];
  c.lo = std::max(lo, spans[static_cast<size_t>(pick)].first);
  c.hi = std::min(hi, spans[static_cast<size_t>(pick)].second);
  if (c.lo > lo + 1e-12) c.watch.push_back(c.lo);
  if (c.hi < hi - 1e-12) c.watch.push_back(c.hi);

  // Exact piecewise integral from the curve start to the pinned segment start,
  // minus the pinned form evaluated there, so value functions report true
  // bid-curve integrals rather than per-segment extrapolations.
  double true_at_start = 0.0;
  for (int k = 0; k < pick; ++k)
    true_at_start += mp_integral(*segs[static_cast<size_t>(k)], spans[static_cast<size_t>(k)].first,
                                 spans[static_cast<size_t>(k)].second);
  const double pinned_at_start = mp_integral(*c.seg, 0.0, c.seg->breakpoint);
  c.cost_offset = true_at_start - pinned_at_start;
  return c;
}

}  // namespace

Problem assemble_problem(const Scenario& s) {
  Problem p;
  p.hours = s.hours;
  p.node_names = s.nodes;
  p.firm_of_interest = s.firm_of_interest;
  for (const auto& u : s.units) {
    p.unit_names.push_back(u.id);
    p.unit_firms.push_back(u.firm);
  }

  const int N = static_cast<int>(s.nodes.size());
  const int U = static_cast<int>(s.units.size());

  // Unit power variables, one per active (unit, hour).
  std::vector<std::vector<int>> qvar(U, std::vector<int>(s.hours + 1, -1));
  for (int ui = 0; ui < U; ++ui) {
    for (int h = 1; h <= s.hours; ++h) {
      if (!s.units[ui].active_in(h, s.hours)) continue;
      qvar[ui][h] = p.dim();
      p.vars.push_back({VarKind::UnitPower, ui, h,
                        "q:" + hour_key(s.units[ui].id, h)});
    }
  }

  // Angle variables for line-incident nodes (no network, no angles).
  std::vector<bool> incident(N, false);
  for (const auto& l : s.lines) {
    incident[s.node_index(l.from)] = true;
    incident[s.node_index(l.to)] = true;
  }
  std::vector<std::vector<int>> thvar(N, std::vector<int>(s.hours + 1, -1));
  for (int n = 0; n < N; ++n) {
    if (!incident[n]) continue;
    for (int h = 1; h <= s.hours; ++h) {
      thvar[n][h] = p.dim();
      p.vars.push_back({VarKind::Angle, n, h, "th:" + hour_key(s.nodes[n], h)});
    }
  }

  // Objective: consumer utility minus producer offer cost, per pinned segment.
  std::vector<std::vector<SegmentChoice>> choice(U);
  for (int ui = 0; ui < U; ++ui) {
    const Unit& u = s.units[ui];
    choice[ui].resize(static_cast<size_t>(s.hours + 1));
    for (int h = 1; h <= s.hours; ++h) {
      if (qvar[ui][h] < 0) continue;
      double lo = u.pmin_at(h), hi = u.pmax_at(h);
      if (!u.bid) {
        choice[ui][static_cast<size_t>(h)] = {nullptr, lo, hi, 0.0, {}};
        continue;
      }
      SegmentChoice c = choose_segment(u, h, lo, hi);
      choice[ui][static_cast<size_t>(h)] = c;
      const int v = qvar[ui][h];
      const double sign = (u.bid->orientation == BidOrientation::Demand) ? 1.0 : -1.0;
      p.objective.lin.push_back({v, sign * c.seg->price});
      if (c.seg->slope != 0.0)
        p.objective.quad.push_back({v, v, sign * 0.5 * c.seg->slope});
      p.objective.constant += sign * c.cost_offset;
      for (double w : c.watch) p.breakpoint_watch.emplace_back(v, w);
    }
  }

  // Nodal balances: f(u) + sum(q_load) - sum(q_gen) - sum(x_firm) = 0.
  // The multiplier of this orientation is the nodal price.
  for (int n = 0; n < N; ++n) {
    for (int h = 1; h <= s.hours; ++h) {
      ConstraintRecord c;
      c.tag = {ConstraintType::NodalBalance, n, h, 0, 0,
               "balance:" + hour_key(s.nodes[n], h)};
      c.relation = Relation::Eq;
      for (int ui = 0; ui < U; ++ui) {
        if (s.units[ui].node != s.nodes[n] || qvar[ui][h] < 0) continue;
        const double coeff = (s.units[ui].kind == UnitKind::Load) ? 1.0 : -1.0;
        c.f.lin.push_back({qvar[ui][h], coeff});
      }
      for (size_t li = 0; li < s.lines.size(); ++li) {
        const NetworkLine& l = s.lines[li];
        const int a = s.node_index(l.from), b = s.node_index(l.to);
        if (a != n && b != n) continue;
        const int vf = thvar[a][h], vt = thvar[b][h];
        const double B = l.susceptance;
        // Flow out of n through this line.
        c.f.lin.push_back({(a == n) ? vf : vt, B});
        c.f.lin.push_back({(a == n) ? vt : vf, -B});
        if (l.loss && *l.loss > 0.0) {
          // Half of the quadratic line loss is charged to each endpoint.
          const double k = 0.5 * (*l.loss) * B * B;
          c.f.quad.push_back({vf, vf, k});
          c.f.quad.push_back({vt, vt, k});
          c.f.quad.push_back({vf, vt, -2.0 * k});
          p.has_nonconvex_constraint = true;
        }
      }
      p.constraints.push_back(std::move(c));
    }
  }

  // One reference-angle equality per connected line component and hour.
  if (!s.lines.empty()) {
    std::vector<int> comp(N, -1);
    std::vector<std::vector<int>> adj(N);
    for (const auto& l : s.lines) {
      int a = s.node_index(l.from), b = s.node_index(l.to);
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
    int ncomp = 0;
    for (int seed = 0; seed < N; ++seed) {
      if (!incident[seed] || comp[seed] >= 0) continue;
      std::vector<int> stack{seed};
      comp[seed] = ncomp;
      while (!stack.empty()) {
        int n = stack.back();
        stack.pop_back();
        for (int m : adj[n])
          if (comp[m] < 0) {
            comp[m] = ncomp;
            stack.push_back(m);
          }
      }
      ++ncomp;
    }
    const int ref = s.node_index(s.reference_node);
    for (int c0 = 0; c0 < ncomp; ++c0) {
      int anchor = -1;
      if (ref >= 0 && comp[ref] == c0) anchor = ref;
      for (int n = 0; anchor < 0 && n < N; ++n)
        if (comp[n] == c0) anchor = n;
      for (int h = 1; h <= s.hours; ++h) {
        ConstraintRecord c;
        c.tag = {ConstraintType::Reference, anchor, h, 0, 0,
                 "ref:" + hour_key(s.nodes[anchor], h)};
        c.relation = Relation::Eq;
        c.f.lin.push_back({thvar[anchor][h], 1.0});
        p.constraints.push_back(std::move(c));
      }
    }
  }

  // Unit quantity boxes; pmin == pmax collapses to a single equality so the
  // binding-constraint Jacobian keeps full rank for inelastic units.
  for (int ui = 0; ui < U; ++ui) {
    const Unit& u = s.units[ui];
    for (int h = 1; h <= s.hours; ++h) {
      if (qvar[ui][h] < 0) continue;
      const auto& ch = choice[ui][static_cast<size_t>(h)];
      const double lo = ch.lo, hi = ch.hi;
      const int v = qvar[ui][h];
      if (std::abs(hi - lo) <= 1e-15) {
        ConstraintRecord c;
        c.tag = {ConstraintType::UnitLimit, ui, h, 0, 0,
                 "fix:" + hour_key(u.id, h)};
        c.relation = Relation::Eq;
        c.f.lin.push_back({v, 1.0});
        c.f.constant = -lo;
        c.owner_firm = u.firm;
        p.constraints.push_back(std::move(c));
      } else {
        ConstraintRecord clo;
        clo.tag = {ConstraintType::UnitLimit, ui, h, 0, 0,
                   "ulim:" + hour_key(u.id, h) + ":lo"};
        clo.relation = Relation::Le;
        clo.f.lin.push_back({v, -1.0});
        clo.f.constant = lo;
        clo.owner_firm = u.firm;
        p.constraints.push_back(std::move(clo));

        ConstraintRecord chi;
        chi.tag = {ConstraintType::UnitLimit, ui, h, 0, 1,
                   "ulim:" + hour_key(u.id, h) + ":hi"};
        chi.relation = Relation::Le;
        chi.f.lin.push_back({v, 1.0});
        chi.f.constant = -hi;
        chi.owner_firm = u.firm;
        p.constraints.push_back(std::move(chi));
      }
    }
  }

  // Ramping between consecutive active hours.
  for (int ui = 0; ui < U; ++ui) {
    const Unit& u = s.units[ui];
    if (!u.ramp_up && !u.ramp_down) continue;
    for (int h = 1; h < s.hours; ++h) {
      if (qvar[ui][h] < 0 || qvar[ui][h + 1] < 0) continue;
      if (u.ramp_up) {
        ConstraintRecord c;
        c.tag = {ConstraintType::Ramp, ui, h, h + 1, 0,
                 "ramp:" + u.id + "@" + std::to_string(h) + "->" +
                     std::to_string(h + 1) + ":up"};
        c.relation = Relation::Le;
        c.f.lin.push_back({qvar[ui][h + 1], 1.0});
        c.f.lin.push_back({qvar[ui][h], -1.0});
        c.f.constant = -*u.ramp_up;
        c.owner_firm = u.firm;
        p.constraints.push_back(std::move(c));
      }
      if (u.ramp_down) {
        ConstraintRecord c;
        c.tag = {ConstraintType::Ramp, ui, h, h + 1, 1,
                 "ramp:" + u.id + "@" + std::to_string(h) + "->" +
                     std::to_string(h + 1) + ":down"};
        c.relation = Relation::Le;
        c.f.lin.push_back({qvar[ui][h], 1.0});
        c.f.lin.push_back({qvar[ui][h + 1], -1.0});
        c.f.constant = -*u.ramp_down;
        c.owner_firm = u.firm;
        p.constraints.push_back(std::move(c));
      }
    }
  }

  // Directed flow limits on the DC component of the flow.
  for (size_t li = 0; li < s.lines.size(); ++li) {
    const NetworkLine& l = s.lines[li];
    if (!l.limit) continue;
    const int a = s.node_index(l.from), b = s.node_index(l.to);
    const std::string lid = l.from + "-" + l.to;
    for (int h = 1; h <= s.hours; ++h) {
      ConstraintRecord fwd;
      fwd.tag = {ConstraintType::FlowLimit, static_cast<int>(li), h, 0, 0,
                 "flow:" + hour_key(lid, h) + ":fwd"};
      fwd.relation = Relation::Le;
      fwd.f.lin.push_back({thvar[a][h], l.susceptance});
      fwd.f.lin.push_back({thvar[b][h], -l.susceptance});
      fwd.f.constant = -*l.limit;
      p.constraints.push_back(std::move(fwd));

      ConstraintRecord rev;
      rev.tag = {ConstraintType::FlowLimit, static_cast<int>(li), h, 0, 1,
                 "flow:" + hour_key(lid, h) + ":rev"};
      rev.relation = Relation::Le;
      rev.f.lin.push_back({thvar[a][h], -l.susceptance});
      rev.f.lin.push_back({thvar[b][h], l.susceptance});
      rev.f.constant = -*l.limit;
      p.constraints.push_back(std::move(rev));
    }
  }

  // Nonconvex inequality quadratics would also break the convex-case analysis;
  // only the loss equalities produce quadratic terms today, flagged above.

  for (auto& c : p.constraints) {
    double amax = 0.0;
    for (const auto& t : c.f.lin) amax = std::max(amax, std::abs(t.coeff));
    c.scale = std::max(1.0, amax);
  }

  // Firm-of-interest index set, ordered by (node, hour).
  std::vector<FirmIndexEntry> fidx;
  for (int n = 0; n < N; ++n) {
    for (int h = 1; h <= s.hours; ++h) {
      for (int ui = 0; ui < U; ++ui) {
        if (s.units[ui].firm != s.firm_of_interest) continue;
        if (s.units[ui].node != s.nodes[n] || qvar[ui][h] < 0) continue;
        fidx.push_back({n, h, ui, qvar[ui][h], hour_key(s.nodes[n], h)});
      }
    }
  }
  p.firm_index = std::move(fidx);
  for (const auto& fe : p.firm_index)
    p.firm_locations.emplace_back(fe.node, fe.hour);
  return p;
}

}  // namespace lmpsens
