#include "lmpsens/report_io.hpp"

#include <cstdio>
#include <sstream>

namespace lmpsens {

using json = nlohmann::ordered_json;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fixed(double v, int prec = 6) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

json solution_report(const Problem& p, const Solution& s) {
  json j;
  j["status"] = to_string(s.status);
  j["objective"] = s.objective;
  json point;
  for (int v = 0; v < p.dim(); ++v)
    if (s.point.size() == p.dim()) point[p.vars[static_cast<size_t>(v)].name] = s.point[v];
  j["point"] = point;
  json mult;
  for (size_t m = 0; m < p.constraints.size(); ++m)
    if (s.multipliers.size() == static_cast<int>(p.constraints.size()) &&
        s.multipliers[static_cast<int>(m)] != 0.0)
      mult[p.constraints[m].tag.text] = s.multipliers[static_cast<int>(m)];
  j["multipliers"] = mult;
  j["residuals"] = {{"stationarity", s.stationarity},
                    {"feasibility", s.feasibility},
                    {"complementarity", s.complementarity}};
  json lmp;
  if (s.status == SolveStatus::Optimal) {
    for (const auto& [key, price] : lmp_table(p, s))
      lmp[p.node_names[static_cast<size_t>(key.first)] + "@" +
          std::to_string(key.second)] = price;
  }
  j["lmp"] = lmp;
  if (s.status == SolveStatus::Optimal) {
    json binding = json::array();
    for (const auto& e : binding_set(p, s).entries) {
      json b;
      b["constraint"] = p.constraints[static_cast<size_t>(e.constraint)].tag.text;
      b["partition"] = to_string(e.label);
      if (e.degenerate) b["degenerate"] = true;
      binding.push_back(b);
    }
    j["binding"] = binding;
  }
  j["local_only"] = s.local_only;
  return j;
}

json response_report(const ResponseMatrix& m) {
  json j;
  j["route"] = to_string(m.provenance);
  json idx = json::array();
  for (const auto& fe : m.index) idx.push_back(fe.key);
  j["index"] = idx;
  j["matrix"] = matrix_json(m.m);
  return j;
}

std::string response_csv(const ResponseMatrix& m) {
  std::ostringstream out;
  for (const auto& fe : m.index) out << "," << fe.key;
  out << "\n";
  for (int i = 0; i < m.m.rows(); ++i) {
    out << m.index[static_cast<size_t>(i)].key;
    for (int j = 0; j < m.m.cols(); ++j) out << "," << num(m.m(i, j));
    out << "\n";
  }
  return out.str();
}

json proposition_report_json(const PropositionReport& r) {
  json j;
  j["proposition"] = r.proposition;
  j["assumptions"] = {{"uniqueness", to_string(r.uniqueness)},
                      {"smoothness", to_string(r.smoothness)},
                      {"cardinality", to_string(r.cardinality)},
                      {"licq", to_string(r.licq_verdict)},
                      {"kernel_hessian", to_string(r.kernel_verdict)},
                      {"binding_stability", to_string(r.stability)},
                      {"convexity", to_string(r.convexity)}};
  j["guarantee"] = to_string(r.guarantee);
  json d;
  d["binding_count"] = r.binding_count;
  d["scope_dim"] = r.scope_dim;
  d["licq_rank"] = r.rank.rank;
  d["licq_sigma_min"] = r.rank.sigma_min;
  d["kernel_dim"] = r.kernel.dim;
  if (r.kernel.dim > 0) d["kernel_basis"] = matrix_json(r.kernel.basis);
  d["kernel_eigenvalues"] = vector_json(r.kernel.eigenvalues);
  d["kernel_min_abs_eig"] = r.kernel.min_abs;
  d["probe_radius"] = r.probe.radius;
  d["probes"] = r.probe.probes;
  d["probe_detail"] = r.probe.detail;
  d["degenerate"] = r.degenerate;
  d["convexity_detail"] = r.convex.detail;
  d["offer_independence_checked"] = r.offer_independence_checked;
  d["offer_independence_dev"] = r.offer_independence_dev;
  if (!r.notes.empty()) d["notes"] = r.notes;
  j["diagnostics"] = d;
  return j;
}

json crosscheck_report_json(const CrossCheckReport& r) {
  json j;
  j["guarantee"] = to_string(r.prop1.guarantee);
  j["index"] = json::array();
  for (const auto& fe : r.kkt.index) j["index"].push_back(fe.key);
  j["kkt"] = matrix_json(r.kkt.m);
  j["projection"] = matrix_json(r.projection.matrix.m);
  j["finite_difference"] = matrix_json(r.fd.m);
  j["dev_kkt_projection"] = r.dev_kkt_projection;
  j["dev_kkt_fd"] = r.dev_kkt_fd;
  j["split_deviation"] = r.projection.split_deviation;
  j["symmetry_defect"] = r.symmetry;
  j["eigenvalues"] = vector_json(r.spectrum.values);
  j["eigenvectors"] = matrix_json(r.spectrum.vectors);
  j["definiteness"] = to_string(r.dclass);
  j["nested_evaluated"] = r.nested_evaluated;
  if (r.nested_evaluated) {
    j["full_objective"] = r.full_objective;
    j["outer_objective"] = r.outer_objective;
    j["nested_gap"] = r.nested_gap;
  }
  j["proposition"] = proposition_report_json(r.prop1);
  j["breaches"] = r.breaches;
  j["pass"] = r.pass;
  return j;
}

std::string solution_table(const Problem& p, const Solution& s) {
  std::ostringstream out;
  out << "status: " << to_string(s.status) << "\n";
  if (s.status != SolveStatus::Optimal) {
    if (s.status == SolveStatus::Infeasible)
      out << "no dispatch satisfies the constraint set within tolerance\n";
    return out.str();
  }
  out << "objective: " << fixed(s.objective) << " $\n";
  out << "\ndispatch (MW):\n";
  for (int v = 0; v < p.dim(); ++v)
    if (p.vars[static_cast<size_t>(v)].kind == VarKind::UnitPower)
      out << "  " << p.vars[static_cast<size_t>(v)].name << " = "
          << fixed(s.point[v]) << "\n";
  out << "\nlmp ($/MWh):\n";
  for (const auto& [key, price] : lmp_table(p, s))
    out << "  " << p.node_names[static_cast<size_t>(key.first)] << "@"
        << key.second << " = " << fixed(price) << "\n";
  out << "\nbinding constraints:\n";
  for (const auto& e : binding_set(p, s).entries) {
    out << "  " << p.constraints[static_cast<size_t>(e.constraint)].tag.text
        << " [" << to_string(e.label) << "]"
        << (e.degenerate ? " (degenerate)" : "") << "\n";
  }
  return out.str();
}

std::string response_table(const ResponseMatrix& m) {
  std::ostringstream out;
  out << "response matrix (" << to_string(m.provenance) << "), ($/MWh)/MW:\n";
  out << "          ";
  for (const auto& fe : m.index) out << " " << fe.key;
  out << "\n";
  for (int i = 0; i < m.m.rows(); ++i) {
    out << "  " << m.index[static_cast<size_t>(i)].key << ":";
    for (int j = 0; j < m.m.cols(); ++j) out << " " << fixed(m.m(i, j));
    out << "\n";
  }
  return out.str();
}

std::string proposition_table(const PropositionReport& r) {
  std::ostringstream out;
  out << "proposition " << r.proposition << " check:\n";
  out << "  uniqueness:        " << to_string(r.uniqueness) << "\n";
  out << "  smoothness:        " << to_string(r.smoothness) << "\n";
  out << "  cardinality:       " << to_string(r.cardinality) << " ("
      << r.binding_count << " <= " << r.scope_dim << ")\n";
  out << "  licq:              " << to_string(r.licq_verdict) << " (rank "
      << r.rank.rank << "/" << r.rank.count << ", sigma_min "
      << num(r.rank.sigma_min) << ")\n";
  out << "  kernel hessian:    " << to_string(r.kernel_verdict) << " (dim "
      << r.kernel.dim << ")\n";
  out << "  binding stability: " << to_string(r.stability) << " ("
      << r.probe.detail << ")\n";
  out << "  convexity:         " << to_string(r.convexity) << "\n";
  if (!r.degenerate.empty()) {
    out << "  degenerate rows:  ";
    for (const auto& t : r.degenerate) out << " " << t;
    out << "\n";
  }
  if (r.offer_independence_checked)
    out << "  offer independence dev: " << num(r.offer_independence_dev) << "\n";
  out << "guarantee: " << to_string(r.guarantee) << "\n";
  return out.str();
}

std::string crosscheck_table(const CrossCheckReport& r) {
  std::ostringstream out;
  out << response_table(r.kkt);
  out << "\nroute agreement:\n";
  out << "  kkt vs projection: " << num(r.dev_kkt_projection) << "\n";
  out << "  kkt vs fd:         " << num(r.dev_kkt_fd) << "\n";
  out << "  eq-split identity: " << num(r.projection.split_deviation) << "\n";
  out << "symmetry defect: " << num(r.symmetry) << "\n";
  out << "eigenvalues:";
  for (int i = 0; i < r.spectrum.values.size(); ++i)
    out << " " << num(r.spectrum.values[i]);
  out << "\nclass: " << to_string(r.dclass) << "\n";
  if (r.nested_evaluated)
    out << "nested gap: " << num(r.nested_gap) << " (full "
        << fixed(r.full_objective) << ", outer " << fixed(r.outer_objective)
        << ")\n";
  out << "guarantee: " << to_string(r.prop1.guarantee) << "\n";
  if (!r.breaches.empty()) {
    out << "breaches:\n";
    for (const auto& b : r.breaches) out << "  " << b << "\n";
  }
  out << (r.pass ? "all checks passed" : "checks FAILED") << "\n";
  return out.str();
}

}  // namespace lmpsens
