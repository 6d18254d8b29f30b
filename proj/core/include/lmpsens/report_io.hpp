// JSON / CSV / plain-text rendering of solver and analysis reports.
#pragma once

#include <string>

#include <json.hpp>

#include "lmpsens/crosscheck.hpp"
#include "lmpsens/propositions.hpp"
#include "lmpsens/sensitivity.hpp"
#include "lmpsens/solve.hpp"

namespace lmpsens {

nlohmann::ordered_json solution_report(const Problem& p, const Solution& s);
nlohmann::ordered_json response_report(const ResponseMatrix& m);
std::string response_csv(const ResponseMatrix& m);
nlohmann::ordered_json proposition_report_json(const PropositionReport& r);
nlohmann::ordered_json crosscheck_report_json(const CrossCheckReport& r);

std::string solution_table(const Problem& p, const Solution& s);
std::string response_table(const ResponseMatrix& m);
std::string proposition_table(const PropositionReport& r);
std::string crosscheck_table(const CrossCheckReport& r);

}  // namespace lmpsens
