// Hand-pinned scenarios shared by the unit suites and the acceptance run.
#pragma once

#include "lmpsens/scenario.hpp"

namespace fixtures {

/// Elastic demand 20 - q, flat 5 $/MWh supplier capped at 6 MW, firm
/// injection. The residual demand curve kinks at x = 9: the supplier's cap
/// multiplier hits zero there and the binding set flips.
lmpsens::Scenario marginal_firm();

/// Two hours; the firm's generator is cheap in hour 2 and its cap binds
/// there. Valid hour partition: pin hour 1, free hour 2.
lmpsens::Scenario prop2_capped_firm();

/// Firm generator with a tight upward ramp that binds across hours 1-2;
/// any partition separating the hours is invalid.
lmpsens::Scenario prop2_coupled_firm();

/// Strictly concave single-node market (elastic demand + quadratic supplier):
/// 1x1 response -a_S a_D / (a_S + a_D), negative definite.
lmpsens::Scenario elastic_single_node();

/// Two nodes joined by a lossy line: quadratic balance equalities make the
/// constraint set nonconvex and the price response state-dependent.
lmpsens::Scenario lossy_pair();

/// Two electrically isolated copies of the single-node market with the firm
/// present in both: the response matrix is block-diagonal.
lmpsens::Scenario twin_isolated();

}  // namespace fixtures
