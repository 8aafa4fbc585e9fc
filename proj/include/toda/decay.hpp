#pragma once

#include <string>

#include "toda/bvp.hpp"
#include "toda/solver.hpp"

namespace toda {

enum class RateModel { ExpT, ExpSqrtXi, ExpInvSqrt, Power };
std::string to_string(RateModel m);
RateModel rate_model_for(BvpId id);

/// Abscissa of the rate model at a given xi (or t for ExpT).
double rate_abscissa(RateModel m, double t, double xi);

/// Sup over the cross-section of |u| at every t-node.
std::vector<double> sup_profile(const CrossSection& cs, const ScalarField& u);

/// Least-squares fit of log sup|u| against the model abscissa, excluding the
/// last 10% of the grid and values below the noise floor.
DecayFit fit_decay(const CrossSection& cs, const ScalarField& u, const VariableMap& map, RateModel model);

/// Same fit for an explicit profile of sup-values at grid nodes.
DecayFit fit_decay_profile(std::span<const double> sup_values, const TGrid& grid, const VariableMap& map,
                           RateModel model);

}  // namespace toda
