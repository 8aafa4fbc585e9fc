#include "toda/decay.hpp"

#include <algorithm>
#include <cmath>

#include "toda/numeric.hpp"

namespace toda {

std::string to_string(RateModel m) {
  switch (m) {
    case RateModel::ExpT: return "exp_t";
    case RateModel::ExpSqrtXi: return "exp_sqrt_xi";
    case RateModel::ExpInvSqrt: return "exp_inv_sqrt";
    case RateModel::Power: return "power";
  }
  return "?";
}

RateModel rate_model_for(BvpId id) {
  switch (id) {
    case BvpId::BVP1: return RateModel::ExpT;
    case BvpId::BVP2: return RateModel::ExpSqrtXi;
    case BvpId::BVP3: return RateModel::ExpInvSqrt;
    case BvpId::BVP4: return RateModel::Power;
  }
  return RateModel::ExpT;
}

double rate_abscissa(RateModel m, double t, double xi) {
  switch (m) {
    case RateModel::ExpT: return t;
    case RateModel::ExpSqrtXi: return std::sqrt(xi);
    case RateModel::ExpInvSqrt: return 1.0 / std::sqrt(xi - xi_star());
    case RateModel::Power: return std::log(xi - xi_star());
  }
  return t;
}

std::vector<double> sup_profile(const CrossSection& cs, const ScalarField& u) {
  std::vector<double> s(u.grid.nodes());
  for (int i = 0; i < u.grid.nodes(); ++i) s[i] = cs.sup_norm(u.slice(i));
  return s;
}

DecayFit fit_decay_profile(std::span<const double> sup_values, const TGrid& grid, const VariableMap& map,
                           RateModel model) {
  DecayFit fit;
  fit.model = to_string(model);
  const double top = num::sup_abs(sup_values);
  if (!(top >= 1e-13)) {
    fit.note = "field below 1e-13 everywhere; fit not meaningful";
    return fit;
  }
  const double floor = std::max(1e-13, 1e-8 * top);
  const int last = static_cast<int>(std::floor(0.9 * grid.n));
  std::vector<int> idx;
  for (int i = 0; i <= last; ++i)
    if (sup_values[i] > floor) idx.push_back(i);
  const std::size_t skip = idx.size() / 4;
  std::vector<double> x, y;
  for (std::size_t j = skip; j < idx.size(); ++j) {
    const int i = idx[j];
    const double t = grid.t(i);
    x.push_back(rate_abscissa(model, t, map.xi(t)));
    y.push_back(std::log(sup_values[i]));
  }
  if (x.size() < 3) {
    fit.note = "fewer than 3 usable nodes above the noise floor";
    return fit;
  }
  auto lf = num::fit_line(x, y);
  fit.delta = model == RateModel::Power ? lf.slope : -lf.slope;
  fit.intercept = lf.intercept;
  fit.rms = lf.rms;
  fit.points = lf.points;
  fit.meaningful = true;
  return fit;
}

DecayFit fit_decay(const CrossSection& cs, const ScalarField& u, const VariableMap& map, RateModel model) {
  auto s = sup_profile(cs, u);
  return fit_decay_profile(s, u.grid, map, model);
}

}  // namespace toda
