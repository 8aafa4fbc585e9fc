#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace toda::num {

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double x);

/// Finite-difference weights (Fornberg). Row m holds the weights of the
/// m-th derivative at x0 for the given nodes, for m = 0..max_deriv.
std::vector<std::vector<double>> fd_weights(double x0, std::span<const double> nodes, int max_deriv);

/// Root of f in [lo, hi] given a sign change, by secant steps safeguarded
/// with bisection. Stops when the bracket is below rel_tol relative width.
double find_root(const std::function<double(double)>& f, double lo, double hi, double rel_tol = 1e-14);

/// Sign-change brackets of f on the given increasing abscissae.
std::vector<std::pair<double, double>> sign_changes(const std::function<double(double)>& f,
                                                    std::span<const double> xs);

std::vector<double> logspace(double lo_exp10, double hi_exp10, int per_decade);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms = 0.0;
  int points = 0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y);

std::uint64_t fnv1a64(const std::string& text);
std::string hex64(std::uint64_t h);

double sup_abs(std::span<const double> v);

}  // namespace toda::num
