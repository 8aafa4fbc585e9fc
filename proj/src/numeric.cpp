#include "toda/numeric.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "toda/error.hpp"

namespace toda::num {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::vector<std::vector<double>> fd_weights(double x0, std::span<const double> nodes, int max_deriv) {
  const int n = static_cast<int>(nodes.size());
  std::vector<std::vector<double>> c(max_deriv + 1, std::vector<double>(n, 0.0));
  double c1 = 1.0;
  double c4 = nodes[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, max_deriv);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c;
}

double find_root(const std::function<double(double)>& f, double lo, double hi, double rel_tol) {
  double a = lo, b = hi;
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (std::signbit(fa) == std::signbit(fb)) fail(ErrorCode::Internal, "find_root: no sign change in bracket");
  bool force_bisect = false;
  for (int it = 0; it < 500; ++it) {
    const double width = b - a;
    if (width <= rel_tol * std::max(std::abs(a), std::abs(b)) || width <= 1e-300) break;
    double x = (fb != fa) ? b - fb * (b - a) / (fb - fa) : 0.5 * (a + b);
    if (force_bisect || !(x > a && x < b)) x = 0.5 * (a + b);
    const double fx = f(x);
    if (fx == 0.0) return x;
    if (std::signbit(fx) == std::signbit(fa)) {
      a = x;
      fa = fx;
    } else {
      b = x;
      fb = fx;
    }
    force_bisect = (b - a) > 0.5 * width;
  }
  return std::abs(fa) < std::abs(fb) ? a : b;
}

std::vector<std::pair<double, double>> sign_changes(const std::function<double(double)>& f,
                                                    std::span<const double> xs) {
  std::vector<std::pair<double, double>> out;
  if (xs.empty()) return out;
  double prev = f(xs[0]);
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const double cur = f(xs[i]);
    if (prev == 0.0 || cur == 0.0 || std::signbit(prev) != std::signbit(cur)) {
      if (!(prev == 0.0 && cur == 0.0)) out.emplace_back(xs[i - 1], xs[i]);
    }
    prev = cur;
  }
  return out;
}

std::vector<double> logspace(double lo_exp10, double hi_exp10, int per_decade) {
  const int n = static_cast<int>(std::ceil((hi_exp10 - lo_exp10) * per_decade));
  std::vector<double> out(n + 1);
  for (int i = 0; i <= n; ++i) out[i] = std::pow(10.0, lo_exp10 + (hi_exp10 - lo_exp10) * i / n);
  return out;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  LineFit fit;
  const std::size_t n = std::min(x.size(), y.size());
  fit.points = static_cast<int>(n);
  if (n < 2) return fit;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  fit.slope = sxx > 0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss += r * r;
  }
  fit.rms = std::sqrt(ss / n);
  return fit;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double sup_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace toda::num
