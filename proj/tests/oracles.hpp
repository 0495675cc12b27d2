#pragma once

// Independent reference computations used as test oracles. None of these call
// into the library.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

inline long double phi_cdf(long double x) { return 0.5L * std::erfc(-x / std::sqrt(2.0L)); }

/// Root of a monotone function on [lo, hi] by plain bisection.
inline long double bisect(const std::function<long double(long double)>& f, long double lo, long double hi,
                          int iterations = 200) {
  const bool rising = f(hi) > f(lo);
  for (int i = 0; i < iterations; ++i) {
    const long double mid = 0.5L * (lo + hi);
    if ((f(mid) > 0) == rising)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5L * (lo + hi);
}

inline long double normal_quantile(long double u) {
  return bisect([u](long double x) { return phi_cdf(x) - u; }, -40.0L, 40.0L);
}

/// P(|c - s| style acceptance) for d = 1: Phi(c - s) - Phi(-c - s).
inline long double acceptance_1d(long double c, long double s) { return phi_cdf(c - s) - phi_cdf(-c - s); }

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton on P_n).
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussLegendre gauss_legendre(std::size_t n) {
  GaussLegendre gl;
  gl.nodes.resize(n);
  gl.weights.resize(n);
  const long double pi = 3.141592653589793238462643383279502884L;
  for (std::size_t i = 0; i < n; ++i) {
    long double x = std::cos(pi * (static_cast<long double>(i) + 0.75L) / (static_cast<long double>(n) + 0.5L));
    long double dp = 0.0L;
    for (int it = 0; it < 100; ++it) {
      long double p0 = 1.0L, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const long double p2 = ((2.0L * k - 1.0L) * x * p1 - (k - 1.0L) * p0) / static_cast<long double>(k);
        p0 = p1;
        p1 = p2;
      }
      dp = static_cast<long double>(n) * (x * p1 - p0) / (x * x - 1.0L);
      const long double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-19L) break;
    }
    gl.nodes[i] = static_cast<double>(x);
    gl.weights[i] = static_cast<double>(2.0L / ((1.0L - x * x) * dp * dp));
  }
  return gl;
}

/// P(norm(u + x) <= c) for u ~ N(0, [[1, r], [r, 1]]) with u = (z0, r z0 + s z1),
/// s = sqrt(1 - r^2), z standard normal. The acceptance region
/// {v : |v0| <= c, |v1| <= half_width(v0)} is integrated by a tensor
/// Gauss-Legendre rule whose nodes are mapped onto the region itself (outer
/// over the feasible z0, inner over the exact z1 interval), so the integrand
/// is smooth and no node straddles the boundary.
inline double acceptance_2d(const std::function<double(double)>& half_width, double c, double x0, double x1, double r,
                            std::size_t nodes = 400) {
  const GaussLegendre gl = gauss_legendre(nodes);
  const double s = std::sqrt(1.0 - r * r);
  const long double inv_sqrt_2pi = 0.398942280401432677939946059934381868L;
  const double a0 = -c - x0, b0 = c - x0;
  long double total = 0.0L;
  for (std::size_t i = 0; i < nodes; ++i) {
    const double z0 = 0.5 * (b0 - a0) * gl.nodes[i] + 0.5 * (a0 + b0);
    const double v0 = z0 + x0;
    const double h = half_width(std::min(std::abs(v0), c));
    const double a1 = (-h - r * z0 - x1) / s;
    const double b1 = (h - r * z0 - x1) / s;
    long double inner = 0.0L;
    for (std::size_t j = 0; j < nodes; ++j) {
      const long double z1 = 0.5L * (b1 - a1) * gl.nodes[j] + 0.5L * (a1 + b1);
      inner += gl.weights[j] * std::exp(-0.5L * z1 * z1);
    }
    inner *= 0.5L * (b1 - a1) * inv_sqrt_2pi;
    total += gl.weights[i] * inv_sqrt_2pi * std::exp(-0.5L * z0 * z0) * inner;
  }
  return static_cast<double>(0.5L * (b0 - a0) * total);
}

/// Two-pass sample covariance with divisor n.
inline std::vector<std::vector<double>> covariance(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  const std::size_t d = rows.front().size();
  std::vector<double> mean(d, 0.0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
  for (double& m : mean) m /= static_cast<double>(n);
  std::vector<std::vector<double>> c(d, std::vector<double>(d, 0.0));
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t k = 0; k < d; ++k) c[j][k] += (r[j] - mean[j]) * (r[k] - mean[k]);
  for (auto& row : c)
    for (double& v : row) v /= static_cast<double>(n);
  return c;
}

}  // namespace oracle
