#pragma once

#include "latden/error.hpp"
#include "latden/geometry.hpp"
#include "latden/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace latden {

//! Bivariate product-Gaussian kernel density estimate
//!   f(x, y) = 1/(n h1 h2) sum_j phi((x - X_j)/h1) phi((y - Y_j)/h2).
//! No boundary handling: mass spills wherever the kernels reach.
struct KdeModel
{
  std::vector<Point> samples;
  double h1{ 1.0 };
  double h2{ 1.0 };

  void validate() const
  {
    if (samples.empty())
      throw ValidationError("kernel model has no samples");
    if (!(h1 > 0.0) || !(h2 > 0.0))
      throw ValidationError("kernel bandwidths must be positive");
  }
};

inline double std_normal_pdf(double z)
{
  return std::exp(-0.5 * z * z) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

inline double kde_evaluate(const KdeModel& m, Point at)
{
  double s = 0.0;
  for (const Point& q : m.samples)
    s += std_normal_pdf((at.x - q.x) / m.h1) * std_normal_pdf((at.y - q.y) / m.h2);
  return s / (static_cast<double>(m.samples.size()) * m.h1 * m.h2);
}

inline std::vector<double> kde_evaluate(const KdeModel& m, std::span<const Point> grid,
                                        unsigned threads = 1)
{
  m.validate();
  std::vector<double> out(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) { out[i] = kde_evaluate(m, grid[i]); }, threads);
  return out;
}

inline double sample_sd(std::span<const double> x)
{
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x)
    mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : x)
    ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (n - 1.0));
}

//! Exact 1-D unbiased crossvalidation score of a Gaussian KDE,
//!   UCV(h) = int f^2 - (2/n) sum_i f_{-i}(x_i),
//! where int f^2 = (1/n^2) sum_{i,j} phi_{h sqrt2}(x_i - x_j) and
//! f_{-i}(x_i) = 1/((n-1) h) sum_{j != i} phi((x_i - x_j)/h).
inline double ucv_criterion(std::span<const double> x, double h)
{
  const std::size_t n = x.size();
  const double dn = static_cast<double>(n);
  const double hs = h * std::numbers::sqrt2;
  double conv = 0.0; // sum_{i<j} phi(d / (h sqrt2))
  double loo = 0.0;  // sum_{i<j} phi(d / h)
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = x[i] - x[j];
      conv += std_normal_pdf(d / hs);
      loo += std_normal_pdf(d / h);
    }
  }
  const double integral = (dn * std_normal_pdf(0.0) + 2.0 * conv) / (dn * dn * hs);
  const double cross = 2.0 * (2.0 * loo) / (dn * (dn - 1.0) * h);
  return integral - cross;
}

//! Bandwidth minimising ucv_criterion over [sd/n, 2 sd]: a log-spaced
//! coarse scan picks the basin, golden-section search refines it.
inline double select_bandwidth_ucv(std::span<const double> x)
{
  if (x.size() < 2)
    throw ValidationError("bandwidth selection needs at least 2 samples");
  const double sd = sample_sd(x);
  if (!(sd > 0.0) || !std::isfinite(sd))
    throw ValidationError("degenerate sample: zero variance");

  const double lo = sd / static_cast<double>(x.size());
  const double hi = 2.0 * sd;
  constexpr int kCoarse = 64;
  std::vector<double> grid(kCoarse);
  std::size_t best = 0;
  double best_val = 0.0;
  for (int i = 0; i < kCoarse; ++i) {
    grid[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (kCoarse - 1));
    const double v = ucv_criterion(x, grid[i]);
    if (i == 0 || v < best_val) {
      best_val = v;
      best = static_cast<std::size_t>(i);
    }
  }
  double a = grid[best == 0 ? 0 : best - 1];
  double b = grid[std::min<std::size_t>(best + 1, kCoarse - 1)];

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = ucv_criterion(x, c);
  double fd = ucv_criterion(x, d);
  while (b - a > 1e-10 * sd) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = ucv_criterion(x, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = ucv_criterion(x, d);
    }
  }
  const double h = 0.5 * (a + b);
  // the coarse grid point itself can beat the refined interior near a bracket edge
  return ucv_criterion(x, h) <= best_val ? h : grid[best];
}

//! Per-axis UCV bandwidths (h1 from eastings, h2 from northings).
inline KdeModel fit_kde(std::span<const Point> samples)
{
  std::vector<double> xs, ys;
  xs.reserve(samples.size());
  ys.reserve(samples.size());
  for (const Point& p : samples) {
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  KdeModel m;
  m.samples.assign(samples.begin(), samples.end());
  m.h1 = select_bandwidth_ucv(xs);
  m.h2 = select_bandwidth_ucv(ys);
  return m;
}

} // namespace latden
