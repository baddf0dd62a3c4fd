#include "rotorspin/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>

#include "rotorspin/error.hpp"

namespace rotorspin {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct LeastSquares {
  std::function<void(const VectorXd&, VectorXd&)> residual;
  std::function<void(const VectorXd&, MatrixXd&)> jacobian;
};

struct Functor : Eigen::DenseFunctor<double> {
  const LeastSquares* problem;
  Functor(const LeastSquares& p, int inputs, int values) : DenseFunctor(inputs, values), problem(&p) {}
  int operator()(const VectorXd& x, VectorXd& f) const {
    problem->residual(x, f);
    return 0;
  }
  int df(const VectorXd& x, MatrixXd& j) const {
    problem->jacobian(x, j);
    return 0;
  }
};

struct Solution {
  VectorXd x;
  VectorXd sigma;
  double rss;
};

Solution solve(const LeastSquares& problem, VectorXd x, int values) {
  const int k = static_cast<int>(x.size());
  Functor functor(problem, k, values);
  Eigen::LevenbergMarquardt<Functor> lm(functor);
  lm.setXtol(1e-14);
  lm.setFtol(1e-14);
  lm.setMaxfev(2000);
  const auto status = lm.minimize(x);
  if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters || !x.allFinite())
    throw Error("protocols", "fit did not converge");
  VectorXd r(values);
  MatrixXd j(values, k);
  problem.residual(x, r);
  problem.jacobian(x, j);
  const double rss = r.squaredNorm();
  const double s2 = values > k ? rss / (values - k) : 0.0;
  const MatrixXd cov = (j.transpose() * j).completeOrthogonalDecomposition().pseudoInverse() * s2;
  return {x, cov.diagonal().cwiseMax(0.0).cwiseSqrt(), rss};
}

}  // namespace

FringeFit fit_fringe(const std::vector<double>& phases, const std::vector<double>& signal,
                     const std::vector<double>& sigma) {
  const std::size_t n = phases.size();
  if (n != signal.size()) throw Error("protocols", "fringe fit: phase and signal lengths differ");
  if (!sigma.empty() && sigma.size() != n) throw Error("protocols", "fringe fit: sigma length differs");
  if (n < 5) throw Error("protocols", "fringe fit needs at least 5 phase samples");
  const auto [lo, hi] = std::minmax_element(phases.begin(), phases.end());
  const double span = *hi - *lo;
  if (span * static_cast<double>(n) / static_cast<double>(n - 1) < 2.0 * std::numbers::pi * (1.0 - 1e-9))
    throw Error("protocols", "fringe fit needs phases covering a full turn");

  MatrixXd x(static_cast<Eigen::Index>(n), 3);
  VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    x(r, 0) = 1.0;
    x(r, 1) = std::cos(phases[i]);
    x(r, 2) = std::sin(phases[i]);
    y(r) = signal[i];
  }
  // Known per-sample errors weight the rows and set the covariance directly;
  // otherwise the residual variance is used.
  const bool weighted = !sigma.empty() && std::all_of(sigma.begin(), sigma.end(), [](double s) { return s > 0.0; });
  if (weighted) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      x.row(r) /= sigma[i];
      y(r) /= sigma[i];
    }
  }
  const Eigen::ColPivHouseholderQR<MatrixXd> qr(x);
  if (qr.rank() < 3) throw Error("protocols", "fringe fit is degenerate");
  const VectorXd c = qr.solve(y);
  if (!c.allFinite()) throw Error("protocols", "fringe fit did not converge");
  const double rss = (x * c - y).squaredNorm();
  const MatrixXd cov = (x.transpose() * x).inverse() * (weighted ? 1.0 : rss / static_cast<double>(n - 3));

  FringeFit out;
  const double b = std::hypot(c(1), c(2));
  out.offset = {c(0), std::sqrt(cov(0, 0))};
  out.amplitude.value = b;
  out.phase.value = std::atan2(c(2), c(1));
  if (b > 0.0) {
    const Eigen::Vector2d gb(c(1) / b, c(2) / b);
    const Eigen::Vector2d gp(-c(2) / (b * b), c(1) / (b * b));
    const Eigen::Matrix2d sub = cov.bottomRightCorner<2, 2>();
    out.amplitude.error = std::sqrt(std::max(0.0, gb.dot(sub * gb)));
    out.phase.error = std::sqrt(std::max(0.0, gp.dot(sub * gp)));
  } else {
    out.amplitude.error = std::sqrt(0.5 * (cov(1, 1) + cov(2, 2)));
    out.phase.error = std::numbers::pi;
  }
  return out;
}

DecayFit fit_decay(const std::vector<double>& taus, const std::vector<double>& amplitudes,
                   std::optional<double> fixed_exponent) {
  const std::size_t n = taus.size();
  if (n != amplitudes.size()) throw Error("protocols", "decay fit: tau and amplitude lengths differ");
  if (n < 4) throw Error("protocols", "decay fit needs at least 4 points");
  for (double a : amplitudes)
    if (!(a >= 0.0)) throw Error("protocols", "decay fit needs non-negative amplitudes");
  const double a_max = *std::max_element(amplitudes.begin(), amplitudes.end());
  if (a_max <= 0.0) throw Error("protocols", "decay fit: all amplitudes are zero");
  const double tau_max = *std::max_element(taus.begin(), taus.end());
  if (!(tau_max > 0.0)) throw Error("protocols", "decay fit needs a positive tau");

  // log-linear seed on the positive points
  double sx = 0, sy = 0, sxx = 0, sxy = 0, m = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (amplitudes[i] <= 1e-12 * a_max) continue;
    const double ly = std::log(amplitudes[i]);
    sx += taus[i];
    sy += ly;
    sxx += taus[i] * taus[i];
    sxy += taus[i] * ly;
    m += 1;
  }
  const double denom = m * sxx - sx * sx;
  const double slope = (m >= 2 && denom > 0) ? (m * sxy - sx * sy) / denom : 0.0;

  DecayFit out;
  out.t2_bound = tau_max;
  if (!(slope < 0.0)) {
    out.t2 = {std::numeric_limits<double>::infinity(), 0.0};
    out.t2_is_lower_bound = true;
    out.exponent = {fixed_exponent.value_or(1.0), 0.0};
    double mean = 0;
    for (double a : amplitudes) mean += a;
    out.amplitude0 = {mean / static_cast<double>(n), 0.0};
    return out;
  }
  const double intercept = (sy - slope * sx) / m;

  const bool free_p = !fixed_exponent.has_value();
  const double p_fixed = fixed_exponent.value_or(1.0);
  LeastSquares problem;
  problem.residual = [&](const VectorXd& x, VectorXd& r) {
    const double t2 = std::exp(x(1));
    const double p = free_p ? x(2) : p_fixed;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = taus[i] > 0 ? std::pow(taus[i] / t2, p) : 0.0;
      r(static_cast<Eigen::Index>(i)) = x(0) * std::exp(-u) - amplitudes[i];
    }
  };
  problem.jacobian = [&](const VectorXd& x, MatrixXd& j) {
    const double t2 = std::exp(x(1));
    const double p = free_p ? x(2) : p_fixed;
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double ratio = taus[i] / t2;
      const double u = taus[i] > 0 ? std::pow(ratio, p) : 0.0;
      const double e = std::exp(-u);
      j(r, 0) = e;
      j(r, 1) = x(0) * e * u * p;  // d/d ln T2
      if (free_p) j(r, 2) = taus[i] > 0 ? -x(0) * e * u * std::log(ratio) : 0.0;
    }
  };

  const int k = free_p ? 3 : 2;
  Solution best{};
  bool have = false;
  for (double p0 : free_p ? std::vector<double>{1.0, 2.0} : std::vector<double>{p_fixed}) {
    VectorXd x(k);
    x(0) = std::exp(intercept);
    x(1) = std::log(-1.0 / slope);
    if (free_p) x(2) = p0;
    Solution s = solve(problem, x, static_cast<int>(n));
    if (!have || s.rss < best.rss) {
      best = s;
      have = true;
    }
  }
  const double t2 = std::exp(best.x(1));
  out.amplitude0 = {best.x(0), best.sigma(0)};
  out.t2 = {t2, t2 * best.sigma(1)};
  out.exponent = free_p ? FitParameter{best.x(2), best.sigma(2)} : FitParameter{p_fixed, 0.0};
  if (t2 > 1e3 * tau_max) {
    out.t2 = {std::numeric_limits<double>::infinity(), 0.0};
    out.t2_is_lower_bound = true;
  }
  return out;
}

SinusoidFit fit_sinusoid(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  if (n != ys.size()) throw Error("protocols", "sinusoid fit: x and y lengths differ");
  if (n < 6) throw Error("protocols", "sinusoid fit needs at least 6 points");
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  const double span = *hi - *lo;
  if (!(span > 0.0)) throw Error("protocols", "sinusoid fit needs a positive span");

  const double two_pi = 2.0 * std::numbers::pi;
  const auto rows = static_cast<Eigen::Index>(n);
  VectorXd y(rows);
  for (std::size_t i = 0; i < n; ++i) y(static_cast<Eigen::Index>(i)) = ys[i];
  auto linear = [&](double f, VectorXd& c) {
    MatrixXd a(rows, 3);
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      a(r, 0) = 1.0;
      a(r, 1) = std::cos(two_pi * f * xs[i]);
      a(r, 2) = std::sin(two_pi * f * xs[i]);
    }
    c = a.colPivHouseholderQr().solve(y);
    return (a * c - y).squaredNorm();
  };

  // periodogram scan up to the mean-spacing Nyquist frequency
  const double f_hi = 0.5 * static_cast<double>(n - 1) / span;
  const double df = 0.1 / span;
  double best_f = df, best_rss = std::numeric_limits<double>::infinity();
  VectorXd c;
  for (double f = 0.5 / span; f <= f_hi; f += df) {
    const double rss = linear(f, c);
    if (rss < best_rss) {
      best_rss = rss;
      best_f = f;
    }
  }
  linear(best_f, c);

  LeastSquares problem;
  problem.residual = [&](const VectorXd& p, VectorXd& r) {
    for (std::size_t i = 0; i < n; ++i) {
      const double th = two_pi * p(3) * xs[i];
      r(static_cast<Eigen::Index>(i)) = p(0) + p(1) * std::cos(th) + p(2) * std::sin(th) - ys[i];
    }
  };
  problem.jacobian = [&](const VectorXd& p, MatrixXd& j) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double th = two_pi * p(3) * xs[i];
      j(r, 0) = 1.0;
      j(r, 1) = std::cos(th);
      j(r, 2) = std::sin(th);
      j(r, 3) = two_pi * xs[i] * (-p(1) * std::sin(th) + p(2) * std::cos(th));
    }
  };
  VectorXd p0(4);
  p0 << c(0), c(1), c(2), best_f;
  const Solution s = solve(problem, p0, static_cast<int>(n));

  SinusoidFit out;
  const double cc = s.x(1), ss = s.x(2);
  const double b = std::hypot(cc, ss);
  out.offset = {s.x(0), s.sigma(0)};
  out.frequency = {std::abs(s.x(3)), s.sigma(3)};
  out.amplitude = {b, std::hypot(s.sigma(1), s.sigma(2)) / std::sqrt(2.0)};
  out.phase = {std::atan2(-ss, cc), b > 0 ? std::hypot(s.sigma(1), s.sigma(2)) / (std::sqrt(2.0) * b) : std::numbers::pi};
  if (s.x(3) < 0) out.phase.value = -out.phase.value;
  return out;
}

}  // namespace rotorspin
