#include "alphait/bessel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace alphait {

namespace {

constexpr int kMaxIterations = 10000;
constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

// Reciprocal-gamma combinations needed by the small-argument series, with
// mu in [-1/2, 1/2]:
//   gam1 = (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu)
//   gam2 = (1/Gamma(1-mu) + 1/Gamma(1+mu)) / 2
void gamma_pair(double mu, double& gam1, double& gam2, double& recip_plus,
                double& recip_minus) {
  const long double lp = expl(-lgammal(1.0L + (long double)mu));
  const long double lm = expl(-lgammal(1.0L - (long double)mu));
  recip_plus = static_cast<double>(lp);
  recip_minus = static_cast<double>(lm);
  gam2 = static_cast<double>((lm + lp) / 2.0L);
  if (std::abs(mu) < 1e-4) {
    // odd part of the 1/Gamma(1+z) series: gam1 = -(a1 + a3 mu^2 + ...)
    gam1 = -(kEulerGamma - 0.0420026350340952355 * mu * mu);
  } else {
    gam1 = static_cast<double>((lm - lp) / (2.0L * (long double)mu));
  }
}

// Temme's series, valid for x <= 2: returns K_mu(x) and K_{mu+1}(x).
void bessel_k_small(double x, double mu, double& k_mu, double& k_mu1) {
  const double eps = std::numeric_limits<double>::epsilon();
  const double half_x = 0.5 * x;
  const double pi_mu = kPi * mu;
  const double fact =
      std::abs(pi_mu) < eps ? 1.0 : pi_mu / std::sin(pi_mu);
  double d = -std::log(half_x);
  double e = mu * d;
  const double fact2 = std::abs(e) < eps ? 1.0 : std::sinh(e) / e;
  double gam1, gam2, recip_plus, recip_minus;
  gamma_pair(mu, gam1, gam2, recip_plus, recip_minus);
  double ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
  double sum = ff;
  e = std::exp(e);
  double p = 0.5 * e / recip_plus;
  double q = 0.5 / (e * recip_minus);
  double c = 1.0;
  d = half_x * half_x;
  double sum1 = p;
  int i = 1;
  for (; i <= kMaxIterations; ++i) {
    ff = (i * ff + p + q) / (i * i - mu * mu);
    c *= d / i;
    p /= i - mu;
    q /= i + mu;
    const double del = c * ff;
    sum += del;
    sum1 += c * (p - i * ff);
    if (std::abs(del) < std::abs(sum) * eps) break;
  }
  if (i > kMaxIterations) {
    throw std::runtime_error("bessel_k: series failed to converge");
  }
  k_mu = sum;
  k_mu1 = sum1 * 2.0 / x;
}

// Steed's continued fraction CF2, valid for x > 2.
void bessel_k_large(double x, double mu, double& k_mu, double& k_mu1) {
  const double eps = std::numeric_limits<double>::epsilon();
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double delh = d;
  double h = delh;
  double q1 = 0.0, q2 = 1.0;
  const double a1 = 0.25 - mu * mu;
  double q = a1, c = a1, a = -a1;
  double s = 1.0 + q * delh;
  int i = 2;
  for (; i <= kMaxIterations; ++i) {
    a -= 2 * (i - 1);
    c = -a * c / i;
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < eps) break;
  }
  if (i > kMaxIterations) {
    throw std::runtime_error("bessel_k: continued fraction failed to converge");
  }
  h = a1 * h;
  k_mu = std::sqrt(kPi / (2.0 * x)) * std::exp(-x) / s;
  k_mu1 = k_mu * (mu + x + 0.5 - h) / x;
}

}  // namespace

double bessel_k(double nu, double x) {
  if (!(x > 0.0) || !std::isfinite(nu)) {
    throw std::domain_error("bessel_k: requires finite order and x > 0");
  }
  nu = std::abs(nu);
  const int steps = static_cast<int>(nu + 0.5);
  const double mu = nu - steps;
  double k_mu, k_mu1;
  if (x <= 2.0) {
    bessel_k_small(x, mu, k_mu, k_mu1);
  } else {
    bessel_k_large(x, mu, k_mu, k_mu1);
  }
  for (int i = 1; i <= steps; ++i) {
    const double next = (mu + i) * (2.0 / x) * k_mu1 + k_mu;
    k_mu = k_mu1;
    k_mu1 = next;
  }
  return k_mu;
}

double whittle_matern(double r, double nu) {
  if (!(nu > 0.0)) {
    throw std::domain_error("whittle_matern: smoothness must be positive");
  }
  if (r < 0.0) throw std::domain_error("whittle_matern: negative distance");
  if (r < 1e-12) return 1.0;
  const double log_scale =
      (1.0 - nu) * std::log(2.0) - std::lgamma(nu) + nu * std::log(r);
  const double k = bessel_k(nu, r);
  if (k <= 0.0) return 0.0;
  const double w = std::exp(log_scale + std::log(k));
  return w > 1.0 ? 1.0 : w;
}

}  // namespace alphait
