#pragma once

namespace alphait {

// Modified Bessel function of the second kind K_nu(x) for real order.
// Uses K_{-nu} = K_nu; requires x > 0. Underflows to 0 for large x.
double bessel_k(double nu, double x);

// Whittle-Matern correlation W_nu(r) = 2^(1-nu)/Gamma(nu) r^nu K_nu(r),
// normalised so W_nu(0) = 1. Distances below 1e-12 saturate to 1.
double whittle_matern(double r, double nu);

}  // namespace alphait
