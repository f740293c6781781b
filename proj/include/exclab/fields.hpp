#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "exclab/kernel.hpp"
#include "exclab/lattice.hpp"
#include "exclab/testfn.hpp"

namespace exclab {

// Density fluctuation field paired with f: n^{-1/2} sum_x (eta(x)-1/2) f(x/n).
template <class F>
double fluctuation_field(const Configuration& cfg, const F& f, long n) {
  double sum = 0.0;
  for (int x = 0; x < cfg.sites(); ++x)
    sum += cfg.centered(x) * f(static_cast<double>(x) / static_cast<double>(n));
  return sum / std::sqrt(static_cast<double>(n));
}

// Discrete gradient n (f((x+z)/n) - f(x/n)).
template <class F>
double grad(const F& f, long n, long x, int z) {
  const double dn = static_cast<double>(n);
  return dn * (f(static_cast<double>(x + z) / dn) -
               f(static_cast<double>(x) / dn));
}

// Generator of the symmetric part applied to f at x/n:
// n^2 sum_z s(z) (f((x+z)/n) - f(x/n)).
template <class F>
double discrete_generator(const RateKernel& kernel, const F& f, long n,
                          long x) {
  const double dn = static_cast<double>(n);
  const double fx = f(static_cast<double>(x) / dn);
  double sum = 0.0;
  for (int z = 1; z <= kernel.support_radius; ++z) {
    const double s = kernel.s(z);
    if (s == 0.0) continue;
    sum += s * (f(static_cast<double>(x + z) / dn) +
                f(static_cast<double>(x - z) / dn) - 2.0 * fx);
  }
  return dn * dn * sum;
}

// Tilted gradient 2 sum_{z>0} a(z) grad(f, n, x, z); approximates m f'(x/n).
template <class F>
double tilted_grad(const RateKernel& kernel, const F& f, long n, long x) {
  double sum = 0.0;
  for (int z = 1; z <= kernel.support_radius; ++z) {
    const double a = kernel.a(z);
    if (a == 0.0) continue;
    sum += a * grad(f, n, x, z);
  }
  return 2.0 * sum;
}

// Block functionals of the local density eta^l(x) = block average over
// [x, x+l):
//   psi       = l/(l-1) (eta^l - 1/2)^2 - 1/(4(l-1))   (centered, l >= 2)
//   psi_tilde = (eta^l - 1/2)^2
struct BlockFunctionals {
  double psi = 0.0;
  double psi_tilde = 0.0;
};

inline double psi_value(int count, int len) {
  const double d = static_cast<double>(count) / static_cast<double>(len) - 0.5;
  return static_cast<double>(len) / static_cast<double>(len - 1) * d * d -
         0.25 / static_cast<double>(len - 1);
}

inline double psi_tilde_value(int count, int len) {
  const double d = static_cast<double>(count) / static_cast<double>(len) - 0.5;
  return d * d;
}

inline BlockFunctionals psi(const Configuration& cfg, int x, int len) {
  if (len < 2)
    throw std::invalid_argument(
        "DegenerateBlock: psi needs a block of at least 2 sites");
  const int count = cfg.block_count(x, len);
  return {psi_value(count, len), psi_tilde_value(count, len)};
}

}  // namespace exclab
