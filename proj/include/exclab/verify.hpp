#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "exclab/fields.hpp"
#include "exclab/kernel.hpp"
#include "exclab/lattice.hpp"
#include "exclab/rng.hpp"
#include "exclab/stats.hpp"
#include "exclab/testfn.hpp"

namespace exclab {

// Cylinder function of w consecutive sites starting at the anchor,
// given by a full table over the 2^w window configurations.
struct LocalFunction {
  int window = 0;
  int anchor = 0;
  std::vector<double> table;  // size 2^window

  double eval_bits(std::uint32_t config, int sites) const {
    std::uint32_t idx = 0;
    for (int j = 0; j < window; ++j) {
      const int site = (anchor + j) % sites;
      idx |= ((config >> site) & 1u) << j;
    }
    return table[idx];
  }

  double eval(const Configuration& cfg) const {
    std::uint32_t idx = 0;
    for (int j = 0; j < window; ++j)
      idx |= static_cast<std::uint32_t>(
                 cfg.occupied((anchor + j) % cfg.sites()))
             << j;
    return table[idx];
  }
};

inline LocalFunction random_local_function(int window, int anchor, Rng& rng) {
  if (window < 1 || window > 20)
    throw std::invalid_argument("WindowTooLarge: window must be in [1, 20]");
  LocalFunction h;
  h.window = window;
  h.anchor = anchor;
  h.table.resize(std::size_t{1} << window);
  for (double& v : h.table) v = rng.normal();
  return h;
}

namespace detail {

inline void require_enumerable(int sites) {
  if (sites < 2 || sites > 20)
    throw std::invalid_argument(
        "WindowTooLarge: exact enumeration needs 2 <= N <= 20");
}

inline std::uint32_t swap_bits(std::uint32_t c, int y, int yp) {
  const std::uint32_t by = (c >> y) & 1u;
  const std::uint32_t byp = (c >> yp) & 1u;
  if (by == byp) return c;
  return c ^ ((1u << y) | (1u << yp));
}

}  // namespace detail

// h evaluated on every configuration of the N-site torus; the enumeration
// suites reuse the table across many bond evaluations.
struct EnumeratedFunction {
  int sites = 0;
  std::vector<double> values;  // size 2^sites

  EnumeratedFunction(const LocalFunction& h, int n_sites) : sites(n_sites) {
    detail::require_enumerable(n_sites);
    values.resize(std::size_t{1} << n_sites);
    for (std::uint32_t c = 0; c < values.size(); ++c)
      values[c] = h.eval_bits(c, n_sites);
  }

  // I_{y,y'}(h) = E[(h(eta^{y,y'}) - h(eta))^2] under mu_{1/2}: the exact
  // average over all 2^N equally weighted configurations.
  double swap_increment(int y, int yp) const {
    double total = 0.0;
    for (std::uint32_t c = 0; c < values.size(); ++c) {
      const double d = values[detail::swap_bits(c, y, yp)] - values[c];
      total += d * d;
    }
    return total / static_cast<double>(values.size());
  }

  // D(h) = (1/2) sum_x I_{x,x+1}(h)
  double dirichlet_form() const {
    double total = 0.0;
    for (int x = 0; x < sites; ++x)
      total += swap_increment(x, (x + 1) % sites);
    return 0.5 * total;
  }

  // <h, -S h> = (1/2) sum_x sum_{z>0} s(z) I_{x,x+z}(h)
  double generator_form(const RateKernel& kernel) const {
    double total = 0.0;
    for (int z = 1; z <= kernel.support_radius; ++z) {
      const double s = kernel.s(z);
      if (s == 0.0) continue;
      double bond_sum = 0.0;
      for (int x = 0; x < sites; ++x)
        bond_sum += swap_increment(x, (x + z) % sites);
      total += s * bond_sum;
    }
    return 0.5 * total;
  }
};

inline double dirichlet_I(const LocalFunction& h, int y, int yp, int sites) {
  detail::require_enumerable(sites);
  return EnumeratedFunction(h, sites).swap_increment(y % sites, yp % sites);
}

inline double dirichlet_form(const LocalFunction& h, int sites) {
  return EnumeratedFunction(h, sites).dirichlet_form();
}

inline double generator_form(const LocalFunction& h, const RateKernel& kernel,
                             int sites) {
  return EnumeratedFunction(h, sites).generator_form(kernel);
}

// One instance of the moving-particle comparison
//   I_{x,x+z}(h) <= (4z-3) sum_{y=x}^{x+z-1} I_{y,y+1}(h).
struct MovingParticleCheck {
  double long_bond = 0.0;   // I_{x,x+z}
  double path_bound = 0.0;  // (4z-3) * sum of nearest-neighbour terms
  double ratio = 0.0;       // long_bond / path sum (0 when the path sum is 0)
  bool holds = false;
};

inline MovingParticleCheck check_moving_particle(const EnumeratedFunction& h,
                                                 int x, int z) {
  MovingParticleCheck out;
  out.long_bond = h.swap_increment(x % h.sites, (x + z) % h.sites);
  double path = 0.0;
  for (int y = x; y < x + z; ++y)
    path += h.swap_increment(y % h.sites, (y + 1) % h.sites);
  out.path_bound = (4.0 * z - 3.0) * path;
  out.ratio = path > 0.0 ? out.long_bond / path : 0.0;
  out.holds = out.long_bond <= out.path_bound + 1e-12 * (1.0 + out.path_bound);
  return out;
}

inline MovingParticleCheck check_moving_particle(const LocalFunction& h, int x,
                                                 int z, int sites) {
  detail::require_enumerable(sites);
  if (z < 1 || 2 * z > sites)
    throw std::invalid_argument("moving-particle check needs 1 <= z <= N/2");
  return check_moving_particle(EnumeratedFunction(h, sites), x, z);
}

// Exhaustive comparison of the two Dirichlet forms over random local
// functions: c1 <h,-Sh> <= D(h) <= c2 <h,-Sh> with the module-computed
// constants.  Both inequalities must hold without exception.
struct DirichletEquivalenceReport {
  int trials = 0;
  int violations = 0;
  double worst_lower = 0.0;  // max over h of c1 <h,-Sh> / D(h)   (must stay <= 1)
  double worst_upper = 0.0;  // max over h of D(h) / (c2 <h,-Sh>) (must stay <= 1)
  double max_ratio = 0.0;    // max D(h)/<h,-Sh>, empirical version of c2
  double min_ratio = 0.0;    // min D(h)/<h,-Sh>, empirical version of 1/(4 c1 sigma2)
};

inline DirichletEquivalenceReport check_equiv_dirichlet(
    const RateKernel& kernel, int sites, int trials, Rng& rng,
    int max_window = 8) {
  detail::require_enumerable(sites);
  if (sites > 16)
    throw std::invalid_argument("WindowTooLarge: equivalence suite needs N <= 16");
  const KernelMoments mom = moments(kernel);
  DirichletEquivalenceReport report;
  report.trials = trials;
  report.min_ratio = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < trials; ++trial) {
    const int window =
        2 + static_cast<int>(rng.uniform_below(
                static_cast<std::uint64_t>(std::min(max_window, sites) - 1)));
    const int anchor = static_cast<int>(
        rng.uniform_below(static_cast<std::uint64_t>(sites)));
    const LocalFunction h = random_local_function(window, anchor, rng);
    const EnumeratedFunction eh(h, sites);
    const double d = eh.dirichlet_form();
    const double g = eh.generator_form(kernel);
    if (g <= 0.0) continue;  // constant h: both forms vanish
    const double ratio = d / g;
    report.max_ratio = std::max(report.max_ratio, ratio);
    report.min_ratio = std::min(report.min_ratio, ratio);
    report.worst_lower = std::max(report.worst_lower, mom.c1 * g / d);
    report.worst_upper = std::max(report.worst_upper, d / (mom.c2 * g));
    if (mom.c1 * g > d * (1.0 + 1e-12) || d > mom.c2 * g * (1.0 + 1e-12))
      ++report.violations;
  }
  return report;
}

// Deterministic error sequences of the discrete operators against their
// continuum limits, per scaling parameter n:
//   sup_err   sup_x |S_n f - (sigma^2/2) f''|
//   mean_err  (1/n) sum_x |S_n f - (sigma^2/2) f''|
//   energy_err |(1/n) sum_{x,z} s(z) grad^2 - sigma^2 |f'|^2|
//   tilted_err (1/n) sum_x (tilted grad - m f')^2
struct LemmaReport {
  std::string lemma;
  std::vector<double> ns;
  std::vector<double> sup_err, mean_err, energy_err, tilted_err;
  double sup_exponent = 0.0, mean_exponent = 0.0, energy_exponent = 0.0,
         tilted_exponent = 0.0;
  bool all_decreasing = false;
};

inline LemmaReport check_appendix_lemmas(const TestFunction& f,
                                         const RateKernel& kernel,
                                         const std::vector<long>& n_list,
                                         int macro_length) {
  const KernelMoments mom = moments(kernel);
  LemmaReport report;
  report.lemma = "discrete-approximation";
  for (long n : n_list) {
    const int sites = static_cast<int>(macro_length * n);
    double sup_err = 0.0, mean_err = 0.0, energy = 0.0, tilted = 0.0;
    for (int x = 0; x < sites; ++x) {
      const double u = static_cast<double>(x) / static_cast<double>(n);
      const double gen_err =
          discrete_generator(kernel, f, n, x) - 0.5 * mom.sigma2 * f.d2(u);
      sup_err = std::max(sup_err, std::abs(gen_err));
      mean_err += std::abs(gen_err);
      for (int z = 1; z <= kernel.support_radius; ++z) {
        const double s = kernel.s(z);
        if (s == 0.0) continue;
        const double gp = grad(f, n, x, z);
        const double gm = grad(f, n, x, -z);
        energy += s * (gp * gp + gm * gm);
      }
      const double te = tilted_grad(kernel, f, n, x) - mom.m * f.d1(u);
      tilted += te * te;
    }
    const double dn = static_cast<double>(n);
    report.ns.push_back(dn);
    report.sup_err.push_back(sup_err);
    report.mean_err.push_back(mean_err / dn);
    report.energy_err.push_back(
        std::abs(energy / dn - mom.sigma2 * f.d1_norm_l2_sq()));
    report.tilted_err.push_back(tilted / dn);
  }
  report.sup_exponent = fit_exponent(report.ns, report.sup_err);
  report.mean_exponent = fit_exponent(report.ns, report.mean_err);
  report.energy_exponent = fit_exponent(report.ns, report.energy_err);
  report.tilted_exponent = fit_exponent(report.ns, report.tilted_err);
  report.all_decreasing = true;
  auto strictly_down = [](const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
      if (!(v[i] < v[i - 1])) return false;
    return true;
  };
  report.all_decreasing = strictly_down(report.sup_err) &&
                          strictly_down(report.mean_err) &&
                          strictly_down(report.energy_err) &&
                          strictly_down(report.tilted_err);
  return report;
}

}  // namespace exclab
