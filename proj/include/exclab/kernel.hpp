#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "exclab/rng.hpp"

namespace exclab {

enum class KernelFault {
  SymmetryViolation,
  AntisymmetryViolation,
  DominationViolation,
  Reducible,
  NotNormalized,
  NegativeRate,
};

inline const char* to_string(KernelFault fault) {
  switch (fault) {
    case KernelFault::SymmetryViolation: return "SymmetryViolation";
    case KernelFault::AntisymmetryViolation: return "AntisymmetryViolation";
    case KernelFault::DominationViolation: return "DominationViolation";
    case KernelFault::Reducible: return "Reducible";
    case KernelFault::NotNormalized: return "NotNormalized";
    case KernelFault::NegativeRate: return "NegativeRate";
  }
  return "?";
}

class KernelError : public std::runtime_error {
 public:
  KernelError(KernelFault fault, const std::string& detail)
      : std::runtime_error(std::string(to_string(fault)) + ": " + detail),
        fault_(fault) {}
  KernelFault fault() const { return fault_; }

 private:
  KernelFault fault_;
};

// Finitely supported jump-rate pair (s, a) on {-Zmax..-1, 1..Zmax}.
// s is symmetric and nonnegative, a antisymmetric with |a| <= C*s, and
// the positive support of s has gcd 1.  Values are stored for z > 0 only;
// the signed accessors apply the symmetry.  Immutable after construction.
struct RateKernel {
  int support_radius = 0;              // Zmax
  std::vector<double> s_pos;           // s(z), index z-1 for z = 1..Zmax
  std::vector<double> a_pos;           // a(z), index z-1 for z = 1..Zmax
  double domination_C = 1.0;
  double tail_mass_s = 0.0;            // mass of the analytic family beyond Zmax
  std::string family = "table";        // provenance tag for result metadata

  double s(int z) const {
    const int az = z < 0 ? -z : z;
    if (az == 0 || az > support_radius) return 0.0;
    return s_pos[static_cast<std::size_t>(az - 1)];
  }

  double a(int z) const {
    const int az = z < 0 ? -z : z;
    if (az == 0 || az > support_radius) return 0.0;
    const double v = a_pos[static_cast<std::size_t>(az - 1)];
    return z < 0 ? -v : v;
  }

  double mass() const {
    double total = 0.0;
    for (double v : s_pos) total += 2.0 * v;
    return total;
  }
};

inline RateKernel validate_kernel(const std::map<int, double>& s_values,
                                  const std::map<int, double>& a_values,
                                  double C, double tail_mass_s = 0.0) {
  if (s_values.empty())
    throw KernelError(KernelFault::NotNormalized, "empty symmetric part");
  if (C <= 0.0)
    throw KernelError(KernelFault::DominationViolation,
                      "domination constant must be positive");

  auto lookup = [](const std::map<int, double>& m, int z) {
    auto it = m.find(z);
    return it == m.end() ? 0.0 : it->second;
  };

  int zmax = 0;
  for (const auto& [z, v] : s_values) zmax = std::max(zmax, std::abs(z));
  for (const auto& [z, v] : a_values) zmax = std::max(zmax, std::abs(z));
  if (zmax == 0)
    throw KernelError(KernelFault::NotNormalized, "no offsite support");
  if (lookup(s_values, 0) != 0.0 || lookup(a_values, 0) != 0.0)
    throw KernelError(KernelFault::NotNormalized, "p(0) must vanish");

  RateKernel kernel;
  kernel.support_radius = zmax;
  kernel.domination_C = C;
  kernel.tail_mass_s = tail_mass_s;
  kernel.s_pos.resize(static_cast<std::size_t>(zmax), 0.0);
  kernel.a_pos.resize(static_cast<std::size_t>(zmax), 0.0);

  const double s_scale = std::max_element(s_values.begin(), s_values.end(),
                                          [](auto& l, auto& r) {
                                            return std::abs(l.second) <
                                                   std::abs(r.second);
                                          })
                             ->second;
  const double tol = 1e-12 * std::max(1.0, std::abs(s_scale));

  for (int z = 1; z <= zmax; ++z) {
    const double sp = lookup(s_values, z);
    const double sm = lookup(s_values, -z);
    if (sp < 0.0 || sm < 0.0)
      throw KernelError(KernelFault::SymmetryViolation,
                        "s(" + std::to_string(z) + ") negative");
    if (std::abs(sp - sm) > tol)
      throw KernelError(KernelFault::SymmetryViolation,
                        "s(" + std::to_string(z) + ") != s(-" +
                            std::to_string(z) + ")");
    const double ap = lookup(a_values, z);
    const double am = lookup(a_values, -z);
    if (std::abs(ap + am) > tol)
      throw KernelError(KernelFault::AntisymmetryViolation,
                        "a(" + std::to_string(z) + ") != -a(-" +
                            std::to_string(z) + ")");
    if (std::abs(ap) > C * sp + tol)
      throw KernelError(KernelFault::DominationViolation,
                        "|a(" + std::to_string(z) + ")| > C s(" +
                            std::to_string(z) + ")");
    kernel.s_pos[static_cast<std::size_t>(z - 1)] = sp;
    kernel.a_pos[static_cast<std::size_t>(z - 1)] = ap;
  }

  int g = 0;
  for (int z = 1; z <= zmax; ++z)
    if (kernel.s_pos[static_cast<std::size_t>(z - 1)] > 0.0)
      g = std::gcd(g, z);
  if (g != 1)
    throw KernelError(KernelFault::Reducible,
                      "gcd of positive support is " + std::to_string(g));

  if (std::abs(kernel.mass() + tail_mass_s - 1.0) > 1e-9)
    throw KernelError(KernelFault::NotNormalized,
                      "total mass " + std::to_string(kernel.mass() +
                                                     tail_mass_s));
  return kernel;
}

inline RateKernel nearest_neighbor_kernel() {
  RateKernel k;
  k.support_radius = 1;
  k.s_pos = {0.5};
  k.a_pos = {0.5};
  k.domination_C = 1.0;
  k.family = "nearest_neighbor";
  return k;
}

// s(z) = c/|z|^(1+beta) truncated at zmax, a = sgn(z) s, C = 1.  When c is
// not given it normalizes the untruncated family, and the truncated tail
// mass is recorded; the truncated kernel is then used exactly as is.
inline RateKernel power_law_kernel(double beta, int zmax,
                                   double c = std::numeric_limits<double>::quiet_NaN()) {
  if (beta <= 2.0)
    throw KernelError(KernelFault::NotNormalized,
                      "power-law family needs beta > 2");
  if (std::isnan(c)) {
    // zeta(1+beta) by direct summation plus Euler-Maclaurin tail.
    long double zeta = 0.0L;
    const int cut = 200000;
    for (int k = cut; k >= 1; --k)
      zeta += powl(static_cast<long double>(k), -(1.0L + (long double)beta));
    const long double K = cut;
    zeta += powl(K, -(long double)beta) / beta -
            0.5L * powl(K, -(1.0L + (long double)beta));
    c = static_cast<double>(1.0L / (2.0L * zeta));
  }
  RateKernel k;
  k.support_radius = zmax;
  k.domination_C = 1.0;
  k.family = "power_law";
  k.s_pos.resize(static_cast<std::size_t>(zmax));
  for (int z = 1; z <= zmax; ++z)
    k.s_pos[static_cast<std::size_t>(z - 1)] =
        c * std::pow(static_cast<double>(z), -(1.0 + beta));
  k.a_pos = k.s_pos;
  k.tail_mass_s = 1.0 - k.mass();
  return k;
}

// Kernel of the time-reversed process: p*(z) = p(-z), i.e. a -> -a.
inline RateKernel reversed(const RateKernel& kernel) {
  RateKernel r = kernel;
  for (double& v : r.a_pos) v = -v;
  return r;
}

struct KernelMoments {
  double sigma2 = 0.0;          // sum z^2 s(z)
  double m = 0.0;               // sum z a(z)
  double c1 = 0.0;              // 1/(4 sigma2)
  double c2 = 0.0;              // (4m-3) m / min_i s(z_i) over the 0->1 path
  std::vector<int> path_to_one; // x_0 = 0, ..., x_m = 1 with s(x_i - x_{i-1}) > 0
};

// Shortest 0 -> 1 walk using steps from the support of s; ties between
// equal-hop paths are broken towards the larger bottleneck rate, which
// gives the smaller c2.
inline std::vector<int> path_to_one(const RateKernel& kernel) {
  const int radius = kernel.support_radius;
  const int bound = std::max(2, 2 * radius * radius + radius);
  const int offset = bound;
  const std::size_t nodes = static_cast<std::size_t>(2 * bound + 1);
  std::vector<int> hops(nodes, -1);
  std::vector<double> bottleneck(nodes, 0.0);
  std::vector<int> parent(nodes, 0);

  std::vector<int> steps;
  for (int z = 1; z <= radius; ++z)
    if (kernel.s(z) > 0.0) {
      steps.push_back(z);
      steps.push_back(-z);
    }

  auto idx = [offset](int x) { return static_cast<std::size_t>(x + offset); };
  hops[idx(0)] = 0;
  bottleneck[idx(0)] = std::numeric_limits<double>::infinity();
  std::deque<int> frontier{0};
  while (!frontier.empty()) {
    const int x = frontier.front();
    frontier.pop_front();
    if (x == 1) break;
    for (int z : steps) {
      const int y = x + z;
      if (y < -bound || y > bound) continue;
      const double b = std::min(bottleneck[idx(x)], kernel.s(z));
      if (hops[idx(y)] == -1) {
        hops[idx(y)] = hops[idx(x)] + 1;
        bottleneck[idx(y)] = b;
        parent[idx(y)] = x;
        frontier.push_back(y);
      } else if (hops[idx(y)] == hops[idx(x)] + 1 && b > bottleneck[idx(y)]) {
        bottleneck[idx(y)] = b;
        parent[idx(y)] = x;
      }
    }
  }
  std::vector<int> path;
  for (int x = 1; x != 0; x = parent[idx(x)]) path.push_back(x);
  path.push_back(0);
  std::reverse(path.begin(), path.end());
  return path;
}

inline KernelMoments moments(const RateKernel& kernel) {
  KernelMoments mom;
  for (int z = 1; z <= kernel.support_radius; ++z) {
    mom.sigma2 += 2.0 * static_cast<double>(z) * static_cast<double>(z) *
                  kernel.s(z);
    mom.m += 2.0 * static_cast<double>(z) * kernel.a(z);
  }
  mom.c1 = 1.0 / (4.0 * mom.sigma2);
  mom.path_to_one = path_to_one(kernel);
  const auto hops = static_cast<double>(mom.path_to_one.size() - 1);
  double min_rate = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < mom.path_to_one.size(); ++i)
    min_rate = std::min(min_rate,
                        kernel.s(mom.path_to_one[i] - mom.path_to_one[i - 1]));
  mom.c2 = (4.0 * hops - 3.0) * hops / min_rate;
  return mom;
}

// gamma_n = b/sqrt(n) gated on n >= (bC)^2 so that |gamma_n| C <= 1; the
// per-z positivity check in build_pn remains authoritative.
inline double gamma_sequence(long n, double b, double C) {
  if (static_cast<double>(n) < b * b * C * C) return 0.0;
  return b / std::sqrt(static_cast<double>(n));
}

// Walker/Vose alias table over a fixed finite distribution.
class AliasTable {
 public:
  AliasTable() = default;

  explicit AliasTable(const std::vector<double>& weights) {
    const std::size_t n = weights.size();
    prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    double total = 0.0;
    for (double w : weights) total += w;
    std::vector<double> scaled(n);
    std::vector<std::size_t> small, large;
    for (std::size_t i = 0; i < n; ++i) {
      scaled[i] = weights[i] * static_cast<double>(n) / total;
      (scaled[i] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
      const std::size_t s = small.back();
      const std::size_t l = large.back();
      small.pop_back();
      large.pop_back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] -= 1.0 - scaled[s];
      (scaled[l] < 1.0 ? small : large).push_back(l);
    }
    for (std::size_t i : large) prob_[i] = 1.0;
    for (std::size_t i : small) prob_[i] = 1.0;
  }

  std::size_t sample(Rng& rng) const {
    const std::size_t i = rng.uniform_below(prob_.size());
    return rng.uniform() < prob_[i] ? i : alias_[i];
  }

  std::size_t size() const { return prob_.size(); }

 private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

// Sampled transition probability p_n(z) = s(z) + gamma_n a(z) over the
// truncated support, with an O(1) sampler.
struct JumpDistribution {
  long n = 0;
  double gamma_n = 0.0;
  std::vector<int> support;    // displacements with p_n > 0, both signs
  std::vector<double> p_of;    // aligned with support
  double total_mass = 0.0;     // sum of p_n == sum of s
  AliasTable alias;

  double p(int z) const {
    const int az = z < 0 ? -z : z;
    if (az == 0 || az > radius_) return 0.0;
    const std::size_t i = static_cast<std::size_t>(
        z > 0 ? radius_ + az - 1 : radius_ - az);
    return dense_[i];
  }

  int sample_z(Rng& rng) const { return support[alias.sample(rng)]; }

  int radius_ = 0;
  std::vector<double> dense_;  // index 0..2r-1 <-> z = -r..-1, 1..r
};

inline JumpDistribution build_pn(const RateKernel& kernel, long n, double b) {
  JumpDistribution dist;
  dist.n = n;
  dist.gamma_n = gamma_sequence(n, b, kernel.domination_C);
  dist.radius_ = kernel.support_radius;
  const int r = kernel.support_radius;
  dist.dense_.assign(static_cast<std::size_t>(2 * r), 0.0);
  for (int z = -r; z <= r; ++z) {
    if (z == 0) continue;
    double p = kernel.s(z) + dist.gamma_n * kernel.a(z);
    if (p < 0.0) {
      if (p < -1e-15 * std::max(1.0, kernel.s(z)))
        throw KernelError(KernelFault::NegativeRate,
                          "p_n(" + std::to_string(z) + ") = " +
                              std::to_string(p));
      p = 0.0;
    }
    const std::size_t i =
        static_cast<std::size_t>(z > 0 ? r + z - 1 : r + z);
    dist.dense_[i] = p;
    if (p > 0.0) {
      dist.support.push_back(z);
      dist.p_of.push_back(p);
      dist.total_mass += p;
    }
  }
  dist.alias = AliasTable(dist.p_of);
  return dist;
}

}  // namespace exclab
