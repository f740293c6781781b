#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "exclab/kernel.hpp"
#include "exclab/lattice.hpp"
#include "exclab/rng.hpp"

namespace exclab {

struct SimParams {
  long n = 2;                   // scaling parameter
  int macro_length = 4;         // L; the lattice has N = L*n sites
  double b = 1.0;               // asymmetry strength
  double t_max = 1.0;           // macroscopic horizon
  std::uint64_t seed = 0;       // master seed (replica streams derive from it)
  std::vector<double> checkpoint_times;

  int sites() const { return static_cast<int>(macro_length * n); }

  void validate(const RateKernel& kernel) const {
    if (n < 2) throw std::invalid_argument("scaling parameter n must be >= 2");
    if (t_max <= 0.0) throw std::invalid_argument("t_max must be positive");
    if (4 * kernel.support_radius > sites())
      throw std::invalid_argument(
          "kernel radius exceeds N/4; jumps could wrap more than once");
    for (double t : checkpoint_times)
      if (t < 0.0 || t > t_max)
        throw std::invalid_argument("checkpoint outside [0, t_max]");
  }
};

// Initial configuration plus the accepted swaps, in macroscopic time.
// Null attempts only advance the clock, so replaying the events through
// Configuration::swap reproduces every intermediate state exactly.
struct Trajectory {
  struct Event {
    double t;
    int from;
    int to;
  };

  Configuration initial;
  std::vector<Event> events;
  double final_time = 0.0;
};

struct StepOutcome {
  double dt = 0.0;
  bool accepted = false;
  int from = -1;
  int to = -1;
};

// Draws one attempt without touching the configuration: an exponential
// holding time at the full attempt rate n^2 * (#particles) * sum_z p_n(z),
// a uniform particle and a p_n-distributed displacement.
inline StepOutcome propose_jump(const Configuration& cfg,
                                const JumpDistribution& pn, long n,
                                Rng& rng) {
  const int particles = cfg.particle_count();
  if (particles == 0)
    throw std::runtime_error("EmptyLattice: no particle can move");
  StepOutcome out;
  const double rate = static_cast<double>(n) * static_cast<double>(n) *
                      static_cast<double>(particles) * pn.total_mass;
  out.dt = rng.exponential(rate);
  const int x = cfg.particle_at(static_cast<int>(
      rng.uniform_below(static_cast<std::uint64_t>(particles))));
  const int z = pn.sample_z(rng);
  const int y = cfg.wrap(static_cast<long>(x) + z);
  out.from = x;
  out.to = y;
  out.accepted = !cfg.occupied(y);
  return out;
}

// One thinning attempt; applies the swap when the target is empty, else
// the attempt is a null event and only the clock advances.  Exact in law
// for the generator dynamics.
inline StepOutcome step(Configuration& cfg, const JumpDistribution& pn,
                        long n, Rng& rng) {
  const StepOutcome out = propose_jump(cfg, pn, n, rng);
  if (out.accepted) cfg.swap(out.from, out.to);
  return out;
}

// Checkpoint callback: invoked with (t, state at time t) for every
// checkpoint time, in ascending order, exactly once each.
using CheckpointFn = std::function<void(double, const Configuration&)>;

inline Trajectory simulate(const Configuration& initial,
                           const SimParams& params, const RateKernel& kernel,
                           const JumpDistribution& pn, Rng& rng,
                           const CheckpointFn& on_checkpoint = {}) {
  params.validate(kernel);
  Trajectory traj;
  traj.initial = initial;
  Configuration cfg = initial;
  double t = 0.0;
  std::size_t next_cp = 0;
  const auto& cps = params.checkpoint_times;
  auto flush_before = [&](double horizon) {
    while (next_cp < cps.size() && cps[next_cp] < horizon) {
      if (on_checkpoint) on_checkpoint(cps[next_cp], cfg);
      ++next_cp;
    }
  };
  auto flush_through = [&](double horizon) {
    while (next_cp < cps.size() && cps[next_cp] <= horizon) {
      if (on_checkpoint) on_checkpoint(cps[next_cp], cfg);
      ++next_cp;
    }
  };
  // A full or empty lattice never changes state; skip straight to t_max.
  if (cfg.particle_count() > 0 && cfg.particle_count() < cfg.sites()) {
    for (;;) {
      const StepOutcome out = propose_jump(cfg, pn, params.n, rng);
      double t_next = t + out.dt;
      if (t_next <= t)
        t_next = std::nextafter(t, std::numeric_limits<double>::infinity());
      if (t_next > params.t_max) break;
      // the state on [t, t_next) is the current cfg
      flush_before(t_next);
      if (out.accepted) {
        cfg.swap(out.from, out.to);
        traj.events.push_back({t_next, out.from, out.to});
      }
      t = t_next;
      flush_through(t);
    }
  }
  flush_through(params.t_max);
  traj.final_time = params.t_max;
  return traj;
}

}  // namespace exclab
