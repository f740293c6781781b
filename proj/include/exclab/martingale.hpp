#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "exclab/dynamics.hpp"
#include "exclab/fields.hpp"
#include "exclab/kernel.hpp"
#include "exclab/lattice.hpp"
#include "exclab/testfn.hpp"

namespace exclab {

// Per-checkpoint values of the martingale decomposition
//   M_t = Y_t(f) - Y_0(f) - int_0^t Y_s(S_n f) ds - (gamma_n sqrt(n)/b) A_t
// together with the nonlinear functionals entering it.
struct MartingaleRecord {
  double t = 0.0;
  double field = 0.0;        // Y_t(f)
  double drift_int = 0.0;    // int_0^t Y_s(S_n f) ds
  double additive = 0.0;     // A_t
  double additive_nn = 0.0;  // A-hat_t (nearest-neighbour replacement)
  double martingale = 0.0;   // M_t
  double quad_var = 0.0;     // <M>_t
  std::vector<double> additive_eps;  // A_t^{n,eps}, aligned with eps_list

  double remainder() const { return additive - additive_nn; }  // R_t
};

// Final-time integrals of the block-replacement errors for one block
// length l:
//   bg_error = int sum_x (etabar etabar_+1 - psi^l) grad-tilde f ds
//   psi_gap  = int sum_x (psi^l - psi-tilde^l)      grad-tilde f ds
struct BlockErrorRecord {
  int len = 0;
  double bg_error = 0.0;
  double psi_gap = 0.0;
};

struct DecomposeOptions {
  std::vector<double> eps_list;    // mollifier widths; block l = round(eps n) >= 2
  std::vector<int> block_lengths;  // extra block lengths for the replacement errors
};

struct DecomposeResult {
  std::vector<MartingaleRecord> records;
  std::vector<BlockErrorRecord> blocks;
};

// Event-driven exact accumulator for all additive functionals of one test
// function.  The process is piecewise constant, so every time integral is
// a finite sum of (instantaneous value) * (holding time); instantaneous
// values are maintained incrementally under swaps.
class FieldTracker {
 public:
  FieldTracker(const Configuration& initial, const TestFunction& f,
               const RateKernel& kernel, const JumpDistribution& pn,
               const SimParams& params, const DecomposeOptions& options)
      : cfg_(initial),
        n_(params.n),
        inv_sqrt_n_(1.0 / std::sqrt(static_cast<double>(params.n))),
        b_(params.b),
        sites_(initial.sites()) {
    const double dn = static_cast<double>(n_);
    mart_factor_ = params.b == 0.0
                       ? 0.0
                       : pn.gamma_n * std::sqrt(dn) / params.b;

    fx_.resize(static_cast<std::size_t>(sites_));
    for (int x = 0; x < sites_; ++x)
      fx_[static_cast<std::size_t>(x)] = f(static_cast<double>(x) / dn);

    for (int z = 1; z <= kernel.support_radius; ++z) {
      if (kernel.a(z) != 0.0) asym_support_.push_back({z, kernel.a(z)});
      for (int sz : {z, -z})
        if (pn.p(sz) > 0.0) qv_support_.push_back({sz, pn.p(sz)});
    }

    snf_.resize(static_cast<std::size_t>(sites_));
    wt_.resize(static_cast<std::size_t>(sites_));
    for (int x = 0; x < sites_; ++x) {
      double acc = 0.0;
      for (int z = 1; z <= kernel.support_radius; ++z) {
        const double s = kernel.s(z);
        if (s == 0.0) continue;
        acc += s * (fx_at(x + z) + fx_at(x - z) -
                    2.0 * fx_[static_cast<std::size_t>(x)]);
      }
      snf_[static_cast<std::size_t>(x)] = dn * dn * acc;
      double tilted = 0.0;
      for (const auto& [z, a] : asym_support_) tilted += a * ndiff(x, z);
      wt_[static_cast<std::size_t>(x)] = 2.0 * tilted;
    }

    // merge block lengths requested through eps_list and directly
    for (double eps : options.eps_list)
      eps_lens_.push_back(std::max<long>(2, std::lround(eps * dn)));
    std::vector<long> lens(eps_lens_);
    for (int len : options.block_lengths) lens.push_back(len);
    std::sort(lens.begin(), lens.end());
    lens.erase(std::unique(lens.begin(), lens.end()), lens.end());
    for (long len : lens) {
      if (len < 2 || len > sites_)
        throw std::invalid_argument(
            "DegenerateBlock: block length must lie in [2, N]");
      blocks_.push_back(BlockState{});
      BlockState& blk = blocks_.back();
      blk.len = static_cast<int>(len);
      blk.tab_psi.resize(static_cast<std::size_t>(len) + 1);
      blk.tab_psit.resize(static_cast<std::size_t>(len) + 1);
      for (int k = 0; k <= len; ++k) {
        blk.tab_psi[static_cast<std::size_t>(k)] =
            psi_value(k, static_cast<int>(len));
        blk.tab_psit[static_cast<std::size_t>(k)] =
            psi_tilde_value(k, static_cast<int>(len));
      }
      blk.counts.resize(static_cast<std::size_t>(sites_));
      for (int x = 0; x < sites_; ++x)
        blk.counts[static_cast<std::size_t>(x)] = static_cast<std::uint16_t>(
            cfg_.block_count(x, static_cast<int>(len)));
    }

    rebuild_instantaneous();
    field_0_ = inv_sqrt_n_ * sum_yf_;
  }

  double time() const { return t_; }

  // Integrate the current holding interval up to to_t.
  void advance(double to_t) {
    const double dt = to_t - t_;
    if (dt <= 0.0) {
      t_ = std::max(t_, to_t);
      return;
    }
    i_drift_ += sum_ysnf_ * inv_sqrt_n_ * dt;
    i_asym_ += v_asym_ * dt;
    i_nnwt_ += v_nn_ * dt;
    i_qv_ += v_qv_ * dt;
    for (BlockState& blk : blocks_) {
      blk.i_psi += blk.v_psi * dt;
      blk.i_psit += blk.v_psit * dt;
    }
    t_ = to_t;
  }

  // Apply the swap of an event at absolute time t (particle moves u -> v).
  void apply_event(double t, int u, int v) {
    advance(t);
    assert(cfg_.occupied(u) && !cfg_.occupied(v));

    const double before =
        asym_around(u) + asym_around(v) - asym_between(u, v);
    const double qbefore = qv_around(u) + qv_around(v) - qv_between(u, v);
    const double nnbefore = nn_around(u, v);

    cfg_.swap(u, v);

    v_asym_ += asym_around(u) + asym_around(v) - asym_between(u, v) - before;
    v_qv_ += qv_around(u) + qv_around(v) - qv_between(u, v) - qbefore;
    v_nn_ += nn_around(u, v) - nnbefore;
    sum_yf_ += fx_[static_cast<std::size_t>(v)] -
               fx_[static_cast<std::size_t>(u)];
    sum_ysnf_ += snf_[static_cast<std::size_t>(v)] -
                 snf_[static_cast<std::size_t>(u)];

    for (BlockState& blk : blocks_) {
      update_blocks(blk, u, -1);
      update_blocks(blk, v, +1);
    }
  }

  MartingaleRecord make_record(double t) {
    advance(t);
    MartingaleRecord rec;
    rec.t = t;
    rec.field = inv_sqrt_n_ * sum_yf_;
    rec.drift_int = i_drift_;
    rec.additive = -2.0 * b_ * i_asym_;
    rec.additive_nn = -b_ * i_nnwt_;
    rec.quad_var = i_qv_;
    rec.martingale = rec.field - field_0_ - rec.drift_int -
                     mart_factor_ * rec.additive;
    rec.additive_eps.reserve(eps_lens_.size());
    for (long len : eps_lens_)
      rec.additive_eps.push_back(block_state(len).i_psit);
    return rec;
  }

  BlockErrorRecord block_errors(long len) const {
    const BlockState& blk = block_state(len);
    return {blk.len, i_nnwt_ - blk.i_psi, blk.i_psi - blk.i_psit};
  }

  // From-scratch field value for the current configuration; the unit and
  // acceptance suites compare it with the incrementally maintained one.
  double field_recomputed() const {
    double sum = 0.0;
    for (int x = 0; x < sites_; ++x)
      sum += cfg_.centered(x) * fx_[static_cast<std::size_t>(x)];
    return inv_sqrt_n_ * sum;
  }

  const Configuration& configuration() const { return cfg_; }

 private:
  struct BlockState {
    int len = 0;
    std::vector<std::uint16_t> counts;  // particles in [x, x+len)
    std::vector<double> tab_psi, tab_psit;
    double v_psi = 0.0, v_psit = 0.0;
    double i_psi = 0.0, i_psit = 0.0;
  };

  int wrap(int x) const {
    if (x >= sites_) return x - sites_;
    if (x < 0) return x + sites_;
    return x;
  }

  double fx_at(int x) const {
    return fx_[static_cast<std::size_t>(wrap2(x))];
  }

  // wrap for arguments within [-N, 2N)
  int wrap2(int x) const {
    if (x >= sites_) x -= sites_;
    if (x < 0) x += sites_;
    return x;
  }

  double ndiff(int x, int z) const {
    return static_cast<double>(n_) *
           (fx_at(x + z) - fx_[static_cast<std::size_t>(x)]);
  }

  double asym_term(int x, int z, double a) const {
    return cfg_.centered(x) * cfg_.centered(wrap2(x + z)) * a * ndiff(x, z);
  }

  double asym_around(int site) const {
    double sum = 0.0;
    for (const auto& [z, a] : asym_support_)
      sum += asym_term(wrap2(site - z), z, a) + asym_term(site, z, a);
    return sum;
  }

  double asym_between(int u, int v) const {
    double sum = 0.0;
    const int d1 = wrap(v - u);
    if (d1 >= 1 && d1 <= radius_limit()) {
      const double a = a_of(d1);
      if (a != 0.0) sum += asym_term(u, d1, a);
    }
    const int d2 = wrap(u - v);
    if (d2 >= 1 && d2 <= radius_limit()) {
      const double a = a_of(d2);
      if (a != 0.0) sum += asym_term(v, d2, a);
    }
    return sum;
  }

  double qv_term(int x, int z, double p) const {
    if (!cfg_.occupied(x) || cfg_.occupied(wrap2(x + z))) return 0.0;
    const double d = ndiff(x, z);
    return p * d * d / static_cast<double>(n_);
  }

  double qv_around(int site) const {
    double sum = 0.0;
    for (const auto& [z, p] : qv_support_)
      sum += qv_term(site, z, p) + qv_term(wrap2(site - z), z, p);
    return sum;
  }

  double qv_between(int u, int v) const {
    double sum = 0.0;
    if (const int z = signed_disp(u, v); z != 0) {
      const double p = p_of(z);
      if (p > 0.0) sum += qv_term(u, z, p);
    }
    if (const int z = signed_disp(v, u); z != 0) {
      const double p = p_of(z);
      if (p > 0.0) sum += qv_term(v, z, p);
    }
    return sum;
  }

  double nn_term(int x) const {
    return cfg_.centered(x) * cfg_.centered(wrap2(x + 1)) *
           wt_[static_cast<std::size_t>(x)];
  }

  double nn_around(int u, int v) const {
    int xs[4] = {wrap(u - 1), u, wrap(v - 1), v};
    std::sort(std::begin(xs), std::end(xs));
    double sum = 0.0;
    int prev = -1;
    for (int x : xs) {
      if (x == prev) continue;
      prev = x;
      sum += nn_term(x);
    }
    return sum;
  }

  void update_blocks(BlockState& blk, int site, int delta) {
    int x = site;
    for (int j = 0; j < blk.len; ++j) {
      const std::uint16_t old = blk.counts[static_cast<std::size_t>(x)];
      const std::uint16_t neu = static_cast<std::uint16_t>(old + delta);
      blk.counts[static_cast<std::size_t>(x)] = neu;
      const double w = wt_[static_cast<std::size_t>(x)];
      blk.v_psi += (blk.tab_psi[neu] - blk.tab_psi[old]) * w;
      blk.v_psit += (blk.tab_psit[neu] - blk.tab_psit[old]) * w;
      x = x == 0 ? sites_ - 1 : x - 1;
    }
  }

  int radius_limit() const {
    int r = 0;
    for (const auto& [z, a] : asym_support_) r = std::max(r, z);
    return r;
  }

  double a_of(int z) const {
    for (const auto& [zz, a] : asym_support_)
      if (zz == z) return a;
    return 0.0;
  }

  double p_of(int z) const {
    for (const auto& [zz, p] : qv_support_)
      if (zz == z) return p;
    return 0.0;
  }

  // Signed displacement taking `from` to `to`, if it lies within the
  // kernel radius; 0 otherwise.  Unambiguous because Zmax <= N/4.
  int signed_disp(int from, int to) const {
    const int d = wrap(to - from);
    int r = 0;
    for (const auto& [z, p] : qv_support_) r = std::max(r, std::abs(z));
    if (d >= 1 && d <= r) return d;
    if (sites_ - d >= 1 && sites_ - d <= r) return d - sites_;
    return 0;
  }

  const BlockState& block_state(long len) const {
    for (const BlockState& blk : blocks_)
      if (blk.len == len) return blk;
    throw std::invalid_argument("block length not tracked");
  }

  void rebuild_instantaneous() {
    sum_yf_ = sum_ysnf_ = v_nn_ = v_asym_ = v_qv_ = 0.0;
    for (int x = 0; x < sites_; ++x) {
      sum_yf_ += cfg_.centered(x) * fx_[static_cast<std::size_t>(x)];
      sum_ysnf_ += cfg_.centered(x) * snf_[static_cast<std::size_t>(x)];
      v_nn_ += nn_term(x);
      for (const auto& [z, a] : asym_support_) sum_asym_init(x, z, a);
      for (const auto& [z, p] : qv_support_) v_qv_ += qv_term(x, z, p);
    }
    for (BlockState& blk : blocks_) {
      blk.v_psi = blk.v_psit = 0.0;
      for (int x = 0; x < sites_; ++x) {
        const std::uint16_t k = blk.counts[static_cast<std::size_t>(x)];
        const double w = wt_[static_cast<std::size_t>(x)];
        blk.v_psi += blk.tab_psi[k] * w;
        blk.v_psit += blk.tab_psit[k] * w;
      }
    }
  }

  void sum_asym_init(int x, int z, double a) { v_asym_ += asym_term(x, z, a); }

  Configuration cfg_;
  long n_;
  double inv_sqrt_n_;
  double b_;
  int sites_;
  double mart_factor_ = 1.0;

  std::vector<double> fx_, snf_, wt_;
  std::vector<std::pair<int, double>> asym_support_;  // (z > 0, a(z))
  std::vector<std::pair<int, double>> qv_support_;    // (signed z, p_n(z))
  std::vector<long> eps_lens_;
  std::vector<BlockState> blocks_;

  double t_ = 0.0;
  double field_0_ = 0.0;
  double sum_yf_ = 0.0, sum_ysnf_ = 0.0;
  double v_nn_ = 0.0, v_asym_ = 0.0, v_qv_ = 0.0;
  double i_drift_ = 0.0, i_asym_ = 0.0, i_nnwt_ = 0.0, i_qv_ = 0.0;
};

// Exact decomposition of a stored trajectory: replays the events and
// returns one record per checkpoint (default: t_max only) plus the
// block-replacement errors at the final time.
inline DecomposeResult decompose(const Trajectory& traj,
                                 const TestFunction& f,
                                 const RateKernel& kernel,
                                 const JumpDistribution& pn,
                                 const SimParams& params,
                                 const DecomposeOptions& options = {}) {
  if (traj.initial.sites() == 0)
    throw std::invalid_argument("EmptyTrajectory: no initial configuration");
  std::vector<double> checkpoints = params.checkpoint_times;
  if (checkpoints.empty()) checkpoints.push_back(traj.final_time);

  FieldTracker tracker(traj.initial, f, kernel, pn, params, options);
  DecomposeResult result;
  result.records.reserve(checkpoints.size());

  std::size_t next_event = 0;
  for (double t : checkpoints) {
    while (next_event < traj.events.size() &&
           traj.events[next_event].t <= t) {
      const auto& ev = traj.events[next_event++];
      tracker.apply_event(ev.t, ev.from, ev.to);
    }
    result.records.push_back(tracker.make_record(t));
  }
  while (next_event < traj.events.size()) {
    const auto& ev = traj.events[next_event++];
    tracker.apply_event(ev.t, ev.from, ev.to);
  }
  tracker.advance(traj.final_time);

  for (int len : options.block_lengths)
    result.blocks.push_back(tracker.block_errors(len));
  return result;
}

// Largest field increment over the trajectory's events; bounded by
// 2 |f|_inf / sqrt(n) since a swap changes exactly two sites.
template <class F>
double jump_size(const Trajectory& traj, const F& f, long n) {
  const double dn = static_cast<double>(n);
  double worst = 0.0;
  for (const auto& ev : traj.events) {
    const double jump = std::abs(f(static_cast<double>(ev.to) / dn) -
                                 f(static_cast<double>(ev.from) / dn)) /
                        std::sqrt(dn);
    worst = std::max(worst, jump);
  }
  return worst;
}

}  // namespace exclab
