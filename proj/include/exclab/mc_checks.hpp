#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "exclab/dynamics.hpp"
#include "exclab/kernel.hpp"
#include "exclab/lattice.hpp"
#include "exclab/martingale.hpp"
#include "exclab/replica.hpp"
#include "exclab/rng.hpp"
#include "exclab/stats.hpp"
#include "exclab/testfn.hpp"
#include "exclab/verify.hpp"

namespace exclab {

struct ReplicaOutcome {
  DecomposeResult dec;
  double max_jump = 0.0;
};

// Simulate + decompose `replicas` independent stationary runs.  Replica i
// draws everything from the Philox stream (params.seed, i), so the result
// set is reproducible for any thread count.
inline std::vector<ReplicaOutcome> run_particle_ensemble(
    const RateKernel& kernel, const SimParams& params, const TestFunction& f,
    const DecomposeOptions& options, int replicas, int threads) {
  const JumpDistribution pn = build_pn(kernel, params.n, params.b);
  return run_replicas(replicas, threads, [&](int replica) {
    Rng rng(params.seed, static_cast<std::uint64_t>(replica));
    const Configuration init = sample_bernoulli(params.sites(), 0.5, rng);
    const Trajectory traj = simulate(init, params, kernel, pn, rng);
    ReplicaOutcome out;
    out.dec = decompose(traj, f, kernel, pn, params, options);
    out.max_jump = jump_size(traj, f, params.n);
    return out;
  });
}

// ---------------------------------------------------------------------------
// Integration-by-parts error: decay of E[R_t^2] = E[(A_t - A-hat_t)^2] in n.

struct IbpReport {
  std::vector<long> n_list;
  std::vector<double> r2;             // E[R^2] at t_max, per n
  std::vector<double> r2_se;
  std::vector<std::vector<double>> r2_by_time;  // per n, per checkpoint
  std::vector<std::vector<double>> r2_by_time_se;
  std::vector<double> checkpoint_times;
  double exponent = 0.0;              // fitted decay of E[R^2] in n
  bool monotone_in_t = true;          // nondecreasing within 4 SE slack
};

inline IbpReport estimate_ibp_error(const RateKernel& kernel,
                                    const SimParams& base,
                                    const TestFunction& f,
                                    const std::vector<long>& n_list,
                                    int replicas, int threads) {
  IbpReport report;
  report.n_list = n_list;
  report.checkpoint_times = base.checkpoint_times;
  for (long n : n_list) {
    SimParams params = base;
    params.n = n;
    params.seed = derive_seed(base.seed, static_cast<std::uint64_t>(n));
    const auto outcomes =
        run_particle_ensemble(kernel, params, f, {}, replicas, threads);
    std::vector<RunningStat> per_cp(params.checkpoint_times.size());
    for (const auto& out : outcomes)
      for (std::size_t k = 0; k < out.dec.records.size(); ++k) {
        const double r = out.dec.records[k].remainder();
        per_cp[k].add(r * r);
      }
    std::vector<double> means, ses;
    for (const auto& st : per_cp) {
      means.push_back(st.mean);
      ses.push_back(st.se());
    }
    for (std::size_t k = 1; k < means.size(); ++k)
      if (means[k] < means[k - 1] - 4.0 * (ses[k] + ses[k - 1]))
        report.monotone_in_t = false;
    report.r2.push_back(means.back());
    report.r2_se.push_back(ses.back());
    report.r2_by_time.push_back(means);
    report.r2_by_time_se.push_back(ses);
  }
  std::vector<double> ns(n_list.begin(), n_list.end());
  report.exponent = fit_exponent(ns, report.r2);
  return report;
}

// ---------------------------------------------------------------------------
// Second-order block replacement: growth of the psi^l error in l and decay
// of the psi - psi-tilde gap.

struct BgReport {
  long n = 0;
  double t = 0.0;
  double sum_wt2 = 0.0;  // sum_x (tilted grad)^2
  std::vector<int> ells;
  std::vector<double> bg_err2, bg_err2_se;
  std::vector<double> gap2, gap2_se;
  std::vector<double> bg_constant;  // E[err^2] n^2 / (l t sum_wt2)
  double bg_exponent = 0.0;         // growth of E[err^2] in l
  double gap_exponent = 0.0;        // decay of E[gap^2] in l
};

inline BgReport estimate_bg_error(const RateKernel& kernel,
                                  const SimParams& params,
                                  const TestFunction& f,
                                  const std::vector<int>& ell_list,
                                  int replicas, int threads) {
  DecomposeOptions options;
  options.block_lengths = ell_list;
  const auto outcomes =
      run_particle_ensemble(kernel, params, f, options, replicas, threads);

  BgReport report;
  report.n = params.n;
  report.t = params.t_max;
  report.ells = ell_list;
  for (int x = 0; x < params.sites(); ++x) {
    const double w = tilted_grad(
        kernel, f, params.n, x);
    report.sum_wt2 += w * w;
  }
  for (std::size_t i = 0; i < ell_list.size(); ++i) {
    RunningStat err, gap;
    for (const auto& out : outcomes) {
      err.add(out.dec.blocks[i].bg_error * out.dec.blocks[i].bg_error);
      gap.add(out.dec.blocks[i].psi_gap * out.dec.blocks[i].psi_gap);
    }
    report.bg_err2.push_back(err.mean);
    report.bg_err2_se.push_back(err.se());
    report.gap2.push_back(gap.mean);
    report.gap2_se.push_back(gap.se());
    const double dn = static_cast<double>(params.n);
    report.bg_constant.push_back(err.mean * dn * dn /
                                 (ell_list[i] * params.t_max *
                                  report.sum_wt2));
  }
  std::vector<double> ls(ell_list.begin(), ell_list.end());
  report.bg_exponent = fit_exponent(ls, report.bg_err2);
  report.gap_exponent = fit_exponent(ls, report.gap2);
  return report;
}

// ---------------------------------------------------------------------------
// Time regularity of the nearest-neighbour additive functional: increments
// E[(A-hat_t - A-hat_s)^2] over dyadic gaps of the checkpoint grid.

struct TimeRegularityReport {
  std::vector<double> gaps;
  std::vector<double> inc2, inc2_se;
  double exponent = 0.0;
  // stationarity of increments: |early-window minus late-window| estimate
  // in units of the combined standard error, maximized over gaps
  double stationarity_z = 0.0;
};

inline TimeRegularityReport check_time_regularity(
    const std::vector<ReplicaOutcome>& outcomes,
    const std::vector<double>& checkpoint_times,
    const std::vector<int>& gap_strides) {
  TimeRegularityReport report;
  for (int stride : gap_strides) {
    RunningStat all, early, late;
    const std::size_t count = checkpoint_times.size();
    for (const auto& out : outcomes) {
      double inc_sum = 0.0;
      int inc_count = 0;
      double first = 0.0, last = 0.0;
      for (std::size_t k = 0; k + stride < count; ++k) {
        const double d = out.dec.records[k + stride].additive_nn -
                         out.dec.records[k].additive_nn;
        inc_sum += d * d;
        if (inc_count == 0) first = d * d;
        last = d * d;
        ++inc_count;
      }
      all.add(inc_sum / inc_count);
      early.add(first);
      late.add(last);
    }
    report.gaps.push_back(
        checkpoint_times[static_cast<std::size_t>(stride)] -
        checkpoint_times[0]);
    report.inc2.push_back(all.mean);
    report.inc2_se.push_back(all.se());
    const double se = std::sqrt(early.se() * early.se() +
                                late.se() * late.se());
    if (se > 0.0)
      report.stationarity_z = std::max(
          report.stationarity_z, std::abs(early.mean - late.mean) / se);
  }
  report.exponent = fit_exponent(report.gaps, report.inc2);
  return report;
}

// ---------------------------------------------------------------------------
// Time reversal: the reversed chain is the one driven by p*(z) = p(-z).
// Forward two-time covariances must match the reversed-kernel ones.

struct ReversalReport {
  std::vector<double> lags;
  std::vector<double> cov_forward, cov_forward_se;
  std::vector<double> cov_reversed, cov_reversed_se;
  double var_forward = 0.0, var_reversed = 0.0;
  double var_forward_se = 0.0, var_reversed_se = 0.0;
  double max_z = 0.0;  // worst covariance discrepancy in combined SEs
};

// Per-replica fields Y_0, Y_{t_1}, ..., for one kernel.
inline std::vector<std::vector<double>> field_samples(
    const RateKernel& kernel, const SimParams& params, const TestFunction& f,
    int replicas, int threads) {
  const JumpDistribution pn = build_pn(kernel, params.n, params.b);
  return run_replicas(replicas, threads, [&](int replica) {
    Rng rng(params.seed, static_cast<std::uint64_t>(replica));
    const Configuration init = sample_bernoulli(params.sites(), 0.5, rng);
    std::vector<double> fields;
    fields.reserve(params.checkpoint_times.size() + 1);
    fields.push_back(fluctuation_field(init, f, params.n));
    simulate(init, params, kernel, pn, rng,
             [&](double, const Configuration& cfg) {
               fields.push_back(fluctuation_field(cfg, f, params.n));
             });
    return fields;
  });
}

inline ReversalReport reverse_time_law_check(const RateKernel& kernel,
                                             const SimParams& params,
                                             const TestFunction& f,
                                             int replicas, int threads) {
  SimParams fwd = params;
  fwd.seed = derive_seed(params.seed, 0x464f5257ull);  // forward tag
  SimParams rev = params;
  rev.seed = derive_seed(params.seed, 0x52455645ull);  // reversed tag
  const auto fsam = field_samples(kernel, fwd, f, replicas, threads);
  const auto rsam = field_samples(reversed(kernel), rev, f, replicas, threads);

  ReversalReport report;
  const std::size_t lag_count = params.checkpoint_times.size();
  RunningStat var_f, var_r;
  for (std::size_t r = 0; r < fsam.size(); ++r) {
    var_f.add(fsam[r][0] * fsam[r][0]);
    var_r.add(rsam[r][0] * rsam[r][0]);
  }
  report.var_forward = var_f.mean;
  report.var_forward_se = var_f.se();
  report.var_reversed = var_r.mean;
  report.var_reversed_se = var_r.se();
  for (std::size_t k = 0; k < lag_count; ++k) {
    RunningStat cf, cr;
    for (std::size_t r = 0; r < fsam.size(); ++r) {
      cf.add(fsam[r][0] * fsam[r][k + 1]);
      cr.add(rsam[r][0] * rsam[r][k + 1]);
    }
    report.lags.push_back(params.checkpoint_times[k]);
    report.cov_forward.push_back(cf.mean);
    report.cov_forward_se.push_back(cf.se());
    report.cov_reversed.push_back(cr.mean);
    report.cov_reversed_se.push_back(cr.se());
    const double se =
        std::sqrt(cf.se() * cf.se() + cr.se() * cr.se());
    if (se > 0.0)
      report.max_z =
          std::max(report.max_z, std::abs(cf.mean - cr.mean) / se);
  }
  return report;
}

}  // namespace exclab
