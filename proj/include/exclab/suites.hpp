#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "exclab/config.hpp"
#include "exclab/dynamics.hpp"
#include "exclab/fields.hpp"
#include "exclab/kernel.hpp"
#include "exclab/lattice.hpp"
#include "exclab/martingale.hpp"
#include "exclab/mc_checks.hpp"
#include "exclab/replica.hpp"
#include "exclab/report.hpp"
#include "exclab/rng.hpp"
#include "exclab/sbe.hpp"
#include "exclab/stats.hpp"
#include "exclab/testfn.hpp"
#include "exclab/verify.hpp"

namespace exclab {

struct SuiteResult {
  CheckList checks;
  nlohmann::json details = nlohmann::json::object();
};

namespace suite_detail {

inline double exact_qv_mean(const RateKernel& kernel, const TestFunction& f,
                            long n, int macro_length, double t) {
  const int sites = static_cast<int>(macro_length * n);
  double sum = 0.0;
  for (int x = 0; x < sites; ++x)
    for (int z = 1; z <= kernel.support_radius; ++z) {
      const double s = kernel.s(z);
      if (s == 0.0) continue;
      const double gp = grad(f, n, x, z);
      const double gm = grad(f, n, x, -z);
      sum += s * (gp * gp + gm * gm);
    }
  return t / (4.0 * static_cast<double>(n)) * sum;
}

inline double torus_field_variance(const TestFunction& f, long n,
                                   int macro_length) {
  const int sites = static_cast<int>(macro_length * n);
  double sum = 0.0;
  for (int x = 0; x < sites; ++x) {
    const double v = f(static_cast<double>(x) / static_cast<double>(n));
    sum += v * v;
  }
  return sum / (4.0 * static_cast<double>(n));
}

inline std::vector<double> uniform_grid(double t_max, int segments) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(segments) + 1);
  for (int k = 0; k <= segments; ++k)
    out.push_back(t_max * static_cast<double>(k) /
                  static_cast<double>(segments));
  return out;
}

}  // namespace suite_detail

// ---------------------------------------------------------------------------
// validate-kernel

inline SuiteResult suite_validate_kernel(const ExperimentConfig& cfg) {
  SuiteResult result;
  const RateKernel kernel = cfg.build_kernel();
  const KernelMoments mom = moments(kernel);
  result.details["family"] = kernel.family;
  result.details["support_radius"] = kernel.support_radius;
  result.details["tail_mass_s"] = kernel.tail_mass_s;
  result.details["sigma2"] = mom.sigma2;
  result.details["m"] = mom.m;
  result.details["c1"] = mom.c1;
  result.details["c2"] = mom.c2;
  result.details["path_to_one"] = mom.path_to_one;
  nlohmann::json table = nlohmann::json::object();
  for (int z = 1; z <= kernel.support_radius; ++z) {
    if (kernel.s(z) == 0.0 && kernel.a(z) == 0.0) continue;
    table[std::to_string(z)] = {{"s", kernel.s(z)}, {"a", kernel.a(z)}};
  }
  result.details["rates"] = table;
  for (long n : cfg.sim.n_list) {
    const JumpDistribution pn = build_pn(kernel, n, cfg.sim.b);
    result.checks.add("pn_mass_conserved_n" + std::to_string(n),
                      std::abs(pn.total_mass - kernel.mass()), 1e-13, 0.0,
                      std::abs(pn.total_mass - kernel.mass()) <= 1e-13);
  }
  return result;
}

// ---------------------------------------------------------------------------
// simulate: stationary run with the full per-checkpoint decomposition.

inline SuiteResult suite_simulate(const ExperimentConfig& cfg,
                                  bool dump_events = false) {
  SuiteResult result;
  const RateKernel kernel = cfg.build_kernel();
  const KernelMoments mom = moments(kernel);
  const std::vector<TestFunction> fs = cfg.build_test_functions();
  const TestFunction& f = fs.front();

  SimParams params;
  params.n = cfg.sim.n_list.back();
  params.macro_length = cfg.sim.macro_length;
  params.b = cfg.sim.b;
  params.t_max = cfg.sim.t_max;
  params.seed = cfg.run.master_seed;
  params.checkpoint_times = cfg.sim.checkpoints.empty()
                                ? suite_detail::uniform_grid(cfg.sim.t_max, 4)
                                : cfg.sim.checkpoints;
  if (params.checkpoint_times.front() != 0.0)
    params.checkpoint_times.insert(params.checkpoint_times.begin(), 0.0);

  DecomposeOptions options;
  options.eps_list = cfg.fields.eps_list;

  const auto outcomes = run_particle_ensemble(
      kernel, params, f, options, cfg.run.replicas, cfg.run.threads);

  // CSV: one row per (replica, checkpoint)
  std::vector<std::string> columns{"replica", "t",     "Y", "drift_int",
                                   "A",       "A_hat", "R", "M",
                                   "QV"};
  for (double eps : options.eps_list) {
    std::ostringstream name;
    name << "A_eps_" << eps;
    columns.push_back(name.str());
  }
  CsvWriter csv(std::filesystem::path(cfg.run.out) / "records.csv", columns);
  for (std::size_t r = 0; r < outcomes.size(); ++r)
    for (const MartingaleRecord& rec : outcomes[r].dec.records) {
      std::vector<double> row{static_cast<double>(r), rec.t,
                              rec.field,              rec.drift_int,
                              rec.additive,           rec.additive_nn,
                              rec.remainder(),        rec.martingale,
                              rec.quad_var};
      for (double v : rec.additive_eps) row.push_back(v);
      csv.row(row);
    }

  // statистics at the final checkpoint
  RunningStat var_y0, mart_mean, mart_sq_minus_qv, qv_mean, mart_orth;
  double max_jump = 0.0;
  const std::size_t last = params.checkpoint_times.size() - 1;
  const std::size_t mid = last / 2;
  for (const auto& out : outcomes) {
    const auto& recs = out.dec.records;
    var_y0.add(recs[0].field * recs[0].field);
    mart_mean.add(recs[last].martingale);
    mart_sq_minus_qv.add(recs[last].martingale * recs[last].martingale -
                         recs[last].quad_var);
    qv_mean.add(recs[last].quad_var);
    mart_orth.add(recs[last].martingale * recs[mid].martingale -
                  recs[mid].martingale * recs[mid].martingale);
    max_jump = std::max(max_jump, out.max_jump);
  }

  const double t_final = params.checkpoint_times.back();
  const double var_target =
      suite_detail::torus_field_variance(f, params.n, params.macro_length);
  result.checks.add("var_Y0_vs_quarter_f_l2",
                    std::abs(var_y0.mean - var_target), 4.0 * var_y0.se(),
                    var_y0.se(),
                    std::abs(var_y0.mean - var_target) <= 4.0 * var_y0.se());
  const double qv_exact = suite_detail::exact_qv_mean(
      kernel, f, params.n, params.macro_length, t_final);
  result.checks.add("mean_qv_vs_exact_sum", std::abs(qv_mean.mean - qv_exact),
                    4.0 * qv_mean.se(), qv_mean.se(),
                    std::abs(qv_mean.mean - qv_exact) <= 4.0 * qv_mean.se());
  const double qv_limit =
      0.25 * mom.sigma2 * t_final * f.d1_norm_l2_sq();
  result.checks.add("mean_qv_vs_continuum", std::abs(qv_mean.mean / qv_limit - 1.0),
                    0.10, qv_mean.se(),
                    std::abs(qv_mean.mean / qv_limit - 1.0) <= 0.10);
  result.checks.add("mean_M_zero", std::abs(mart_mean.mean),
                    4.0 * mart_mean.se(), mart_mean.se(),
                    std::abs(mart_mean.mean) <= 4.0 * mart_mean.se());
  result.checks.add(
      "mean_M2_minus_qv_zero", std::abs(mart_sq_minus_qv.mean),
      4.0 * mart_sq_minus_qv.se(), mart_sq_minus_qv.se(),
      std::abs(mart_sq_minus_qv.mean) <= 4.0 * mart_sq_minus_qv.se());
  result.checks.add("martingale_orthogonal_increments",
                    std::abs(mart_orth.mean), 4.0 * mart_orth.se(),
                    mart_orth.se(),
                    std::abs(mart_orth.mean) <= 4.0 * mart_orth.se());
  const double jump_bound =
      2.0 * f.norm_sup() / std::sqrt(static_cast<double>(params.n));
  result.checks.add("max_jump_bound", max_jump, jump_bound, 0.0,
                    max_jump <= jump_bound + 1e-12);

  result.details["n"] = params.n;
  result.details["replicas"] = cfg.run.replicas;
  result.details["test_function"] = f.label();
  result.details["while_stationary"] = {{"var_y0", var_y0.mean},
                                        {"var_y0_target", var_target},
                                        {"qv_mean", qv_mean.mean},
                                        {"qv_exact", qv_exact},
                                        {"qv_continuum", qv_limit}};

  if (dump_events) {
    SimParams dump_params = params;
    const JumpDistribution pn = build_pn(kernel, params.n, params.b);
    Rng rng(params.seed, 0);
    const Configuration init =
        sample_bernoulli(params.sites(), 0.5, rng);
    const Trajectory traj = simulate(init, dump_params, kernel, pn, rng);
    std::filesystem::create_directories(cfg.run.out);
    std::ofstream nd(std::filesystem::path(cfg.run.out) /
                     "trajectory.ndjson");
    nd << nlohmann::json{{"type", "init"},
                         {"n", params.n},
                         {"L", params.macro_length},
                         {"sites", params.sites()},
                         {"occ", init.to_hex()}}
              .dump()
       << '\n';
    for (const auto& ev : traj.events)
      nd << nlohmann::json{{"t", ev.t}, {"x", ev.from}, {"y", ev.to}}.dump()
         << '\n';
  }
  return result;
}

// ---------------------------------------------------------------------------
// check-lemmas: exact identities, enumeration suites, appendix decays.

inline SuiteResult suite_check_lemmas(const ExperimentConfig& cfg) {
  SuiteResult result;
  const std::uint64_t seed = cfg.run.master_seed;

  // psi at block length 2 is exactly the centered nearest-neighbour product
  {
    double worst = 0.0;
    for (int bits = 0; bits < 4; ++bits) {
      Configuration c(2);
      if (bits & 1) c.place(0);
      if (bits & 2) c.place(1);
      const double lhs = psi(c, 0, 2).psi;
      const double rhs = c.centered(0) * c.centered(1);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
    result.checks.add("psi2_identity", worst, 1e-15, 0.0, worst <= 1e-15);
  }

  // centered block functional has exact mean zero under mu_{1/2}
  {
    double worst = 0.0;
    for (int len = 2; len <= 6; ++len) {
      double mean = 0.0;
      for (int c = 0; c < (1 << len); ++c) {
        int count = 0;
        for (int j = 0; j < len; ++j) count += (c >> j) & 1;
        mean += psi_value(count, len);
      }
      worst = std::max(worst, std::abs(mean) / (1 << len));
    }
    result.checks.add("psi_mean_zero", worst, 1e-14, 0.0, worst <= 1e-14);
  }

  // antisymmetry cancellation: sum p_n == sum s
  {
    double worst = 0.0;
    for (const RateKernel& k :
         {nearest_neighbor_kernel(), power_law_kernel(3.0, 64)})
      for (long n : {4L, 16L, 64L, 256L}) {
        const JumpDistribution pn = build_pn(k, n, cfg.sim.b);
        worst = std::max(worst, std::abs(pn.total_mass - k.mass()));
      }
    result.checks.add("pn_mass_equals_s_mass", worst, 1e-13, 0.0,
                      worst <= 1e-13);
  }

  // swap involution on every 8-site configuration
  {
    bool ok = true;
    for (int bits = 0; bits < 256 && ok; ++bits) {
      Configuration c(8);
      for (int j = 0; j < 8; ++j)
        if ((bits >> j) & 1) c.place(j);
      const std::string before = c.to_hex();
      const int count = c.particle_count();
      c.swap(2, 5);
      if (c.particle_count() != count || !c.consistent()) ok = false;
      c.swap(2, 5);
      if (c.to_hex() != before || !c.consistent()) ok = false;
    }
    result.checks.add("swap_involution", ok ? 0.0 : 1.0, 0.0, 0.0, ok);
  }

  // martingale-decomposition reconstruction on a real trajectory
  {
    const RateKernel kernel = power_law_kernel(3.0, 8);
    SimParams params;
    params.n = 32;
    params.macro_length = 4;
    params.b = 1.0;
    params.t_max = 0.5;
    params.seed = derive_seed(seed, 0x4d415254ull);
    params.checkpoint_times = {0.1, 0.2, 0.3, 0.4, 0.5};
    const JumpDistribution pn = build_pn(kernel, params.n, params.b);
    Rng rng(params.seed, 0);
    const Configuration init = sample_bernoulli(params.sites(), 0.5, rng);
    const Trajectory traj = simulate(init, params, kernel, pn, rng);
    const TestFunction f = TestFunction::gaussian(4.0, 2.0, 0.3);
    const DecomposeResult dec = decompose(traj, f, kernel, pn, params);

    // independent replay of the field at each checkpoint
    Configuration replay = traj.initial;
    std::size_t next_event = 0;
    const double factor = pn.gamma_n * std::sqrt(static_cast<double>(params.n)) /
                          params.b;
    const double y0 = fluctuation_field(replay, f, params.n);
    double residual = 0.0;
    for (const MartingaleRecord& rec : dec.records) {
      while (next_event < traj.events.size() &&
             traj.events[next_event].t <= rec.t) {
        replay.swap(traj.events[next_event].from, traj.events[next_event].to);
        ++next_event;
      }
      const double y_scratch = fluctuation_field(replay, f, params.n);
      const double m_scratch =
          y_scratch - y0 - rec.drift_int - factor * rec.additive;
      residual = std::max(residual, std::abs(m_scratch - rec.martingale));
    }
    result.checks.add("martdec_reconstruction", residual, 1e-10, 0.0,
                      residual <= 1e-10);
    result.details["martdec_events"] = traj.events.size();
  }

  // moving-particle comparison: exhaustive over bonds, random h
  {
    const int sites = 12;
    Rng rng(derive_seed(seed, 0x4d4f5645ull), 0);
    int violations = 0;
    double max_ratio = 0.0;  // empirical version of the 4z-3 factor
    const int trials = 1000;
    for (int trial = 0; trial < trials; ++trial) {
      const int window = 2 + static_cast<int>(rng.uniform_below(7));
      const int anchor = static_cast<int>(rng.uniform_below(sites));
      const EnumeratedFunction h(random_local_function(window, anchor, rng),
                                 sites);
      for (int x = 0; x < sites; ++x)
        for (int z = 1; z <= 5; ++z) {
          const MovingParticleCheck chk = check_moving_particle(h, x, z);
          if (!chk.holds) ++violations;
          max_ratio = std::max(max_ratio, chk.ratio / (4.0 * z - 3.0));
        }
    }
    result.checks.add("moving_particle_violations", violations, 0.0, 0.0,
                      violations == 0);
    result.details["moving_particle_worst_fraction_of_bound"] = max_ratio;
  }

  // Dirichlet-form equivalence, nearest-neighbour and power-law kernels
  {
    const RateKernel nn = nearest_neighbor_kernel();
    Rng rng(derive_seed(seed, 0x44495249ull), 0);
    const DirichletEquivalenceReport rep_nn =
        check_equiv_dirichlet(nn, 12, 1000, rng);
    result.checks.add("dirichlet_equiv_nn_violations", rep_nn.violations, 0.0,
                      0.0, rep_nn.violations == 0);
    // for the NN kernel D(h) = 2 <h,-Sh> identically
    const double nn_spread =
        std::max(std::abs(rep_nn.max_ratio - 2.0),
                 std::abs(rep_nn.min_ratio - 2.0));
    result.checks.add("dirichlet_nn_ratio_is_two", nn_spread, 1e-12, 0.0,
                      nn_spread <= 1e-12);

    const RateKernel pl = power_law_kernel(3.0, 4);
    const DirichletEquivalenceReport rep_pl =
        check_equiv_dirichlet(pl, 12, 1000, rng);
    result.checks.add("dirichlet_equiv_powerlaw_violations",
                      rep_pl.violations, 0.0, 0.0, rep_pl.violations == 0);
    result.details["dirichlet_powerlaw"] = {
        {"max_ratio", rep_pl.max_ratio},
        {"min_ratio", rep_pl.min_ratio},
        {"c1", moments(pl).c1},
        {"c2", moments(pl).c2}};
  }

  // appendix decay sequences for both kernel families
  {
    const TestFunction f = TestFunction::gaussian(4.0, 2.0, 0.3);
    const std::vector<long> ns{32, 64, 128, 256};
    CsvWriter csv(std::filesystem::path(cfg.run.out) /
                      "appendix_errors.csv",
                  {"kernel", "n", "sup_err", "mean_err", "energy_err",
                   "tilted_err"});
    int idx = 0;
    for (const RateKernel& kernel :
         {nearest_neighbor_kernel(), power_law_kernel(3.0, 16)}) {
      const std::string name = idx++ == 0 ? "nn" : "power_law";
      const LemmaReport rep = check_appendix_lemmas(f, kernel, ns, 4);
      for (std::size_t i = 0; i < rep.ns.size(); ++i)
        csv.raw_row({name, format_value(rep.ns[i]),
                     format_value(rep.sup_err[i]),
                     format_value(rep.mean_err[i]),
                     format_value(rep.energy_err[i]),
                     format_value(rep.tilted_err[i])});
      result.checks.add("appendix_decreasing_" + name,
                        rep.all_decreasing ? 0.0 : 1.0, 0.0, 0.0,
                        rep.all_decreasing);
      const double sigma2 = moments(kernel).sigma2;
      const double target = sigma2 * f.d1_norm_l2_sq();
      const double final_rel = rep.energy_err.back() / target;
      result.checks.add("appendix_energy_within_2pct_" + name, final_rel,
                        0.02, 0.0, final_rel <= 0.02);
      result.details["appendix_" + name] = {
          {"sup_exponent", rep.sup_exponent},
          {"mean_exponent", rep.mean_exponent},
          {"energy_exponent", rep.energy_exponent},
          {"tilted_exponent", rep.tilted_exponent}};
    }
  }

  return result;
}

// ---------------------------------------------------------------------------
// bg-principle: Monte-Carlo replacement estimates.

inline SuiteResult suite_bg_principle(const ExperimentConfig& cfg) {
  SuiteResult result;
  const RateKernel kernel = cfg.build_kernel();
  const std::vector<TestFunction> fs = cfg.build_test_functions();
  const TestFunction& f = fs.front();
  const int replicas = cfg.run.replicas;
  const int threads = cfg.run.threads;

  SimParams base;
  base.macro_length = cfg.sim.macro_length;
  base.b = cfg.sim.b;
  base.t_max = cfg.sim.t_max;
  base.seed = derive_seed(cfg.run.master_seed, 0x49425045ull);
  base.checkpoint_times = suite_detail::uniform_grid(cfg.sim.t_max, 16);

  // nearest-neighbour degeneracy: A == A-hat identically
  {
    RateKernel nn = nearest_neighbor_kernel();
    SimParams params = base;
    params.n = 16;
    params.seed = derive_seed(base.seed, 1);
    const auto outcomes =
        run_particle_ensemble(nn, params, f, {}, 4, threads);
    double worst = 0.0;
    for (const auto& out : outcomes)
      for (const auto& rec : out.dec.records)
        worst = std::max(worst, std::abs(rec.remainder()));
    result.checks.add("nn_remainder_identically_zero", worst, 1e-12, 0.0,
                      worst <= 1e-12);
  }

  // integration-by-parts error decay in n
  const IbpReport ibp =
      estimate_ibp_error(kernel, base, f, cfg.sim.n_list, replicas, threads);
  {
    CsvWriter csv(std::filesystem::path(cfg.run.out) / "ibp_error.csv",
                  {"n", "t", "r2_mean", "r2_se"});
    for (std::size_t i = 0; i < ibp.n_list.size(); ++i)
      for (std::size_t k = 0; k < ibp.checkpoint_times.size(); ++k)
        csv.row({static_cast<double>(ibp.n_list[i]), ibp.checkpoint_times[k],
                 ibp.r2_by_time[i][k], ibp.r2_by_time_se[i][k]});
    result.checks.add("ibp_decay_exponent", ibp.exponent, -0.6, 0.0,
                      ibp.exponent >= -1.4 && ibp.exponent <= -0.6);
    result.checks.add("ibp_monotone_in_t", ibp.monotone_in_t ? 0.0 : 1.0, 0.0,
                      0.0, ibp.monotone_in_t);
    result.details["ibp"] = {{"exponent", ibp.exponent},
                             {"r2", ibp.r2},
                             {"r2_se", ibp.r2_se}};
  }

  // second-order replacement at the largest n
  SimParams bg_params = base;
  bg_params.n = cfg.sim.n_list.back();
  bg_params.seed = derive_seed(base.seed, 2);
  std::vector<int> ells = cfg.fields.ell_list;
  if (ells.empty()) ells = {4, 8, 16, 32};
  std::vector<int> ells_with_two{2};
  ells_with_two.insert(ells_with_two.end(), ells.begin(), ells.end());

  DecomposeOptions options;
  options.block_lengths = ells_with_two;
  const auto outcomes = run_particle_ensemble(kernel, bg_params, f, options,
                                              replicas, threads);
  {
    // exactness at block length 2
    double worst = 0.0;
    for (const auto& out : outcomes)
      worst = std::max(worst, std::abs(out.dec.blocks[0].bg_error));
    result.checks.add("bg_block2_exact", worst, 1e-12, 0.0, worst <= 1e-12);

    double sum_wt2 = 0.0;
    for (int x = 0; x < bg_params.sites(); ++x) {
      const double w = tilted_grad(kernel, f, bg_params.n, x);
      sum_wt2 += w * w;
    }
    CsvWriter csv(std::filesystem::path(cfg.run.out) / "bg_error.csv",
                  {"ell", "bg_err2", "bg_err2_se", "gap2", "gap2_se",
                   "bg_constant"});
    std::vector<double> ls, err2s, gap2s;
    for (std::size_t i = 1; i < ells_with_two.size(); ++i) {
      RunningStat err, gap;
      for (const auto& out : outcomes) {
        err.add(out.dec.blocks[i].bg_error * out.dec.blocks[i].bg_error);
        gap.add(out.dec.blocks[i].psi_gap * out.dec.blocks[i].psi_gap);
      }
      const double dn = static_cast<double>(bg_params.n);
      const double c = err.mean * dn * dn /
                       (ells_with_two[i] * bg_params.t_max * sum_wt2);
      csv.row({static_cast<double>(ells_with_two[i]), err.mean, err.se(),
               gap.mean, gap.se(), c});
      ls.push_back(static_cast<double>(ells_with_two[i]));
      err2s.push_back(err.mean);
      gap2s.push_back(gap.mean);
    }
    const double bg_exp = fit_exponent(ls, err2s);
    const double gap_exp = fit_exponent(ls, gap2s);
    result.checks.add("bg_growth_at_most_linear", bg_exp, 1.2, 0.0,
                      bg_exp <= 1.2);
    result.checks.add("psi_gap_exponent", gap_exp, -1.5, 0.0,
                      gap_exp >= -2.5 && gap_exp <= -1.5);
    result.details["bg"] = {{"ells", ells},
                            {"bg_exponent", bg_exp},
                            {"gap_exponent", gap_exp}};
  }

  // time regularity of A-hat over dyadic gaps of the checkpoint grid
  {
    const TimeRegularityReport reg = check_time_regularity(
        outcomes, bg_params.checkpoint_times, {1, 2, 4, 8});
    CsvWriter csv(std::filesystem::path(cfg.run.out) /
                      "time_regularity.csv",
                  {"gap", "inc2", "inc2_se"});
    for (std::size_t i = 0; i < reg.gaps.size(); ++i)
      csv.row({reg.gaps[i], reg.inc2[i], reg.inc2_se[i]});
    result.checks.add("ahat_increment_exponent", reg.exponent, 1.2, 0.0,
                      reg.exponent >= 1.2);
    result.checks.add("ahat_increments_stationary", reg.stationarity_z, 4.0,
                      0.0, reg.stationarity_z <= 4.0);
    result.details["time_regularity"] = {{"exponent", reg.exponent},
                                         {"stationarity_z",
                                          reg.stationarity_z}};
  }

  // time reversal: forward statistics match the reversed-kernel chain
  {
    SimParams params = base;
    params.n = cfg.sim.n_list.size() > 1 ? cfg.sim.n_list[1]
                                         : cfg.sim.n_list.back();
    params.seed = derive_seed(base.seed, 3);
    params.checkpoint_times = suite_detail::uniform_grid(cfg.sim.t_max, 4);
    const ReversalReport rev =
        reverse_time_law_check(kernel, params, f, replicas, threads);
    result.checks.add("reversal_covariance_match", rev.max_z, 4.0, 0.0,
                      rev.max_z <= 4.0);
    const double var_gap =
        std::abs(rev.var_forward - rev.var_reversed) /
        std::sqrt(rev.var_forward_se * rev.var_forward_se +
                  rev.var_reversed_se * rev.var_reversed_se);
    result.checks.add("reversal_variance_match", var_gap, 4.0, 0.0,
                      var_gap <= 4.0);
    const KernelMoments fwd_m = moments(kernel);
    const KernelMoments rev_m = moments(reversed(kernel));
    result.checks.add("reversal_flips_m",
                      std::abs(fwd_m.m + rev_m.m), 1e-14, 0.0,
                      std::abs(fwd_m.m + rev_m.m) <= 1e-14);
  }

  return result;
}

// ---------------------------------------------------------------------------
// sbe: reference solver signatures.

inline SuiteResult suite_sbe(const ExperimentConfig& cfg) {
  SuiteResult result;
  double sigma2 = 1.0, m = 1.0;
  if (cfg.has_kernel) {
    const KernelMoments mom = moments(cfg.build_kernel());
    sigma2 = mom.sigma2;
    m = mom.m;
  }
  if (cfg.sbe.sigma2) sigma2 = *cfg.sbe.sigma2;
  if (cfg.sbe.m) m = *cfg.sbe.m;
  const double b = cfg.sbe.b ? *cfg.sbe.b : cfg.sim.b;

  const double length = static_cast<double>(cfg.sim.macro_length);
  const int cells = cfg.sbe.cells;
  const double dx = length / cells;
  const TestFunction f = cfg.build_test_functions().front();

  SolverParams sp;
  sp.dt = cfg.sbe.dt;
  sp.t_max = cfg.sbe.t_max;
  sp.scheme = cfg.sbe.scheme;
  sp.dealias = cfg.sbe.dealias;
  std::vector<double> eps_list = cfg.sbe.eps_list;
  if (eps_list.empty()) eps_list = {0.25, 0.125, 0.0625, 0.03125};

  const int replicas = cfg.run.replicas;
  const int total_steps = static_cast<int>(std::lround(sp.t_max / sp.dt));
  const int spectrum_every = std::max(1, total_steps / 20);
  const int checkpoint_every = std::max(1, total_steps / 32);

  struct SbeReplica {
    std::vector<double> spectrum_mean;
    int spectrum_samples = 0;
    double max_mass_drift = 0.0;
    double mart_residual = 0.0;       // Y_t(f)-Y_0(f)-drift-bm B
    std::vector<double> burgers;      // per eps at t_max
    std::vector<double> drift_path;   // bm B(eps_min) at checkpoints
    std::vector<double> field_path;   // Y(f) at checkpoints
  };

  const std::uint64_t seed = derive_seed(cfg.run.master_seed, 0x53424555ull);
  auto run_many = [&](double bval, std::uint64_t tag) {
    return run_replicas(replicas, cfg.run.threads, [&, bval, tag](int rep) {
      Rng rng(derive_seed(seed, tag), static_cast<std::uint64_t>(rep));
      SbeSolver solver(cells, length, sigma2, bval, m, sp);
      GridField field = sample_stationary(cells, dx, rng);
      BurgersAccumulator burgers(f, cells, length, eps_list);
      SbeReplica out;
      out.spectrum_mean.assign(static_cast<std::size_t>(cells / 2 + 1), 0.0);
      const double y0 = field.pair(f);
      double drift = 0.0;
      const double mass0 = [&] {
        double s = 0.0;
        for (double v : field.values) s += v;
        return s;
      }();
      auto record_spectrum = [&] {
        const std::vector<double> spec = solver.spectrum(field);
        for (std::size_t q = 0; q < spec.size(); ++q)
          out.spectrum_mean[q] += spec[q];
        ++out.spectrum_samples;
      };
      record_spectrum();
      out.field_path.push_back(y0);
      out.drift_path.push_back(0.0);
      double prev_mass = mass0;
      for (int step = 1; step <= total_steps; ++step) {
        // left-point quadrature of the integral terms over this step
        double gsum = 0.0;
        for (int j = 0; j < cells; ++j)
          gsum += field.values[static_cast<std::size_t>(j)] *
                  0.5 * sigma2 * f.d2(j * dx);
        drift += gsum * dx * sp.dt;
        burgers.add(field.values, sp.dt);
        solver.step(field, rng);
        double mass = 0.0;
        for (double v : field.values) mass += v;
        out.max_mass_drift =
            std::max(out.max_mass_drift, std::abs(mass - prev_mass));
        prev_mass = mass;
        if (step % spectrum_every == 0) record_spectrum();
        if (step % checkpoint_every == 0) {
          out.field_path.push_back(field.pair(f));
          out.drift_path.push_back(bval * m * burgers.values().back());
        }
      }
      out.burgers = burgers.values();
      out.mart_residual = field.pair(f) - y0 - drift -
                          bval * m * burgers.values().back();
      return out;
    });
  };

  const int cutoff = cells / 3;
  const double target = static_cast<double>(cells) / (4.0 * dx);
  CsvWriter spec_csv(std::filesystem::path(cfg.run.out) / "sbe_spectrum.csv",
                     {"b", "mode", "variance_ratio"});

  for (double bval : {0.0, b}) {
    const std::string tagname = bval == 0.0 ? "b0" : "b";
    const auto reps = run_many(bval, bval == 0.0 ? 10 : 11);

    // per-mode variance below the dealias cutoff
    double worst_mode_dev = 0.0;
    for (int q = 1; q <= cutoff; ++q) {
      double total = 0.0;
      long count = 0;
      for (const SbeReplica& r : reps) {
        total += r.spectrum_mean[static_cast<std::size_t>(q)];
        count += r.spectrum_samples;
      }
      const double ratio = total / static_cast<double>(count) / target;
      spec_csv.row({bval, static_cast<double>(q), ratio});
      worst_mode_dev = std::max(worst_mode_dev, std::abs(ratio - 1.0));
    }
    result.checks.add("sbe_mode_variance_" + tagname, worst_mode_dev, 0.10,
                      0.0, worst_mode_dev <= 0.10);

    double drift_worst = 0.0;
    for (const SbeReplica& r : reps)
      drift_worst = std::max(drift_worst, r.max_mass_drift);
    result.checks.add("sbe_mass_conservation_" + tagname, drift_worst, 1e-10,
                      0.0, drift_worst <= 1e-10);

    RunningStat mart_var;
    for (const SbeReplica& r : reps)
      mart_var.add(r.mart_residual * r.mart_residual);
    const double mart_target =
        0.25 * sigma2 * sp.t_max * f.d1_norm_l2_sq();
    const double se = mart_var.se();
    result.checks.add("sbe_martingale_variance_" + tagname,
                      std::abs(mart_var.mean - mart_target), 4.0 * se, se,
                      std::abs(mart_var.mean - mart_target) <= 4.0 * se);

    if (bval != 0.0) {
      // Cauchy behaviour of the mollified functional across eps halvings
      std::vector<double> diff_means;
      for (std::size_t e = 0; e + 1 < eps_list.size(); ++e) {
        RunningStat diff;
        for (const SbeReplica& r : reps)
          diff.add(std::abs(r.burgers[e] - r.burgers[e + 1]));
        diff_means.push_back(diff.mean);
      }
      bool shrinking = true;
      for (std::size_t e = 1; e < diff_means.size(); ++e)
        if (!(diff_means[e] < diff_means[e - 1])) shrinking = false;
      result.checks.add("sbe_burgers_cauchy", shrinking ? 0.0 : 1.0, 0.0,
                        0.0, shrinking);
      result.details["burgers_cauchy_diffs"] = diff_means;

      // zero-quadratic-variation signature of the drift path
      std::vector<double> deltas, sums;
      for (int stride : {1, 2, 4, 8}) {
        RunningStat qv;
        for (const SbeReplica& r : reps) {
          double acc = 0.0;
          int terms = 0;
          for (std::size_t k = 0; k + stride < r.drift_path.size();
               k += stride) {
            const double d =
                r.drift_path[k + stride] - r.drift_path[k];
            acc += d * d;
            ++terms;
          }
          const double delta = sp.t_max * stride / 32.0;
          qv.add(acc / (terms * delta));
        }
        deltas.push_back(sp.t_max * stride / 32.0);
        sums.push_back(qv.mean);
      }
      const double zqv_exp = fit_exponent(deltas, sums);
      result.checks.add("sbe_zero_qv_exponent", zqv_exp, 0.25, 0.0,
                        zqv_exp >= 0.25 && zqv_exp <= 0.85);
      result.details["zero_qv"] = {{"deltas", deltas},
                                   {"sums", sums},
                                   {"exponent", zqv_exp}};
    } else {
      // closed-form OU covariance across a macroscopic time gap
      RunningStat cov;
      for (const SbeReplica& r : reps)
        cov.add(r.field_path.front() * r.field_path.back());
      const double target_cov = ou_covariance(f, f, sp.t_max, sigma2);
      result.checks.add("sbe_ou_covariance",
                        std::abs(cov.mean - target_cov), 4.0 * cov.se(),
                        cov.se(),
                        std::abs(cov.mean - target_cov) <= 4.0 * cov.se());
    }
  }
  result.details["cells"] = cells;
  result.details["dt"] = sp.dt;
  result.details["sigma2"] = sigma2;
  result.details["m"] = m;
  return result;
}

// ---------------------------------------------------------------------------
// compare: particle field statistics against the limit benchmarks.

inline SuiteResult suite_compare(const ExperimentConfig& cfg) {
  SuiteResult result;
  const RateKernel kernel = cfg.build_kernel();
  const KernelMoments mom = moments(kernel);
  const TestFunction f = cfg.build_test_functions().front();

  CsvWriter csv(std::filesystem::path(cfg.run.out) / "compare.csv",
                {"n", "t", "cov_particle", "cov_particle_se", "benchmark"});

  for (long n : cfg.sim.n_list) {
    SimParams params;
    params.n = n;
    params.macro_length = cfg.sim.macro_length;
    params.b = cfg.sim.b;
    params.t_max = cfg.compare.t_list.back();
    params.seed = derive_seed(cfg.run.master_seed,
                              0x434d5052ull + static_cast<std::uint64_t>(n));
    params.checkpoint_times = cfg.compare.t_list;
    const auto samples =
        field_samples(kernel, params, f, cfg.run.replicas, cfg.run.threads);

    RunningStat var0;
    for (const auto& path : samples) var0.add(path[0] * path[0]);
    const double var_target =
        suite_detail::torus_field_variance(f, n, params.macro_length);
    result.checks.add(
        "equal_time_variance_n" + std::to_string(n),
        std::abs(var0.mean - var_target), 4.0 * var0.se(), var0.se(),
        std::abs(var0.mean - var_target) <= 4.0 * var0.se());

    for (std::size_t k = 0; k < cfg.compare.t_list.size(); ++k) {
      RunningStat cov;
      for (const auto& path : samples) cov.add(path[0] * path[k + 1]);
      const double t = cfg.compare.t_list[k];
      double benchmark = std::numeric_limits<double>::quiet_NaN();
      if (cfg.sim.b == 0.0) {
        benchmark = ou_covariance(f, f, t, mom.sigma2);
        result.checks.add(
            "ou_covariance_n" + std::to_string(n) + "_t" + format_value(t),
            std::abs(cov.mean - benchmark), 4.0 * cov.se(), cov.se(),
            std::abs(cov.mean - benchmark) <= 4.0 * cov.se());
      }
      csv.row({static_cast<double>(n), t, cov.mean, cov.se(), benchmark});
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

struct RunOptions {
  std::string json_summary;
  bool dump_events = false;
};

inline int run_suite(const ExperimentConfig& cfg, const std::string& suite,
                     const RunOptions& options, std::ostream& out) {
  SuiteResult result;
  if (suite == "validate-kernel")
    result = suite_validate_kernel(cfg);
  else if (suite == "simulate")
    result = suite_simulate(cfg, options.dump_events);
  else if (suite == "check-lemmas")
    result = suite_check_lemmas(cfg);
  else if (suite == "bg-principle")
    result = suite_bg_principle(cfg);
  else if (suite == "sbe")
    result = suite_sbe(cfg);
  else if (suite == "compare")
    result = suite_compare(cfg);
  else
    throw ConfigError("suite", "unknown suite '" + suite + "'");

  for (const Check& c : result.checks.checks)
    out << (c.pass ? "PASS " : "FAIL ") << c.name << ": value="
        << c.value << " bound=" << c.bound
        << (c.se > 0.0 ? " se=" + format_value(c.se) : "") << '\n';

  nlohmann::json summary{{"suite", suite},
                         {"checks", result.checks.to_json()},
                         {"details", result.details},
                         {"pass", result.checks.all_pass()}};
  const std::string summary_path =
      options.json_summary.empty()
          ? (std::filesystem::path(cfg.run.out) / (suite + "_summary.json"))
                .string()
          : options.json_summary;
  write_json(summary_path, summary);
  out << (result.checks.all_pass() ? "SUITE PASS: " : "SUITE FAIL: ") << suite
      << " (" << summary_path << ")\n";
  return result.checks.all_pass() ? 0 : 1;
}

}  // namespace exclab
