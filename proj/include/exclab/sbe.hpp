#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "exclab/rng.hpp"
#include "exclab/testfn.hpp"

namespace exclab {

namespace detail {
// FFTW planning is not thread-safe; execution is.
inline std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

// Discretized field on the torus of length `length` with M cells.  The
// stationary target law is i.i.d. centered Gaussian cells of variance
// 1/(4 dx), under which Y(f) ~ sum_j Y_j f(x_j) dx has variance
// (1/4)|f|^2_{L2}.
struct GridField {
  int cells = 0;
  double dx = 0.0;
  std::vector<double> values;

  double pair(const TestFunction& f) const {
    double sum = 0.0;
    for (int j = 0; j < cells; ++j)
      sum += values[static_cast<std::size_t>(j)] * f(j * dx);
    return sum * dx;
  }
};

inline GridField sample_stationary(int cells, double dx, Rng& rng) {
  if (cells < 8) throw std::invalid_argument("grid needs at least 8 cells");
  GridField field;
  field.cells = cells;
  field.dx = dx;
  field.values.resize(static_cast<std::size_t>(cells));
  const double std_dev = std::sqrt(1.0 / (4.0 * dx));
  for (double& v : field.values) v = std_dev * rng.normal();
  return field;
}

struct SolverParams {
  double dt = 1e-4;
  double t_max = 1.0;
  std::uint64_t seed = 0;
  std::string scheme = "spectral";  // "spectral" | "euler"
  bool dealias = true;
};

// Reference solver for
//   dY = (sigma^2/2) Lap Y dt + b m grad(Y^2) dt + (sigma/2) grad dxi.
// The linear part is integrated exactly in law per Fourier mode (an OU
// update whose stationary variance is the white-noise target, with the
// zero mode noiseless and hence conserved).  The quadratic term uses the
// divergence form
//   N_j = b m (Y_{j+1}^2 - Y_{j-1}^2 + Y_j (Y_{j+1} - Y_{j-1})) / (6 dx),
// which telescopes to zero mean and leaves the discrete Gaussian measure
// invariant, advanced by explicit Euler splitting.  The top third of the
// nonlinearity's modes is zeroed unless dealiasing is disabled.
class SbeSolver {
 public:
  SbeSolver(int cells, double length, double sigma2, double b, double m,
            const SolverParams& params)
      : cells_(cells),
        length_(length),
        dx_(length / cells),
        sigma2_(sigma2),
        bm_(b * m),
        params_(params) {
    if (params.scheme != "spectral" && params.scheme != "euler")
      throw std::invalid_argument("unknown scheme: " + params.scheme);
    if (params.scheme == "euler" &&
        params.dt > dx_ * dx_ / (2.0 * sigma2) * (1.0 + 1e-12))
      throw std::invalid_argument(
          "Instability: explicit scheme needs dt <= dx^2/(2 sigma^2)");
    const int spec = cells_ / 2 + 1;
    decay_.resize(static_cast<std::size_t>(spec));
    noise_std_.resize(static_cast<std::size_t>(spec));
    const double target = stationary_mode_variance();
    for (int q = 0; q < spec; ++q) {
      const double k = 2.0 * M_PI * q / length_;
      const double alpha = std::exp(-0.5 * sigma2_ * k * k * params_.dt);
      decay_[static_cast<std::size_t>(q)] = alpha;
      noise_std_[static_cast<std::size_t>(q)] =
          q == 0 ? 0.0 : std::sqrt((1.0 - alpha * alpha) * target);
    }
    real_ = fftw_alloc_real(static_cast<std::size_t>(cells_));
    spec_ = fftw_alloc_complex(static_cast<std::size_t>(spec));
    nl_real_ = fftw_alloc_real(static_cast<std::size_t>(cells_));
    nl_spec_ = fftw_alloc_complex(static_cast<std::size_t>(spec));
    {
      std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
      fwd_ = fftw_plan_dft_r2c_1d(cells_, real_, spec_, FFTW_ESTIMATE);
      bwd_ = fftw_plan_dft_c2r_1d(cells_, spec_, real_, FFTW_ESTIMATE);
      nl_fwd_ = fftw_plan_dft_r2c_1d(cells_, nl_real_, nl_spec_,
                                     FFTW_ESTIMATE);
    }
  }

  ~SbeSolver() {
    std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_destroy_plan(nl_fwd_);
    fftw_free(real_);
    fftw_free(spec_);
    fftw_free(nl_real_);
    fftw_free(nl_spec_);
  }

  SbeSolver(const SbeSolver&) = delete;
  SbeSolver& operator=(const SbeSolver&) = delete;

  int cells() const { return cells_; }
  double dx() const { return dx_; }
  double dt() const { return params_.dt; }

  // E|Yhat_q|^2 at stationarity (unnormalized DFT convention).
  double stationary_mode_variance() const {
    return static_cast<double>(cells_) / (4.0 * dx_);
  }

  // Largest mode index untouched by the dealias filter.
  int dealias_cutoff() const { return cells_ / 3; }

  void step(GridField& field, Rng& rng) {
    if (params_.scheme == "spectral")
      step_spectral(field, rng);
    else
      step_euler(field, rng);
    for (double v : field.values)
      if (!std::isfinite(v))
        throw std::runtime_error("Instability: field diverged");
  }

  // |Yhat_q|^2 for q = 0..M/2.
  std::vector<double> spectrum(const GridField& field) {
    for (int j = 0; j < cells_; ++j)
      real_[j] = field.values[static_cast<std::size_t>(j)];
    fftw_execute(fwd_);
    std::vector<double> out(static_cast<std::size_t>(cells_ / 2 + 1));
    for (std::size_t q = 0; q < out.size(); ++q)
      out[q] = spec_[q][0] * spec_[q][0] + spec_[q][1] * spec_[q][1];
    return out;
  }

 private:
  void nonlinearity(const std::vector<double>& y) {
    const double scale = bm_ / (6.0 * dx_);
    for (int j = 0; j < cells_; ++j) {
      const double yl = y[static_cast<std::size_t>(j == 0 ? cells_ - 1 : j - 1)];
      const double yc = y[static_cast<std::size_t>(j)];
      const double yr = y[static_cast<std::size_t>(j == cells_ - 1 ? 0 : j + 1)];
      nl_real_[j] = scale * (yr * yr - yl * yl + yc * (yr - yl));
    }
  }

  void step_spectral(GridField& field, Rng& rng) {
    const int spec = cells_ / 2 + 1;
    nonlinearity(field.values);
    fftw_execute(nl_fwd_);
    for (int j = 0; j < cells_; ++j)
      real_[j] = field.values[static_cast<std::size_t>(j)];
    fftw_execute(fwd_);
    const int cutoff = dealias_cutoff();
    for (int q = 0; q < spec; ++q) {
      double nre = nl_spec_[q][0], nim = nl_spec_[q][1];
      if (params_.dealias && q > cutoff) nre = nim = 0.0;
      const double alpha = decay_[static_cast<std::size_t>(q)];
      double re = alpha * (spec_[q][0] + params_.dt * nre);
      double im = alpha * (spec_[q][1] + params_.dt * nim);
      const double s = noise_std_[static_cast<std::size_t>(q)];
      if (q > 0 && q < cells_ - q) {  // paired complex mode
        re += s * M_SQRT1_2 * rng.normal();
        im += s * M_SQRT1_2 * rng.normal();
      } else if (q > 0) {  // Nyquist, real
        re += s * rng.normal();
        im = 0.0;
      }
      spec_[q][0] = re;
      spec_[q][1] = im;
    }
    fftw_execute(bwd_);
    const double inv = 1.0 / cells_;
    for (int j = 0; j < cells_; ++j)
      field.values[static_cast<std::size_t>(j)] = real_[j] * inv;
  }

  // Fully explicit scheme: finite-difference Laplacian and a conservative
  // gradient of cell-wise white noise; fluctuation-dissipation matched to
  // the same 1/(4dx) cell variance.
  void step_euler(GridField& field, Rng& rng) {
    nonlinearity(field.values);
    std::vector<double>& y = field.values;
    noise_buf_.resize(static_cast<std::size_t>(cells_));
    for (double& g : noise_buf_) g = rng.normal();
    next_buf_.resize(static_cast<std::size_t>(cells_));
    const double diff = 0.5 * sigma2_ * params_.dt / (dx_ * dx_);
    const double namp =
        0.5 * std::sqrt(sigma2_) * std::sqrt(params_.dt / (dx_ * dx_ * dx_));
    for (int j = 0; j < cells_; ++j) {
      const int l = j == 0 ? cells_ - 1 : j - 1;
      const int r = j == cells_ - 1 ? 0 : j + 1;
      next_buf_[static_cast<std::size_t>(j)] =
          y[static_cast<std::size_t>(j)] +
          diff * (y[static_cast<std::size_t>(r)] -
                  2.0 * y[static_cast<std::size_t>(j)] +
                  y[static_cast<std::size_t>(l)]) +
          params_.dt * nl_real_[j] +
          namp * (noise_buf_[static_cast<std::size_t>(r)] -
                  noise_buf_[static_cast<std::size_t>(j)]);
    }
    y.swap(next_buf_);
  }

  int cells_;
  double length_, dx_, sigma2_, bm_;
  SolverParams params_;
  std::vector<double> decay_, noise_std_;
  std::vector<double> noise_buf_, next_buf_;
  double* real_ = nullptr;
  double* nl_real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_complex* nl_spec_ = nullptr;
  fftw_plan fwd_{}, bwd_{}, nl_fwd_{};
};

// Closed-form stationary covariance of the Ornstein-Uhlenbeck field:
//   E[Y_t(f) Y_0(g)] = (1/4) <f, exp(t sigma^2/2 Lap) g>_{L2([0,L))},
// evaluated by per-mode multiplication with exp(-sigma^2 k^2 t / 2) on a
// fine quadrature grid.
inline double ou_covariance(const TestFunction& f, const TestFunction& g,
                            double t, double sigma2) {
  const double length = f.period();
  const int grid = 1 << 14;
  const int spec = grid / 2 + 1;
  double* in = fftw_alloc_real(static_cast<std::size_t>(grid));
  fftw_complex* fs = fftw_alloc_complex(static_cast<std::size_t>(spec));
  fftw_complex* gs = fftw_alloc_complex(static_cast<std::size_t>(spec));
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
    plan = fftw_plan_dft_r2c_1d(grid, in, fs, FFTW_ESTIMATE);
  }
  const double h = length / grid;
  for (int j = 0; j < grid; ++j) in[j] = f(j * h);
  fftw_execute(plan);
  for (int q = 0; q < spec; ++q) {
    gs[q][0] = fs[q][0];
    gs[q][1] = fs[q][1];
  }
  if (&f != &g) {
    for (int j = 0; j < grid; ++j) in[j] = g(j * h);
    fftw_execute_dft_r2c(plan, in, gs);
  }
  double sum = 0.0;
  for (int q = 0; q < spec; ++q) {
    const double k = 2.0 * M_PI * q / length;
    const double weight = (q == 0 || q == grid / 2) ? 1.0 : 2.0;
    const double dot = fs[q][0] * gs[q][0] + fs[q][1] * gs[q][1];
    sum += weight * dot * std::exp(-0.5 * sigma2 * k * k * t);
  }
  {
    std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(fs);
  fftw_free(gs);
  // DFT coefficients of samples approximate grid * Fourier coefficients,
  // and <f, P_t g> = L sum_q c_f conj(c_g) exp(...)
  const double norm = length / (static_cast<double>(grid) *
                                static_cast<double>(grid));
  return 0.25 * sum * norm;
}

// Time quadrature of the mollified-square functional
//   B_t(f; eps) = int_0^t sum_j (window average of Y over eps)_j^2 f'(x_j) dx ds
// with the one-sided window iota_eps = eps^{-1} 1_{[0,eps)}.
class BurgersAccumulator {
 public:
  BurgersAccumulator(const TestFunction& f, int cells, double length,
                     std::vector<double> eps_list)
      : cells_(cells), dx_(length / cells), eps_list_(std::move(eps_list)) {
    fp_.resize(static_cast<std::size_t>(cells));
    for (int j = 0; j < cells; ++j)
      fp_[static_cast<std::size_t>(j)] = f.d1(j * dx_);
    for (double eps : eps_list_)
      windows_.push_back(std::max(1, static_cast<int>(std::lround(eps / dx_))));
    values_.assign(eps_list_.size(), 0.0);
  }

  void add(const std::vector<double>& y, double dt) {
    for (std::size_t e = 0; e < windows_.size(); ++e) {
      const int w = windows_[e];
      double window_sum = 0.0;
      for (int j = 0; j < w; ++j)
        window_sum += y[static_cast<std::size_t>(j % cells_)];
      double total = 0.0;
      for (int j = 0; j < cells_; ++j) {
        const double avg = window_sum / w;
        total += avg * avg * fp_[static_cast<std::size_t>(j)];
        window_sum -= y[static_cast<std::size_t>(j)];
        window_sum += y[static_cast<std::size_t>((j + w) % cells_)];
      }
      values_[e] += total * dx_ * dt;
    }
  }

  const std::vector<double>& eps_list() const { return eps_list_; }
  const std::vector<double>& values() const { return values_; }

 private:
  int cells_;
  double dx_;
  std::vector<double> eps_list_;
  std::vector<int> windows_;
  std::vector<double> fp_;
  std::vector<double> values_;
};

// Mollified-square functional over a stored history of solver states.
inline std::vector<double> burgers_functional(
    const std::vector<GridField>& history, const TestFunction& f,
    const std::vector<double>& eps_list, double dt) {
  if (history.empty()) return std::vector<double>(eps_list.size(), 0.0);
  BurgersAccumulator acc(f, history.front().cells,
                         history.front().cells * history.front().dx,
                         eps_list);
  for (const GridField& field : history) acc.add(field.values, dt);
  return acc.values();
}

}  // namespace exclab
