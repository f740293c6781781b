#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace exclab {

// Smooth test function on the macroscopic torus [0, L), obtained by
// wrapping a rapidly decaying function as sum_k f(u + kL).  The number of
// images is fixed at construction so that the discarded tail contributes
// below 1e-12 to f and its first three derivatives.  L2 norms are the
// periodic-trapezoid values (spectrally exact for smooth periodic
// integrands); sup norms come from a dense scan refined locally.
class TestFunction {
 public:
  enum class Family { Gaussian, Hermite };

  static TestFunction gaussian(double period, double center, double width) {
    TestFunction f;
    f.family_ = Family::Gaussian;
    f.period_ = period;
    f.center_ = center;
    f.scale_ = width;
    // prefactor polynomials of exp(-t^2/2): d^k/dt^k = P_k(t) exp(-t^2/2)
    f.poly_ = {{1.0}};
    f.finish_setup();
    return f;
  }

  static TestFunction hermite(double period, double center, double scale,
                              int order) {
    if (order < 0 || order > 12)
      throw std::invalid_argument("hermite order out of range");
    TestFunction f;
    f.family_ = Family::Hermite;
    f.order_ = order;
    f.period_ = period;
    f.center_ = center;
    f.scale_ = scale;
    // physicists' Hermite polynomial H_order
    std::vector<double> hm1{1.0}, h{1.0};
    if (order >= 1) h = {0.0, 2.0};
    for (int k = 1; k < order; ++k) {
      std::vector<double> next(static_cast<std::size_t>(k) + 2, 0.0);
      for (std::size_t i = 0; i < h.size(); ++i) next[i + 1] += 2.0 * h[i];
      for (std::size_t i = 0; i < hm1.size(); ++i)
        next[i] -= 2.0 * static_cast<double>(k) * hm1[i];
      hm1 = h;
      h = next;
    }
    f.poly_ = {h};
    f.finish_setup();
    return f;
  }

  double period() const { return period_; }
  const std::string& label() const { return label_; }

  double operator()(double u) const { return evaluate(u, 0); }
  double d1(double u) const { return evaluate(u, 1); }
  double d2(double u) const { return evaluate(u, 2); }
  double d3(double u) const { return evaluate(u, 3); }

  double norm_sup() const { return norm_sup_; }
  double d2_norm_sup() const { return d2_norm_sup_; }
  double norm_l2_sq() const { return norm_l2_sq_; }
  double d1_norm_l2_sq() const { return d1_norm_l2_sq_; }

  // Independent re-quadrature of the stored L2 norms (Simpson at a
  // coprime resolution); used by the consistency tests.
  double requadrature_l2_sq(int derivative) const {
    const int n = 77763;  // odd, not a power of two
    const double h = period_ / n;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const double a = i * h, b = (i + 1) * h;
      const double fa = evaluate(a, derivative), fb = evaluate(b, derivative),
                   fm = evaluate(0.5 * (a + b), derivative);
      total += (fa * fa + 4.0 * fm * fm + fb * fb) * h / 6.0;
    }
    return total;
  }

 private:
  // Periodized evaluation of the derivative of given order.
  double evaluate(double u, int order) const {
    double total = 0.0;
    const double base = u - std::floor(u / period_) * period_;
    for (int k = -images_; k <= images_; ++k)
      total += raw(base + static_cast<double>(k) * period_, order);
    return total;
  }

  // Whole-line evaluation: P_order((u-c)/w) exp(-t^2/2) / w^order.
  double raw(double u, int order) const {
    const double t = (u - center_) / scale_;
    const std::vector<double>& p = poly_[static_cast<std::size_t>(order)];
    double value = 0.0;
    for (std::size_t i = p.size(); i-- > 0;) value = value * t + p[i];
    return value * std::exp(-0.5 * t * t) /
           std::pow(scale_, static_cast<double>(order));
  }

  void finish_setup() {
    // d/dt (P e^{-t^2/2}) = (P' - t P) e^{-t^2/2}
    for (int k = 0; k < 3; ++k) {
      const std::vector<double>& p = poly_.back();
      std::vector<double> next(p.size() + 1, 0.0);
      for (std::size_t i = 1; i < p.size(); ++i)
        next[i - 1] += static_cast<double>(i) * p[i];
      for (std::size_t i = 0; i < p.size(); ++i) next[i + 1] -= p[i];
      poly_.push_back(next);
    }
    // image count: grow until the outermost image is below 1e-13 on the
    // whole fundamental domain, for f through f'''
    images_ = 1;
    while (images_ < 64) {
      double worst = 0.0;
      for (int order = 0; order <= 3; ++order) {
        const double edge = std::max(
            std::abs(raw(-static_cast<double>(images_) * period_, order)),
            std::abs(raw((static_cast<double>(images_) + 1.0) * period_,
                         order)));
        worst = std::max(worst, edge);
      }
      if (worst < 1e-13) break;
      ++images_;
    }
    compute_norms();
    label_ = family_ == Family::Gaussian
                 ? "gaussian(c=" + trim(center_) + ",w=" + trim(scale_) + ")"
                 : "hermite(k=" + std::to_string(order_) + ",c=" +
                       trim(center_) + ",w=" + trim(scale_) + ")";
  }

  static std::string trim(double v) {
    std::string s = std::to_string(v);
    while (s.size() > 1 && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  }

  void compute_norms() {
    const int n = 1 << 16;
    const double h = period_ / n;
    double l2 = 0.0, d1l2 = 0.0, sup = 0.0, d2sup = 0.0;
    int arg_sup = 0, arg_d2sup = 0;
    for (int i = 0; i < n; ++i) {
      const double u = i * h;
      const double f0 = evaluate(u, 0);
      const double f1 = evaluate(u, 1);
      const double f2 = evaluate(u, 2);
      l2 += f0 * f0;
      d1l2 += f1 * f1;
      if (std::abs(f0) > sup) {
        sup = std::abs(f0);
        arg_sup = i;
      }
      if (std::abs(f2) > d2sup) {
        d2sup = std::abs(f2);
        arg_d2sup = i;
      }
    }
    norm_l2_sq_ = l2 * h;
    d1_norm_l2_sq_ = d1l2 * h;
    norm_sup_ = refine_sup(arg_sup * h, h, 0);
    d2_norm_sup_ = refine_sup(arg_d2sup * h, h, 2);
  }

  double refine_sup(double u0, double h, int order) const {
    double lo = u0 - h, hi = u0 + h;
    for (int iter = 0; iter < 200; ++iter) {
      const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
      if (std::abs(evaluate(m1, order)) < std::abs(evaluate(m2, order)))
        lo = m1;
      else
        hi = m2;
    }
    return std::abs(evaluate(0.5 * (lo + hi), order));
  }

  Family family_ = Family::Gaussian;
  int order_ = 0;
  double period_ = 1.0;
  double center_ = 0.0;
  double scale_ = 1.0;
  int images_ = 1;
  std::vector<std::vector<double>> poly_;
  double norm_sup_ = 0.0, d2_norm_sup_ = 0.0;
  double norm_l2_sq_ = 0.0, d1_norm_l2_sq_ = 0.0;
  std::string label_;
};

}  // namespace exclab
