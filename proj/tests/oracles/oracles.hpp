#pragma once
// Independent reference solutions used by the tests. Nothing here calls the
// solver library.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Root of f on [lo, hi] by bisection (f(lo), f(hi) of opposite sign).
inline double bisect(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
  double flo = f(lo);
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Inviscid u_t - u u_x = 0 with u(0) = amp sin(2 pi x) on the unit torus,
/// before the shock: u(t, x) = amp sin(2 pi x0), x = x0 - t amp sin(2 pi x0).
inline double burgers_characteristic(double t, double x, double amp = 1.0) {
  const double x0 = bisect([&](double y) { return y - t * amp * std::sin(two_pi * y) - x; }, x - t * amp - 0.01,
                           x + t * amp + 0.01);
  return amp * std::sin(two_pi * x0);
}

/// Same with the other orientation, x = x0 + t amp sin(2 pi x0).
inline double burgers_characteristic_plus(double t, double x, double amp = 1.0) {
  const double x0 = bisect([&](double y) { return y + t * amp * std::sin(two_pi * y) - x; }, x - t * amp - 0.01,
                           x + t * amp + 0.01);
  return amp * std::sin(two_pi * x0);
}

/// Fourier coefficients (k = -N/2+1 .. N/2) of samples f(j/N), naive DFT.
struct Fourier {
  int n;
  std::vector<std::complex<double>> c;  // index k + n/2 - 1
  explicit Fourier(const std::vector<double>& samples) : n(static_cast<int>(samples.size())) {
    c.resize(static_cast<std::size_t>(n));
    for (int k = -n / 2 + 1; k <= n / 2; ++k) {
      std::complex<double> s = 0;
      for (int j = 0; j < n; ++j) s += samples[static_cast<std::size_t>(j)] * std::polar(1.0, -two_pi * k * j / n);
      c[static_cast<std::size_t>(k + n / 2 - 1)] = s / static_cast<double>(n);
    }
  }
  // sum_k c_k mult(k) e^{2 pi i k x}
  template <class Mult>
  double eval(double x, Mult mult) const {
    std::complex<double> s = 0;
    for (int k = -n / 2 + 1; k <= n / 2; ++k) {
      s += c[static_cast<std::size_t>(k + n / 2 - 1)] * mult(k) * std::polar(1.0, two_pi * k * x);
    }
    return s.real();
  }
};

/// Viscous Burgers w_t + w w_x = sigma w_xx on the unit torus with
/// w(0) = g' where g = amp/(2 pi) sin(2 pi x), via Cole-Hopf:
/// w = -2 sigma phi_x / phi, phi_t = sigma phi_xx, phi(0) = exp(-g/(2 sigma)).
class ColeHopf {
 public:
  ColeHopf(double amp, double sigma, int n = 256) : sigma_(sigma) {
    std::vector<double> s(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      const double x = static_cast<double>(j) / n;
      s[static_cast<std::size_t>(j)] = std::exp(-amp / two_pi * std::sin(two_pi * x) / (2.0 * sigma));
    }
    f_ = Fourier(s);
  }
  double operator()(double t, double x) const {
    auto decay = [&](int k) { return std::exp(-two_pi * two_pi * k * k * sigma_ * t); };
    const double phi = f_.eval(x, [&](int k) { return std::complex<double>(decay(k), 0.0); });
    const double phix = f_.eval(x, [&](int k) { return std::complex<double>(0.0, two_pi * k) * decay(k); });
    return -2.0 * sigma_ * phix / phi;
  }

 private:
  double sigma_;
  Fourier f_{std::vector<double>{0.0, 0.0}};
};

/// Cell values of the heat flow u_t = sigma u_xx on the unit torus from cell
/// values u0, exact for the discrete Fourier modes.
inline std::vector<double> heat_flow(const std::vector<double>& u0, double sigma, double t) {
  const Fourier f(u0);
  const auto n = u0.size();
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = f.eval(static_cast<double>(j) / static_cast<double>(n),
                    [&](int k) { return std::exp(-two_pi * two_pi * k * k * sigma * t); });
  }
  return out;
}

/// Band-limited translation of periodic cell values by `shift` (unit period).
inline std::vector<double> spectral_shift(const std::vector<double>& u, double shift) {
  const Fourier f(u);
  const auto n = u.size();
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = f.eval(static_cast<double>(j) / static_cast<double>(n) - shift, [](int) { return 1.0; });
  }
  return out;
}

/// 1-Wasserstein distance on the unit circle from a sorted-CDF formula
/// evaluated by brute-force minimization over the shift (golden search).
inline double circle_w1(const std::vector<double>& a, const std::vector<double>& b) {
  const auto n = a.size();
  const double dx = 1.0 / static_cast<double>(n);
  std::vector<double> cum(n);
  double c = 0;
  for (std::size_t i = 0; i < n; ++i) {
    c += (a[i] - b[i]) * dx;
    cum[i] = c;
  }
  auto cost = [&](double s) {
    double r = 0;
    for (double v : cum) r += std::abs(v - s);
    return r * dx;
  };
  double lo = -1.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
    if (cost(m1) < cost(m2)) hi = m2; else lo = m1;
  }
  return cost(0.5 * (lo + hi));
}

}  // namespace oracle
