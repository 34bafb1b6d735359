#include "charax/finite/builtins.hpp"

#include <cmath>
#include <numbers>

#include "charax/core/errors.hpp"

namespace charax::builtin {

namespace {

class IdentityP final : public StateField {
 public:
  explicit IdentityP(int d) : d_(d) {}
  int in_dim() const override { return d_; }
  int p_dim() const override { return d_; }
  int out_dim() const override { return d_; }
  void eval(std::span<const double>, std::span<const double> p, std::span<double> out) const override {
    std::copy(p.begin(), p.end(), out.begin());
  }

 private:
  int d_;
};

class ScaledP final : public StateField {
 public:
  ScaledP(int d, double c) : d_(d), c_(c) {}
  int in_dim() const override { return d_; }
  int p_dim() const override { return d_; }
  int out_dim() const override { return d_; }
  void eval(std::span<const double>, std::span<const double> p, std::span<double> out) const override {
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = c_ * p[i];
  }
  bool is_zero() const override { return c_ == 0.0; }

 private:
  int d_;
  double c_;
};

class ScaledX final : public StateField {
 public:
  ScaledX(int d, double c) : d_(d), c_(c) {}
  int in_dim() const override { return d_; }
  int p_dim() const override { return d_; }
  int out_dim() const override { return d_; }
  void eval(std::span<const double> x, std::span<const double>, std::span<double> out) const override {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = c_ * x[i];
  }

 private:
  int d_;
  double c_;
};

class ConstantState final : public StateField {
 public:
  ConstantState(int d, std::vector<double> c) : d_(d), c_(std::move(c)) {}
  int in_dim() const override { return d_; }
  int p_dim() const override { return d_; }
  int out_dim() const override { return static_cast<int>(c_.size()); }
  void eval(std::span<const double> x, std::span<const double>, std::span<double> out) const override {
    const std::size_t n = x.size() / static_cast<std::size_t>(d_);
    for (std::size_t i = 0; i < n; ++i) std::copy(c_.begin(), c_.end(), out.begin() + i * c_.size());
  }

 private:
  int d_;
  std::vector<double> c_;
};

void check_terms(int dim, const std::vector<Monomial>& terms, bool need_p) {
  for (const auto& t : terms) {
    if (t.component < 0 || t.component >= dim) throw PreconditionError("polynomial: component out of range");
    if (static_cast<int>(t.x_pow.size()) != dim && !t.x_pow.empty())
      throw PreconditionError("polynomial: x_pow length must equal dim");
    if (need_p && static_cast<int>(t.p_pow.size()) != dim && !t.p_pow.empty())
      throw PreconditionError("polynomial: p_pow length must equal dim");
    for (int e : t.x_pow)
      if (e < 0) throw PreconditionError("polynomial: negative exponent");
    for (int e : t.p_pow)
      if (e < 0) throw PreconditionError("polynomial: negative exponent");
  }
}

double monomial(const std::vector<int>& pow, const double* v) {
  double r = 1.0;
  for (std::size_t a = 0; a < pow.size(); ++a)
    for (int e = 0; e < pow[a]; ++e) r *= v[a];
  return r;
}

class PolyState final : public StateField {
 public:
  PolyState(int d, std::vector<Monomial> t) : d_(d), terms_(std::move(t)) { check_terms(d_, terms_, true); }
  int in_dim() const override { return d_; }
  int p_dim() const override { return d_; }
  int out_dim() const override { return d_; }
  void eval(std::span<const double> x, std::span<const double> p, std::span<double> out) const override {
    const auto d = static_cast<std::size_t>(d_);
    const std::size_t n = x.size() / d;
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (const auto& t : terms_)
        out[i * d + t.component] += t.coef * monomial(t.x_pow, &x[i * d]) * monomial(t.p_pow, &p[i * d]);
  }

 private:
  int d_;
  std::vector<Monomial> terms_;
};

class Trig final : public SpatialField {
 public:
  Trig(int d, double a, double f, double ph, bool cosine) : d_(d), a_(a), f_(f), ph_(ph), cos_(cosine) {}
  int in_dim() const override { return d_; }
  int out_dim() const override { return d_; }
  void eval(std::span<const double> x, std::span<double> out) const override {
    const double w = 2.0 * std::numbers::pi * f_;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double arg = w * x[i] + ph_;
      out[i] = a_ * (cos_ ? std::cos(arg) : std::sin(arg));
    }
  }

 private:
  int d_;
  double a_, f_, ph_;
  bool cos_;
};

class ConstantField final : public SpatialField {
 public:
  ConstantField(int d, std::vector<double> c) : d_(d), c_(std::move(c)) {}
  int in_dim() const override { return d_; }
  int out_dim() const override { return static_cast<int>(c_.size()); }
  void eval(std::span<const double> x, std::span<double> out) const override {
    const std::size_t n = x.size() / static_cast<std::size_t>(d_);
    for (std::size_t i = 0; i < n; ++i) std::copy(c_.begin(), c_.end(), out.begin() + i * c_.size());
  }

 private:
  int d_;
  std::vector<double> c_;
};

class LinearField final : public SpatialField {
 public:
  LinearField(int d, std::vector<double> m) : d_(d), m_(std::move(m)) {
    if (m_.size() != static_cast<std::size_t>(d) * d) throw PreconditionError("linear field: matrix must be dim x dim");
  }
  int in_dim() const override { return d_; }
  int out_dim() const override { return d_; }
  void eval(std::span<const double> x, std::span<double> out) const override {
    const auto d = static_cast<std::size_t>(d_);
    const std::size_t n = x.size() / d;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t r = 0; r < d; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) s += m_[r * d + c] * x[i * d + c];
        out[i * d + r] = s;
      }
  }

 private:
  int d_;
  std::vector<double> m_;
};

class PolyField final : public SpatialField {
 public:
  PolyField(int d, std::vector<Monomial> t) : d_(d), terms_(std::move(t)) { check_terms(d_, terms_, false); }
  int in_dim() const override { return d_; }
  int out_dim() const override { return d_; }
  void eval(std::span<const double> x, std::span<double> out) const override {
    const auto d = static_cast<std::size_t>(d_);
    const std::size_t n = x.size() / d;
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (const auto& t : terms_) out[i * d + t.component] += t.coef * monomial(t.x_pow, &x[i * d]);
  }

 private:
  int d_;
  std::vector<Monomial> terms_;
};

}  // namespace

std::shared_ptr<const StateField> identity_p(int dim) { return std::make_shared<IdentityP>(dim); }
std::shared_ptr<const StateField> linear_decay(int dim, double rate) { return std::make_shared<ScaledP>(dim, -rate); }
std::shared_ptr<const StateField> zero_state(int dim) { return std::make_shared<ScaledP>(dim, 0.0); }
std::shared_ptr<const StateField> constant_state(std::vector<double> c) {
  const int d = static_cast<int>(c.size());
  return std::make_shared<ConstantState>(d, std::move(c));
}
std::shared_ptr<const StateField> scaled_x(int dim, double c) { return std::make_shared<ScaledX>(dim, c); }
std::shared_ptr<const StateField> polynomial_state(int dim, std::vector<Monomial> terms) {
  return std::make_shared<PolyState>(dim, std::move(terms));
}

std::shared_ptr<const SpatialField> sine(int dim, double amplitude, double freq, double phase) {
  return std::make_shared<Trig>(dim, amplitude, freq, phase, false);
}
std::shared_ptr<const SpatialField> cosine(int dim, double amplitude, double freq) {
  return std::make_shared<Trig>(dim, amplitude, freq, 0.0, true);
}
std::shared_ptr<const SpatialField> constant_field(std::vector<double> c) {
  const int d = static_cast<int>(c.size());
  return std::make_shared<ConstantField>(d, std::move(c));
}
std::shared_ptr<const SpatialField> linear_field(int dim, std::vector<double> matrix) {
  return std::make_shared<LinearField>(dim, std::move(matrix));
}
std::shared_ptr<const SpatialField> polynomial_field(int dim, std::vector<Monomial> terms) {
  return std::make_shared<PolyField>(dim, std::move(terms));
}

}  // namespace charax::builtin
