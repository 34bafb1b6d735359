#include "charax/core/fields.hpp"

#include <algorithm>
#include <vector>

#include "charax/core/errors.hpp"

namespace charax {
namespace {

class LambdaSpatial final : public SpatialField {
 public:
  LambdaSpatial(int in, int out, SpatialFn fn) : in_(in), out_(out), fn_(std::move(fn)) {}
  int in_dim() const override { return in_; }
  int out_dim() const override { return out_; }
  void eval(std::span<const double> x, std::span<double> out) const override {
    const auto n = x.size() / static_cast<std::size_t>(in_);
    for (std::size_t i = 0; i < n; ++i) fn_(x.data() + i * in_, out.data() + i * out_);
  }

 private:
  int in_, out_;
  SpatialFn fn_;
};

class LambdaTime final : public TimeField {
 public:
  LambdaTime(int in, int out, TimeFn fn) : in_(in), out_(out), fn_(std::move(fn)) {}
  int in_dim() const override { return in_; }
  int out_dim() const override { return out_; }
  void eval(double t, std::span<const double> x, std::span<double> out) const override {
    const auto n = x.size() / static_cast<std::size_t>(in_);
    for (std::size_t i = 0; i < n; ++i) fn_(t, x.data() + i * in_, out.data() + i * out_);
  }

 private:
  int in_, out_;
  TimeFn fn_;
};

class LambdaState final : public StateField {
 public:
  LambdaState(int in, int pd, int out, StateFn fn) : in_(in), pd_(pd), out_(out), fn_(std::move(fn)) {}
  int in_dim() const override { return in_; }
  int p_dim() const override { return pd_; }
  int out_dim() const override { return out_; }
  void eval(std::span<const double> x, std::span<const double> p, std::span<double> out) const override {
    const auto n = x.size() / static_cast<std::size_t>(in_);
    for (std::size_t i = 0; i < n; ++i) fn_(x.data() + i * in_, p.data() + i * pd_, out.data() + i * out_);
  }

 private:
  int in_, pd_, out_;
  StateFn fn_;
};

class ConstantInTime final : public TimeField {
 public:
  explicit ConstantInTime(std::shared_ptr<const SpatialField> f) : f_(std::move(f)) {}
  int in_dim() const override { return f_->in_dim(); }
  int out_dim() const override { return f_->out_dim(); }
  void eval(double, std::span<const double> x, std::span<double> out) const override { f_->eval(x, out); }

 private:
  std::shared_ptr<const SpatialField> f_;
};

class ZeroTime final : public TimeField {
 public:
  ZeroTime(int in, int out) : in_(in), out_(out) {}
  int in_dim() const override { return in_; }
  int out_dim() const override { return out_; }
  void eval(double, std::span<const double>, std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 0.0);
  }

 private:
  int in_, out_;
};

class AffineMap final : public PointMap {
 public:
  AffineMap(int d, std::vector<double> m, std::vector<double> b) : d_(d), m_(std::move(m)), b_(std::move(b)) {}
  int dim() const override { return d_; }
  void apply(std::span<const double> x, std::span<double> out) const override {
    const auto d = static_cast<std::size_t>(d_);
    const auto n = x.size() / d;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t r = 0; r < d; ++r) {
        double s = b_[r];
        for (std::size_t c = 0; c < d; ++c) s += m_[r * d + c] * x[i * d + c];
        out[i * d + r] = s;
      }
    }
  }
  void jacobian(std::span<const double> x, std::span<double> out) const override {
    const auto d = static_cast<std::size_t>(d_);
    const auto n = x.size() / d;
    for (std::size_t i = 0; i < n; ++i) std::copy(m_.begin(), m_.end(), out.begin() + static_cast<std::ptrdiff_t>(i * d * d));
  }

 private:
  int d_;
  std::vector<double> m_, b_;
};

}  // namespace

std::shared_ptr<const SpatialField> make_spatial(int in_dim, int out_dim, SpatialFn fn) {
  return std::make_shared<LambdaSpatial>(in_dim, out_dim, std::move(fn));
}
std::shared_ptr<const TimeField> make_time(int in_dim, int out_dim, TimeFn fn) {
  return std::make_shared<LambdaTime>(in_dim, out_dim, std::move(fn));
}
std::shared_ptr<const StateField> make_state(int in_dim, int p_dim, int out_dim, StateFn fn) {
  return std::make_shared<LambdaState>(in_dim, p_dim, out_dim, std::move(fn));
}
std::shared_ptr<const TimeField> constant_in_time(std::shared_ptr<const SpatialField> f) {
  return std::make_shared<ConstantInTime>(std::move(f));
}
std::shared_ptr<const TimeField> zero_time_field(int in_dim, int out_dim) {
  return std::make_shared<ZeroTime>(in_dim, out_dim);
}

std::shared_ptr<const PointMap> make_affine_map(int dim, std::span<const double> matrix,
                                                std::span<const double> offset) {
  const auto d = static_cast<std::size_t>(dim);
  if (matrix.size() != d * d || offset.size() != d) throw PreconditionError("make_affine_map: shape mismatch");
  return std::make_shared<AffineMap>(dim, std::vector<double>(matrix.begin(), matrix.end()),
                                     std::vector<double>(offset.begin(), offset.end()));
}

std::shared_ptr<const PointMap> identity_map(int dim) {
  const auto d = static_cast<std::size_t>(dim);
  std::vector<double> m(d * d, 0.0), b(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) m[i * d + i] = 1.0;
  return make_affine_map(dim, m, b);
}

}  // namespace charax
