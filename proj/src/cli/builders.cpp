#include "cli/builders.hpp"

#include "charax/core/errors.hpp"
#include "charax/finite/builtins.hpp"

namespace charax::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw SpecError(path + ": " + what); }

std::vector<double> numbers(const json& j, const char* key, std::size_t n, const std::string& path) {
  const auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != n) fail(path + "/" + key, "expected " + std::to_string(n) + " values, got " + std::to_string(v.size()));
  return v;
}

std::vector<builtin::Monomial> monomials(const json& j, int dim, const std::string& path) {
  std::vector<builtin::Monomial> out;
  const auto& terms = j.at("terms");
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto& t = terms[i];
    const std::string tp = path + "/terms/" + std::to_string(i);
    builtin::Monomial m;
    m.component = t.value("component", 0);
    if (m.component >= dim) fail(tp + "/component", "must be below the dimension " + std::to_string(dim));
    m.coef = t.at("coef").get<double>();
    m.x_pow = t.value("x_pow", std::vector<int>(static_cast<std::size_t>(dim), 0));
    m.p_pow = t.value("p_pow", std::vector<int>(static_cast<std::size_t>(dim), 0));
    if (m.x_pow.size() != static_cast<std::size_t>(dim)) fail(tp + "/x_pow", "length must equal the dimension");
    if (m.p_pow.size() != static_cast<std::size_t>(dim)) fail(tp + "/p_pow", "length must equal the dimension");
    for (int e : m.x_pow) if (e < 0) fail(tp + "/x_pow", "exponents must be non-negative");
    for (int e : m.p_pow) if (e < 0) fail(tp + "/p_pow", "exponents must be non-negative");
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace

SpaceGrid build_domain(const json& j, const std::string& path) {
  const auto n = j.at("n_points").get<std::vector<int>>();
  const std::size_t d = n.size();
  if (j.at("kind") == "torus") {
    if (j.contains("lo") || j.contains("hi")) fail(path, "lo/hi are for box domains");
    const auto periods = j.contains("periods") ? numbers(j, "periods", d, path) : std::vector<double>(d, 1.0);
    for (double p : periods) if (!(p > 0.0)) fail(path + "/periods", "periods must be positive");
    return SpaceGrid::torus(periods, n);
  }
  if (j.contains("periods")) fail(path + "/periods", "periods are for torus domains");
  if (!j.contains("lo") || !j.contains("hi")) fail(path, "box domains need lo and hi");
  const auto lo = numbers(j, "lo", d, path), hi = numbers(j, "hi", d, path);
  std::vector<SpaceGrid::Axis> axes;
  for (std::size_t a = 0; a < d; ++a) {
    if (!(hi[a] > lo[a])) fail(path + "/hi", "hi must exceed lo on every axis");
    axes.push_back({lo[a], hi[a], n[a]});
  }
  return SpaceGrid::box(axes);
}

std::shared_ptr<const StateField> build_state_field(const json& j, int dim, const std::string& path) {
  const std::string t = j.at("type");
  const auto d = static_cast<std::size_t>(dim);
  if (t == "identity_p") return builtin::identity_p(dim);
  if (t == "zero") return builtin::zero_state(dim);
  if (t == "linear_decay") return builtin::linear_decay(dim, j.value("rate", 1.0));
  if (t == "constant") return builtin::constant_state(numbers(j, "value", d, path));
  if (t == "scaled_x") return builtin::scaled_x(dim, j.at("c").get<double>());
  if (t == "polynomial") return builtin::polynomial_state(dim, monomials(j, dim, path));
  fail(path + "/type", "unknown type " + t);
}

std::shared_ptr<const SpatialField> build_spatial_field(const json& j, int dim, const std::string& path) {
  const std::string t = j.at("type");
  const auto d = static_cast<std::size_t>(dim);
  if (t == "sine") return builtin::sine(dim, j.value("amplitude", 1.0), j.value("freq", 1.0), j.value("phase", 0.0));
  if (t == "cosine") return builtin::cosine(dim, j.value("amplitude", 1.0), j.value("freq", 1.0));
  if (t == "constant") return builtin::constant_field(numbers(j, "value", d, path));
  if (t == "linear") return builtin::linear_field(dim, numbers(j, "matrix", d * d, path));
  if (t == "polynomial") return builtin::polynomial_field(dim, monomials(j, dim, path));
  fail(path + "/type", "unknown type " + t);
}

finite::FiniteProblem build_finite(const json& pj) {
  finite::FiniteProblem p;
  p.domain = build_domain(pj.at("domain"), "/problem/domain");
  const int d = p.domain.dim();
  p.F = build_state_field(pj.at("F"), d, "/problem/F");
  p.G = pj.contains("G") ? build_state_field(pj["G"], d, "/problem/G") : builtin::zero_state(d);
  p.lambda = pj.value("lambda", 0.0);
  if (pj.contains("S")) {
    const auto& s = pj["S"];
    if (s.at("type") == "identity") {
      p.S = identity_map(d);
    } else {
      const auto du = static_cast<std::size_t>(d);
      const auto m = numbers(s, "matrix", du * du, "/problem/S");
      const auto o = numbers(s, "offset", du, "/problem/S");
      p.S = make_affine_map(d, m, o);
    }
  }
  p.U0 = build_spatial_field(pj.at("U0"), d, "/problem/U0");
  return p;
}

hilbert::HilbertProblem build_hilbert(const json& pj) {
  hilbert::HilbertProblem p;
  const auto& box = pj.at("box");
  if (box.at("kind") != "box") fail("/problem/box/kind", "the Hilbert truncation is solved on a box");
  p.solve_box = build_domain(box, "/problem/box");
  p.n = p.solve_box.dim();
  const auto n = static_cast<std::size_t>(p.n);
  p.F = build_state_field(pj.at("F"), p.n, "/problem/F");
  p.G = pj.contains("G") ? build_state_field(pj["G"], p.n, "/problem/G") : builtin::zero_state(p.n);
  p.lambdas = pj.contains("lambdas") ? numbers(pj, "lambdas", n, "/problem") : std::vector<double>(n, 0.0);
  p.U0 = build_spatial_field(pj.at("U0"), p.n, "/problem/U0");
  return p;
}

measure::MeasureProblem build_measure(const json& pj, std::uint64_t seed) {
  measure::MeasureProblem p;
  p.grid = SpaceGrid::torus1d(1.0, pj.value("n_cells", 128));
  const auto& h = pj.at("H");
  const std::string ht = h.at("type");
  if (ht == "quadratic") measure::builtin::quadratic(p, h.value("kappa", 0.0));
  else if (ht == "nonlocal_mean") measure::builtin::nonlocal_mean(p);
  else measure::builtin::zero_hamiltonian(p);
  const std::string bt = pj.at("B").at("type");
  if (bt == "momentum") measure::builtin::b_momentum(p);
  else if (bt == "mean") measure::builtin::b_mean(p);
  else measure::builtin::b_zero(p);
  const auto& u = pj.at("U0");
  if (u.at("type") == "sine") measure::builtin::u0_sine(p, u.value("amplitude", 1.0));
  else measure::builtin::u0_mean_coupled(p, u.value("amplitude", 1.0));
  p.sigma = pj.value("sigma", p.sigma);
  p.sigma_prime = pj.value("sigma_prime", p.sigma_prime);
  p.sigma_0 = pj.value("sigma_0", p.sigma_0);
  const json anchors = pj.value("anchors", json::object());
  p.anchors = measure::generate_anchors(p.grid, anchors.value("count", 8), anchors.value("seed", seed));
  return p;
}

PicardConfig build_config(const json& s, std::optional<std::uint64_t> seed) {
  PicardConfig c;
  c.tol_sup = s.value("tol_sup", c.tol_sup);
  c.max_iters = s.value("max_iters", c.max_iters);
  c.lip_cap = s.value("lip_cap", c.lip_cap);
  c.segment_shrink = s.value("segment_shrink", c.segment_shrink);
  c.segment_scale = s.value("segment_scale", c.segment_scale);
  c.mc_samples = s.value("mc_samples", c.mc_samples);
  c.dt = s.value("dt", c.dt);
  c.n_sub = s.value("n_sub", c.n_sub);
  c.em_sub = s.value("em_sub", c.em_sub);
  if (s.contains("interp")) c.interp = s["interp"] == "cubic" ? Interp::cubic : Interp::linear;
  if (seed) c.seed = *seed;
  try {
    c.validate();
  } catch (const PreconditionError& e) {
    fail("/solver", e.what());
  }
  return c;
}

bool needs_seed(const json& spec) {
  const std::string family = spec.at("family");
  if (family == "measure") return true;
  if (family != "hilbert") return false;
  const auto& pj = spec.at("problem");
  bool any = false;
  for (double l : pj.value("lambdas", std::vector<double>{})) any = any || l > 0.0;
  const json solver = spec.value("solver", json::object());
  return solver.value("noise", any);
}

}  // namespace charax::cli
