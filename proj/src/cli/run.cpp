#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "charax/cli/cli.hpp"
#include "charax/core/errors.hpp"
#include "charax/core/parallel.hpp"
#include "charax/verify/verify.hpp"
#include "cli/builders.hpp"
#include "cli/io.hpp"

namespace charax::cli {

using nlohmann::json;

namespace {

struct Outcome {
  int code = exit_ok;
  json summary = json::object();
  std::map<std::string, std::string> files;  // name -> contents, written in name order
  double t_reached = 0.0, lip = 0.0, residual = 0.0;
};

struct Options {
  std::string mode, family;
  std::filesystem::path spec_dir;
  json spec, solver, output;
  PicardConfig cfg;
  bool lip_history = true, plot = false, csv = true, json_out = false;
};

double required_number(const json& solver, const char* key) {
  if (!solver.contains(key)) throw SpecError(std::string("/solver/") + key + ": required key is missing");
  return solver[key].get<double>();
}

json report_json(const PicardReport& r) {
  return {{"iters", r.iters}, {"converged", r.converged}, {"contraction_factor", r.contraction_factor},
          {"residuals", r.residuals}};
}

double last_residual(const PicardReport& r) { return r.residuals.empty() ? 0.0 : r.residuals.back(); }

std::string lip_csv(const std::vector<std::pair<double, LipEstimate>>& h, bool full) {
  bool has_m = false, has_g = false;
  for (const auto& [t, e] : h) {
    has_m = has_m || e.lip_m.has_value();
    has_g = has_g || e.growth_norm.has_value();
  }
  std::string out = "t,lip_x";
  if (has_m) out += ",lip_m";
  if (has_g) out += ",growth";
  if (full) out += ",sup_norm";
  out += "\n";
  for (const auto& [t, e] : h) {
    out += num(t) + "," + num(e.lip_x);
    if (has_m) out += "," + num(e.lip_m.value_or(0.0));
    if (has_g) out += "," + num(e.growth_norm.value_or(0.0));
    if (full) out += "," + num(e.sup_norm);
    out += "\n";
  }
  return out;
}

template <class Estimate>
std::vector<std::pair<double, LipEstimate>> history_of(const GridFunction& u, Estimate&& est) {
  std::vector<std::pair<double, LipEstimate>> h;
  for (std::size_t k = 0; k < u.n_times(); ++k) h.emplace_back(u.time_of(k), est(u, k));
  return h;
}

void add_field_files(Outcome& o, const Options& op, const std::vector<const GridFunction*>& parts,
                     const std::vector<std::pair<double, LipEstimate>>& hist, const std::string& stem = "U") {
  if (op.csv) o.files[stem + ".csv"] = segments_csv(parts);
  if (op.json_out && !parts.empty()) {
    json j;
    std::vector<double> t, v;
    bool first = true;
    for (const GridFunction* f : parts) {
      for (std::size_t k = first ? 0 : 1; k < f->n_times(); ++k) {
        t.push_back(f->time_of(k));
        const auto s = f->slice(k);
        v.insert(v.end(), s.begin(), s.end());
      }
      first = false;
    }
    j["times"] = t;
    j["nodes"] = parts[0]->grid().nodes();
    j["dim"] = parts[0]->grid().dim();
    j["out_dim"] = parts[0]->out_dim();
    j["values"] = v;
    o.files[stem + ".json"] = j.dump(1) + "\n";
  }
  if (op.lip_history) o.files["lip_history.csv"] = lip_csv(hist, true);
  if (op.plot) {
    o.files["plot_values.csv"] = tidy_csv(parts);
    o.files["plot_lip.csv"] = lip_csv(hist, false);
  }
}

void fill_final(Outcome& o, const std::vector<std::pair<double, LipEstimate>>& hist) {
  if (!hist.empty()) o.lip = hist.back().second.lip_x;
}

json continuation_json(const ContinuationResult& r) {
  json segs = json::array();
  for (std::size_t i = 0; i < r.segments.size(); ++i) {
    segs.push_back({{"t_start", r.segments[i].t_start}, {"t_end", r.segments[i].t_end},
                    {"iters", i < r.reports.size() ? r.reports[i].iters : 0}});
  }
  return {{"termination", to_string(r.termination)},
          {"t_c_estimate", r.t_c_estimate},  // inf dumps as null
          {"t_c_upper", r.t_c_upper},
          {"failed_attempts", r.failed_attempts},
          {"segments", segs},
          {"warnings", r.warnings}};
}

Outcome from_continuation(const ContinuationResult& r, const Options& op) {
  Outcome o;
  std::vector<const GridFunction*> parts;
  for (const auto& s : r.segments) parts.push_back(&s.solution);
  add_field_files(o, op, parts, r.lip_history);
  fill_final(o, r.lip_history);
  o.t_reached = r.t_reached();
  o.residual = r.reports.empty() ? 0.0 : last_residual(r.reports.back());
  o.summary = continuation_json(r);
  o.code = r.termination == Termination::horizon_reached ? exit_ok : exit_blowup;
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  return o;
}

// ----- finite -----

finite::FiniteProblem finite_problem(const Options& op) {
  auto p = build_finite(op.spec["problem"]);
  try {
    p.check();
  } catch (const PreconditionError& e) {
    throw SpecError(std::string("/problem: ") + e.what());
  }
  return p;
}

Outcome finite_solve(const Options& op) {
  const auto p = finite_problem(op);
  const double T = required_number(op.solver, "T");
  auto [U, rep] = finite::picard_solve(p, T, op.cfg);
  Outcome o;
  const auto hist = history_of(U, finite::estimate_slice);
  add_field_files(o, op, {&U}, hist);
  fill_final(o, hist);
  o.t_reached = T;
  o.residual = last_residual(rep);
  o.summary["report"] = report_json(rep);
  return o;
}

Outcome finite_continue(const Options& op) {
  const auto p = finite_problem(op);
  return from_continuation(finite::continue_to_blowup(p, required_number(op.solver, "horizon"), op.cfg), op);
}

json certificate_json(const verify::Certificate& c, const verify::TimeLipschitz& tl, double U_residual) {
  return {{"passed", c.passed},       {"epsilon", c.epsilon}, {"init_gap", c.init_gap},
          {"sup_gap", c.sup_gap},     {"C", c.C_used},        {"times", c.times},
          {"gaps", c.gaps},           {"bounds", c.bounds},   {"reference_residual", U_residual},
          {"time_lipschitz", {{"measured", tl.measured}, {"bound", tl.bound}, {"passed", tl.passed}}}};
}

Outcome finite_verify(const Options& op) {
  const auto p = finite_problem(op);
  if (!op.spec.contains("verify")) throw SpecError("/verify: required for mode verify");
  const auto& vj = op.spec["verify"];
  const auto resolve = [&](const json& j) { return (op.spec_dir / j.get<std::string>()).string(); };
  const GridFunction V = read_grid_function_csv(resolve(vj["V"]), p.domain);
  std::optional<GridFunction> U;
  if (vj.contains("U")) {
    U = read_grid_function_csv(resolve(vj["U"]), p.domain);
  } else {
    PicardConfig c = op.cfg;
    c.dt = V.time()->dt();
    auto r = finite::picard_solve(p, V.time()->t_max(), c);
    U = std::move(r.first);
  }
  if (U->out_dim() != V.out_dim() || !U->time()->same_as(*V.time())) {
    throw IoError("U and V must share time nodes and value columns");
  }
  std::optional<double> C;
  if (vj.contains("C")) C = vj["C"].get<double>();
  const auto cert = verify::strong_weak_certificate(*U, V, p, C);
  const auto tl = verify::time_lipschitz_check(*U, p);
  Outcome o;
  o.files["certificate.json"] = certificate_json(cert, tl, verify::residual_finite(*U, p)).dump(1) + "\n";
  o.t_reached = V.time()->t_max();
  o.lip = lipschitz_x(*U, o.t_reached);
  o.residual = cert.epsilon;
  o.summary["certificate_passed"] = cert.passed;
  o.summary["bound_at_T"] = cert.bounds.empty() ? 0.0 : cert.bounds.back();
  o.summary["sup_gap"] = cert.sup_gap;
  o.code = cert.passed ? exit_ok : exit_certificate_failed;
  return o;
}

// ----- hilbert -----

hilbert::HilbertProblem hilbert_problem(const Options& op) {
  auto p = build_hilbert(op.spec["problem"]);
  try {
    p.check();
  } catch (const PreconditionError& e) {
    throw SpecError(std::string("/problem: ") + e.what());
  }
  return p;
}

bool hilbert_noise(const Options& op) { return needs_seed(op.spec); }

Outcome hilbert_solve(const Options& op) {
  const auto p = hilbert_problem(op);
  const double T = required_number(op.solver, "T");
  const bool noise = hilbert_noise(op);
  auto s = hilbert::picard_solve_hilbert(p, T, op.cfg, noise);
  Outcome o;
  const auto hist = history_of(s.U, hilbert::estimate_slice);
  add_field_files(o, op, {&s.U}, hist);
  if (s.stderr_ && op.csv) o.files["U_stderr.csv"] = grid_function_csv(*s.stderr_);
  fill_final(o, hist);
  o.t_reached = T;
  o.residual = last_residual(s.report);
  o.summary["report"] = report_json(s.report);
  o.summary["noise"] = noise;
  o.summary["exits"] = s.exits;
  if (s.exits > 0) std::cerr << "warning: " << s.exits << " characteristics left the box (extrapolated)\n";
  return o;
}

Outcome hilbert_continue(const Options& op) {
  const auto p = hilbert_problem(op);
  const bool noise = hilbert_noise(op);
  Outcome o = from_continuation(
      hilbert::continue_to_blowup_hilbert(p, required_number(op.solver, "horizon"), op.cfg, noise), op);
  o.summary["noise"] = noise;
  return o;
}

// ----- measure -----

std::string wfield_csv(const measure::WField& W) {
  std::string out = "t,x,anchor,value,stderr\n";
  std::vector<double> x(1);
  for (std::size_t k = 0; k < W.n_times(); ++k) {
    const std::string t = num(W.time().node(static_cast<int>(k)));
    for (std::size_t a = 0; a < W.n_anchors(); ++a) {
      const auto v = W.slice(k, a);
      const auto se = W.se_slice(k, a);
      for (std::size_t i = 0; i < W.n_space(); ++i) {
        W.grid().node(i, x);
        out += t + "," + num(x[0]) + "," + std::to_string(a) + "," + num(v[i]) + "," + num(se[i]) + "\n";
      }
    }
  }
  return out;
}

Outcome measure_solve(const Options& op) {
  const std::uint64_t seed = op.cfg.seed;
  auto p = build_measure(op.spec["problem"], seed);
  try {
    p.check();
  } catch (const PreconditionError& e) {
    throw SpecError(std::string("/problem: ") + e.what());
  }
  const double T = required_number(op.solver, "T");
  measure::MeasureOptions mopt;
  mopt.common_paths = op.solver.value("common_paths", mopt.common_paths);
  auto s = measure::picard_solve_grad(p, T, op.cfg, mopt);
  const auto& W = s.W;
  Outcome o;
  std::vector<std::pair<double, LipEstimate>> hist;
  for (std::size_t k = 0; k < W.n_times(); ++k) {
    LipEstimate e;
    e.lip_x = W.lip_x_slice(k);
    e.lip_m = W.lip_m_slice(k);
    for (std::size_t a = 0; a < W.n_anchors(); ++a) {
      for (double v : W.slice(k, a)) e.sup_norm = std::max(e.sup_norm, std::abs(v));
    }
    hist.emplace_back(W.time().node(static_cast<int>(k)), e);
  }
  if (op.csv) {
    o.files["W.csv"] = wfield_csv(W);
    std::string anchors = "anchor,x,density\n";
    std::vector<double> x(1);
    for (std::size_t a = 0; a < W.n_anchors(); ++a) {
      const auto& m = W.anchors()[a];
      for (std::size_t i = 0; i < m.size(); ++i) {
        m.grid().node(i, x);
        anchors += std::to_string(a) + "," + num(x[0]) + "," + num(m[i]) + "\n";
      }
    }
    o.files["anchors.csv"] = anchors;
    std::string d1 = "a,b,d1\n";
    for (std::size_t a = 0; a < W.n_anchors(); ++a) {
      for (std::size_t b = 0; b < W.n_anchors(); ++b) {
        d1 += std::to_string(a) + "," + std::to_string(b) + "," + num(W.anchor_distance(a, b)) + "\n";
      }
    }
    o.files["anchor_d1.csv"] = d1;
  }
  if (op.solver.value("reconstruct_value", false)) {
    const auto U = measure::reconstruct_value(W, p, op.cfg);
    if (op.csv) o.files["U_value.csv"] = wfield_csv(U);
  }
  if (op.lip_history) o.files["lip_history.csv"] = lip_csv(hist, true);
  if (op.plot) o.files["plot_lip.csv"] = lip_csv(hist, false);
  o.t_reached = T;
  o.lip = s.lip_x;
  o.residual = last_residual(s.report);
  o.summary["report"] = report_json(s.report);
  o.summary["lip_x"] = s.lip_x;
  o.summary["lip_m"] = s.lip_m;
  o.summary["anchor_deviation"] = W.anchor_deviation();
  o.summary["max_stderr"] = W.max_stderr();
  return o;
}

// ----- driver -----

Outcome dispatch(const Options& op) {
  if (op.family == "finite") {
    if (op.mode == "solve") return finite_solve(op);
    if (op.mode == "continue") return finite_continue(op);
    return finite_verify(op);
  }
  if (op.mode == "verify") throw SpecError("/family: verification is only available for family finite");
  if (op.family == "hilbert") return op.mode == "solve" ? hilbert_solve(op) : hilbert_continue(op);
  if (op.mode == "continue") throw SpecError("/family: continuation is not available for family measure");
  return measure_solve(op);
}

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("MFG_CHARAX_SEED");
  if (!s || !*s) return std::nullopt;
  const std::string v(s);
  if (v.find_first_not_of("0123456789") != std::string::npos) {
    throw SpecError("MFG_CHARAX_SEED: not a non-negative integer: \"" + v + "\"");
  }
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw SpecError("MFG_CHARAX_SEED: out of range: \"" + v + "\"");
  }
}

Options prepare(const std::string& mode, const std::string& spec_path, const std::vector<std::string>& sets,
                const std::string& out_dir) {
  Options op;
  op.mode = mode;
  op.spec_dir = std::filesystem::path(spec_path).parent_path();  // verify CSVs are relative to the spec
  try {
    op.spec = json::parse(read_file(spec_path));
  } catch (const json::parse_error& e) {
    throw SpecError(spec_path + ": not valid JSON: " + e.what());
  }
  if (!op.spec.is_object()) throw SpecError("/: the spec must be a JSON object");
  for (const auto& s : sets) apply_override(op.spec, s);
  if (auto seed = env_seed()) op.spec["solver"]["seed"] = *seed;
  validate_spec(op.spec);
  op.family = op.spec["family"];
  op.solver = op.spec.value("solver", json::object());
  op.output = op.spec.value("output", json::object());
  if (!out_dir.empty()) op.output["directory"] = out_dir;
  if (!op.output.contains("directory")) op.output["directory"] = "out";
  std::optional<std::uint64_t> seed;
  if (op.solver.contains("seed")) seed = op.solver["seed"].get<std::uint64_t>();
  if (!seed && needs_seed(op.spec)) {
    throw SpecError("/solver/seed: required because the problem is stochastic (or set MFG_CHARAX_SEED)");
  }
  op.cfg = build_config(op.solver, seed);
  op.lip_history = op.output.value("emit_lip_history", true);
  op.plot = op.output.value("emit_plot_csv", false);
  const auto formats = op.output.value("formats", std::vector<std::string>{"csv"});
  op.csv = std::find(formats.begin(), formats.end(), "csv") != formats.end();
  op.json_out = std::find(formats.begin(), formats.end(), "json") != formats.end();
  return op;
}

void write_outputs(const Options& op, Outcome& o) {
  const std::string dir = op.output["directory"];
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
  json s = o.summary;
  s["mode"] = op.mode;
  s["family"] = op.family;
  s["exit_code"] = o.code;
  s["T_reached"] = o.t_reached;
  s["final_lip_x"] = o.lip;
  s["residual"] = o.residual;
  s["seed"] = op.cfg.seed;
  s["config"] = {{"tol_sup", op.cfg.tol_sup}, {"max_iters", op.cfg.max_iters}, {"lip_cap", op.cfg.lip_cap},
                 {"dt", op.cfg.dt},           {"n_sub", op.cfg.n_sub},         {"em_sub", op.cfg.em_sub},
                 {"mc_samples", op.cfg.mc_samples}};
  std::vector<std::string> names;
  for (const auto& [name, _] : o.files) names.push_back(name);
  names.push_back("summary.json");
  s["files"] = names;
  o.files["summary.json"] = s.dump(1) + "\n";
  for (const auto& [name, text] : o.files) write_file((std::filesystem::path(dir) / name).string(), text);
}

int execute(const std::string& mode, const std::string& spec_path, const std::vector<std::string>& sets,
            const std::string& out_dir) {
  Options op;
  try {
    op = prepare(mode, spec_path, sets, out_dir);
  } catch (const Error& e) {
    std::cerr << "spec error: " << e.what() << "\n";
    return exit_spec_error;
  }
  Outcome o;
  try {
    o = dispatch(op);
  } catch (const SpecError& e) {
    std::cerr << "spec error: " << e.what() << "\n";
    return exit_spec_error;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return exit_spec_error;
  } catch (const LipCapExceeded& e) {
    o = Outcome{};
    o.code = exit_blowup;
    o.lip = e.lip();
    o.summary["error"] = e.what();
    o.summary["termination"] = "lip_cap_exceeded";
  } catch (const Error& e) {
    o = Outcome{};
    o.code = exit_not_converged;
    o.summary["error"] = e.what();
  }
  try {
    write_outputs(op, o);
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return exit_spec_error;
  }
  std::printf("%s %s: T_reached=%.6g lip_x=%.6g residual=%.3g exit=%d", op.mode.c_str(), op.family.c_str(),
              o.t_reached, o.lip, o.residual, o.code);
  if (o.summary.contains("t_c_estimate") && o.code == exit_blowup) {
    std::printf(" t_c_estimate=%.6g", o.summary["t_c_estimate"].get<double>());
  }
  if (o.summary.contains("error")) std::printf(" error=\"%s\"", o.summary["error"].get<std::string>().c_str());
  std::printf("\n");
  std::fflush(stdout);
  return o.code;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Lipschitz solutions of mean-field-game master equations by Picard iteration", "mfg-charax"};
  app.require_subcommand(1);
  std::string spec_path, out_dir;
  std::vector<std::string> sets;
  int n_workers = 1;
  for (const char* name : {"solve", "continue", "verify"}) {
    auto* sub = app.add_subcommand(name, std::string(name) + " the problem in --spec");
    sub->add_option("--spec", spec_path, "run spec (JSON)")->required();
    sub->add_option("--set", sets, "override a spec value: dotted.key=value (repeatable)");
    sub->add_option("--workers", n_workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "output directory (beats output.directory)");
  }
  app.add_subcommand("schema", "print the JSON schema of run specs");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_spec_error;
  }
  const std::string mode = app.get_subcommands().front()->get_name();
  if (mode == "schema") {
    std::cout << schema().dump(2) << "\n";
    return exit_ok;
  }
  set_workers(n_workers);
  return execute(mode, spec_path, sets, out_dir);
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> copy{"mfg-charax"};
  copy.insert(copy.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : copy) argv.push_back(a.data());
  argv.push_back(nullptr);
  return run(static_cast<int>(copy.size()), argv.data());
}

}  // namespace charax::cli
