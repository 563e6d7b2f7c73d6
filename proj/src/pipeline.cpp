#include "qdde/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

#include "qdde/asymptotics.hpp"
#include "qdde/majorant.hpp"

namespace qdde {

namespace {

constexpr const char* kVersion = "1.0.0";

json to_json(const Interval& i) { return json{{"lo", i.lo}, {"hi", i.hi}, {"empty", i.empty()}}; }

json to_json(const Witness& w) {
  json j{{"k", w.k}, {"s", w.s}, {"inequality", w.inequality}, {"lhs", w.lhs}, {"rhs", w.rhs}, {"ok", w.ok}};
  if (w.j >= 0) j["j"] = w.j;
  return j;
}

json to_json(const AssumptionReport& r) {
  json a{{"A_ok", r.A_ok},
         {"A2_ok", r.A2_ok},
         {"B_ok", r.B_ok},
         {"all_ok", r.all_ok()},
         {"T_set", to_json(r.T_set)},
         {"T1_set", to_json(r.T1_set)},
         {"T1", r.T1},
         {"geometry_ok", r.geometry_ok},
         {"geometry_mode", r.geometry_mode},
         {"spectral_gap", r.spectral_gap},
         {"spectral_gap_approximate", r.spectral_gap_approximate},
         {"r_coupling", r.r_coupling},
         {"disc_radii", r.disc_radii},
         {"notes", r.notes}};
  json fails = json::array();
  for (const auto& w : r.A_witnesses)
    if (!w.ok) fails.push_back(to_json(w));
  for (const auto& w : r.A2_witnesses)
    if (!w.ok) fails.push_back(to_json(w));
  a["failing"] = fails;
  json all = json::array();
  for (const auto& w : r.A_witnesses) all.push_back(to_json(w));
  a["A_witnesses"] = all;
  return a;
}

json to_json(const FitReport& f) {
  json j{{"C_tilde", f.C_tilde},
         {"D_tilde", f.D_tilde},
         {"C_fit", f.C_fit},
         {"slope_residual", f.slope_residual},
         {"n_lo", f.n_lo},
         {"n_hi", f.n_hi},
         {"envelope_violations", f.envelope_violations},
         {"degenerate", f.degenerate},
         {"with_gamma", f.with_gamma}};
  if (!f.per_h.empty()) {
    json rows = json::array();
    for (const auto& ph : f.per_h)
      rows.push_back({{"h", ph.h}, {"B", ph.B}, {"D", ph.D}, {"A", ph.A}, {"m_h", ph.m_h}, {"degenerate", ph.degenerate}});
    j["per_h"] = rows;
    j["per_h_ok"] = f.per_h_ok;
    j["B_exponent"] = f.B_exponent;
    j["A1"] = f.A1;
    j["A2"] = f.A2;
    j["A3"] = f.A3;
  }
  return j;
}

// Fixed 17-significant-digit formatting, LF line endings.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& header) : f_(std::fopen(path.string().c_str(), "wb")) {
    if (!f_) throw std::runtime_error("cannot write " + path.string());
    std::fputs(header.c_str(), f_);
    std::fputc('\n', f_);
  }
  ~CsvWriter() {
    if (f_) std::fclose(f_);
  }
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  CsvWriter& i(long v) {
    sep();
    std::fprintf(f_, "%ld", v);
    return *this;
  }
  CsvWriter& d(double v) {
    sep();
    std::fprintf(f_, "%.17g", v);
    return *this;
  }
  void end() {
    std::fputc('\n', f_);
    first_ = true;
  }

 private:
  void sep() {
    if (!first_) std::fputc(',', f_);
    first_ = false;
  }
  std::FILE* f_;
  bool first_ = true;
};

struct Context {
  const RunConfig& cfg;
  ProblemSpec p;
  AssumptionReport rep;
  json& report;
  std::filesystem::path out;
  std::optional<BivariateSeries> F;
  std::optional<SpiralGrid> W;
  std::optional<WeightedGrid> w;
};

const BivariateSeries& formal(Context& c) {
  if (!c.F) c.F = solve_formal(c.p);
  return *c.F;
}

void stage_formal(Context& c) {
  const auto& F = formal(c);
  const double res = residual_formal(c.p, F);
  c.report["formal"] = {{"M", F.M()}, {"H", F.H()}, {"residual", res}, {"max_abs", F.max_abs()}};
  CsvWriter csv(c.out / "formal.csv", "m,h,re,im");
  for (int m = 0; m <= F.M(); ++m)
    for (int h = 0; h <= F.H(); ++h) {
      csv.i(m).i(h).d(F(m, h).real()).d(F(m, h).imag());
      csv.end();
    }
}

void stage_borel(Context& c) {
  TaylorResult tr = wh_taylor(c.p);
  c.report["borel"] = {{"discrepancy", tr.discrepancy}};
  CsvWriter csv(c.out / "borel.csv", "n,h,re,im");
  for (int n = 0; n <= tr.coeffs.M(); ++n)
    for (int h = 0; h <= tr.coeffs.H(); ++h) {
      csv.i(n).i(h).d(tr.coeffs(n, h).real()).d(tr.coeffs(n, h).imag());
      csv.end();
    }
}

void stage_spiral(Context& c) {
  if (c.W) return;
  c.W = wh_spiral(c.p, c.rep);
  c.w = spiral_sup(*c.W);
  GrowthFit g = growth_fit(*c.w, c.p.q.modulus, -20, 20);
  json js{{"base_points", json::array()},
          {"l_min", c.W->l_min()},
          {"l_max", c.W->l_max()},
          {"H", c.W->H()},
          {"all_finite", c.W->all_finite()},
          {"growth", {{"T", g.T}, {"logC", g.logC}, {"l_lo", g.l_lo}, {"l_hi", g.l_hi}, {"ok", g.ok}}}};
  for (cplx x : c.W->base_points()) js["base_points"].push_back(qdde::to_json(x));
  const double r0_fit = g.ok ? auto_r0(c.p, g.T) : 0.0;
  js["r0_from_growth"] = r0_fit;
  if (c.p.r0_auto) {
    if (!g.ok) throw std::runtime_error("r0 = auto: growth fit failed");
    c.p.domain.r0 = r0_fit;
  } else if (g.ok && c.p.domain.r0 > r0_fit) {
    js["r0_warning"] = "r0 exceeds the radius induced by the fitted growth constant";
  }
  js["r0"] = c.p.domain.r0;
  c.report["spiral"] = js;

  CsvWriter csv(c.out / "spiral.csv", "x_index,l,h,re,im");
  const auto& W = *c.W;
  for (std::size_t xi = 0; xi < W.base_points().size(); ++xi)
    for (int l = W.l_min(); l <= W.l_max(); ++l)
      for (int h = 0; h <= W.H(); ++h) {
        csv.i(static_cast<long>(xi)).i(l).i(h).d(W(xi, l, h).real()).d(W(xi, l, h).imag());
        csv.end();
      }
}

void stage_evaluate(Context& c) {
  if (!c.cfg.t) throw std::runtime_error("evaluate: --t is required");
  stage_spiral(c);
  const cplx t = *c.cfg.t, z = c.cfg.z.value_or(cplx{});
  DomainCheck dc = in_spiral_domain(t, c.p.domain, c.p.q, c.p.trunc.tail_tol);
  EvalResult r = evaluate_X(c.p, *c.W, t, z);
  c.report["evaluate"] = {{"t", qdde::to_json(t)},
                          {"z", qdde::to_json(z)},
                          {"value", qdde::to_json(r.value)},
                          {"h_tail", r.h_tail},
                          {"domain_margin", dc.margin}};
}

void stage_majorant(Context& c) {
  stage_spiral(c);
  const auto& w = *c.w;
  const ProblemSpec& p = c.p;
  json jm;
  WeightedGrid v = solve_majorant_E(p, c.rep, w);
  const int l_lo = std::max(-20, w.l_min()), l_hi = std::min(20, w.l_max()), h_hi = std::min(16, w.H());
  jm["domination"] = {{"l_lo", l_lo}, {"l_hi", l_hi}, {"h_hi", h_hi},
                      {"violations", domination_violations(w, v, l_lo, l_hi, h_hi)},
                      {"violations_full_window", domination_violations(w, v, w.l_min(), w.l_max(), w.H())}};

  const MajorantSystem sys = e_system(p, c.rep);
  const NormParams base{c.rep.T1 > 0 ? c.rep.T1 : 1.0, 1.0, p.q.modulus};
  XSearch xs = search_X(OperatorKind::A, sys, base, p.trunc.l_min, p.trunc.l_max, p.trunc.H);
  NormParams np = base;
  np.X = xs.X;
  ContractionResult cr = contraction_ratio(OperatorKind::A, sys, np, 100, p.trunc.l_min, p.trunc.l_max, p.trunc.H, 1);
  NeumannResult nr = solve_majorant_E_neumann(sys, w, np);
  double route_gap = 0;
  for (int l = v.l_min(); l <= v.l_max(); ++l)
    for (int h = 0; h <= v.H(); ++h) {
      const double a = v(l, h), b = nr.V(l, h);
      const double den = std::max(std::abs(a), std::abs(b));
      if (den > 0) route_gap = std::max(route_gap, std::abs(a - b) / den);
    }
  jm["E"] = {{"T", np.T},
             {"X", xs.X},
             {"x_search_ok", xs.ok},
             {"halvings", xs.halvings},
             {"operator_norm", xs.op_norm},
             {"contraction_ratio", cr.ratio},
             {"contraction_samples", cr.samples_used},
             {"neumann_iterations", nr.iterations},
             {"neumann_residual", nr.residual},
             {"neumann_max_increment_ratio", nr.max_increment_ratio},
             {"recursion_vs_neumann", route_gap},
             {"norm_V", norm_E(v, np)}};

  const int n_max = std::min(20, p.trunc.M), j_max = std::min(12, p.trunc.H);
  const BivariateSeries taylor = wh_taylor_direct(p, n_max, std::max(j_max, p.S));
  DerivativeBound db = derivative_bound(p, taylor, n_max, j_max);
  jm["H"] = {{"C1", db.C1}, {"T1", db.T1}, {"X1", db.X1}, {"operator_norm", db.op_norm},
             {"violations", db.violations}, {"worst_ratio", db.worst_ratio}, {"n_max", n_max}, {"j_max", j_max}};
  c.report["majorant"] = jm;
}

void stage_asymptotics(Context& c) {
  stage_spiral(c);
  const ProblemSpec& p = c.p;
  const auto& F = formal(c);
  const auto ts = t_samples(p, p.fit.t_rays, p.fit.t_points);
  if (ts.empty()) throw DomainError("asymptotics: no t sample lies in the domain");
  std::vector<cplx> zs = c.cfg.z ? std::vector<cplx>{*c.cfg.z} : std::vector<cplx>{0.0, 1.0};
  json ja{{"t_samples", json::array()}, {"fits", json::array()}};
  for (cplx t : ts) ja["t_samples"].push_back(qdde::to_json(t));
  CsvWriter csv(c.out / "remainder.csv", "z_index,n,t_index,R,rho");
  for (std::size_t zi = 0; zi < zs.size(); ++zi) {
    RemainderProfile prof = remainder_profile(p, *c.W, F, zs[zi], p.fit.N, ts);
    FitReport fit = gevrey_fit(prof);
    json jf = to_json(fit);
    jf["z"] = qdde::to_json(zs[zi]);
    jf["rho"] = prof.rho;
    jf["h_tail"] = prof.h_tail;
    ja["fits"].push_back(jf);
    for (int n = 1; n <= prof.N; ++n)
      for (std::size_t ti = 0; ti < ts.size(); ++ti) {
        csv.i(static_cast<long>(zi)).i(n).i(static_cast<long>(ti));
        csv.d(prof.R[static_cast<std::size_t>(n - 1)][ti]).d(prof.rho[static_cast<std::size_t>(n - 1)]);
        csv.end();
      }
  }
  FitReport per_h;
  per_h_constants(p, *c.W, F, p.fit.N, ts, per_h);
  json jp = to_json(per_h);
  ja["per_h"] = {{"rows", jp["per_h"]}, {"ok", per_h.per_h_ok}, {"B_exponent", per_h.B_exponent},
                 {"A1", per_h.A1}, {"A2", per_h.A2}, {"A3", per_h.A3}, {"expected_exponent", double(p.r1) / p.r2}};
  std::vector<int> ms;
  for (int m = -5; m <= 5; ++m) ms.push_back(m);
  ja["K1"] = measure_K1(ms, ts, p.domain, p.q, p.trunc.tail_tol);
  c.report["asymptotics"] = ja;
}

}  // namespace

std::optional<Command> parse_command(const std::string& name) {
  for (Command c : {Command::check, Command::solve_formal, Command::borel, Command::spiral, Command::evaluate,
                    Command::asymptotics, Command::majorant, Command::all})
    if (command_name(c) == name) return c;
  return std::nullopt;
}

std::string command_name(Command c) {
  switch (c) {
    case Command::check: return "check";
    case Command::solve_formal: return "solve-formal";
    case Command::borel: return "borel";
    case Command::spiral: return "spiral";
    case Command::evaluate: return "evaluate";
    case Command::asymptotics: return "asymptotics";
    case Command::majorant: return "majorant";
    case Command::all: return "all";
  }
  return "?";
}

cplx parse_complex(const std::string& s) {
  std::stringstream ss(s);
  std::string re, im;
  std::getline(ss, re, ',');
  std::getline(ss, im);
  try {
    std::size_t used = 0;
    const double r = std::stod(re, &used);
    if (used != re.size()) throw std::invalid_argument(s);
    double i = 0;
    if (!im.empty()) {
      i = std::stod(im, &used);
      if (used != im.size()) throw std::invalid_argument(s);
    }
    return {r, i};
  } catch (const std::exception&) {
    throw std::invalid_argument("expected RE,IM but got '" + s + "'");
  }
}

RunResult run(const RunConfig& cfg) {
  RunResult res;
  json& report = res.report;
  report["command"] = command_name(cfg.command);
  const std::filesystem::path out(cfg.out_dir);
  auto write_report = [&] {
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    std::FILE* f = std::fopen((out / "report.json").string().c_str(), "wb");
    if (!f) return false;
    const std::string text = report.dump(2) + "\n";
    std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);
    return true;
  };
  try {
    std::filesystem::create_directories(out);
    json doc;
    ProblemSpec p = load_problem(cfg.problem_path, cfg.overrides, &doc);
    if (cfg.tol) {
      p.trunc.tail_tol = *cfg.tol;
      p.check_invariants();
    }
    report["provenance"] = {{"version", kVersion},
                            {"problem_path", cfg.problem_path},
                            {"problem_hash", problem_hash(doc)},
                            {"overrides", cfg.overrides},
                            {"problem", doc},
                            {"truncation",
                             {{"M", p.trunc.M}, {"H", p.trunc.H}, {"l_min", p.trunc.l_min}, {"l_max", p.trunc.l_max},
                              {"tail_tol", p.trunc.tail_tol}}},
                            {"fit", {{"N", p.fit.N}, {"t_rays", p.fit.t_rays}, {"t_points", p.fit.t_points}}},
                            {"q", qdde::to_json(p.q.value())}};
    AssumptionReport rep = validate(p);
    report["assumptions"] = to_json(rep);
    Context ctx{cfg, p, rep, report, out, {}, {}, {}};

    const Command cmd = cfg.command;
    auto wants = [cmd](std::initializer_list<Command> cs) {
      return cmd == Command::all || std::find(cs.begin(), cs.end(), cmd) != cs.end();
    };
    // Formal stages do not depend on the assumptions.
    if (wants({Command::solve_formal})) stage_formal(ctx);
    if (wants({Command::borel})) stage_borel(ctx);
    const bool analytic = wants({Command::spiral, Command::evaluate, Command::majorant, Command::asymptotics});
    if (!rep.all_ok()) {
      if (analytic) report["skipped"] = "assumption check failed; analytic stages not run";
      res.exit_code = 2;
    } else {
      if (wants({Command::spiral})) stage_spiral(ctx);
      if (cmd == Command::evaluate || (cmd == Command::all && cfg.t)) stage_evaluate(ctx);
      if (wants({Command::majorant})) stage_majorant(ctx);
      if (wants({Command::asymptotics})) stage_asymptotics(ctx);
    }
    report["exit_code"] = res.exit_code;
    if (!write_report()) throw std::runtime_error("cannot write report.json");
  } catch (const std::exception& e) {
    res.exit_code = 1;
    res.error = e.what();
    if (const auto* pe = dynamic_cast<const ProblemError*>(&e)) report["error_field"] = pe->field;
    report["error"] = res.error;
    report["exit_code"] = 1;
    write_report();
  }
  return res;
}

}  // namespace qdde
