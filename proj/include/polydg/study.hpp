#pragma once

#include "polydg/agglomerate.hpp"
#include "polydg/assembly.hpp"
#include "polydg/config.hpp"
#include "polydg/mesh_io.hpp"
#include "polydg/metrics.hpp"
#include "polydg/norms.hpp"
#include "polydg/solve.hpp"
#include "polydg/verify.hpp"
#include "polydg/voronoi.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <ostream>
#include <string>
#include <vector>

namespace polydg {

using Json = nlohmann::ordered_json;

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Meshes

struct MeshLevel {
  std::string label;
  PolyMesh mesh;
  std::vector<std::string> log;
};

inline std::vector<MeshLevel> build_meshes(const MeshSettings& ms, std::ostream* log = nullptr) {
  std::vector<MeshLevel> out;
  if (ms.family == "file") {
    for (const auto& f : ms.files) out.push_back({f, read_mesh_file(f), {}});
    return out;
  }
  std::optional<PolyMesh> fine;
  if (ms.family == "agglomerated") {
    fine = criss_cross_mesh(Rect{}, ms.fine_n, ms.fine_n);
    if (log) *log << "fine mesh: " << fine->num_cells() << " triangles\n";
  }
  for (int n : ms.sizes) {
    MeshLevel m;
    m.label = ms.family + "-" + std::to_string(n);
    if (fine)
      m.mesh = agglomerate(*fine, n, ms.seed, &m.log);
    else
      m.mesh = generate_voronoi(Rect{}, n, ms.lloyd_iters, ms.seed, &m.log);
    if (log) *log << "mesh " << m.label << ": " << m.mesh.num_cells() << " cells, h_max " << m.mesh.max_diameter() << "\n";
    out.push_back(std::move(m));
  }
  return out;
}

inline Json mesh_json(const MeshLevel& m) {
  const PolyMesh& mesh = m.mesh;
  Json j;
  j["label"] = m.label;
  j["cells"] = mesh.num_cells();
  j["faces"] = mesh.num_faces();
  j["h_max"] = mesh.max_diameter();
  const MeshMetrics k = compute_metrics(mesh, 2);
  j["max_faces_per_cell"] = k.face_count_max;
  j["shape_regularity_C_r"] = k.shape_regularity;
  j["face_simplex_C_s"] = k.face_simplex;
  j["diagnostics"] = m.log;
  return j;
}

// ---------------------------------------------------------------------------
// One (mesh, p) run

struct RunRecord {
  std::string mesh;
  int cells = 0;
  int p = 0;
  int dofs = 0;
  double h_max = 0.0;
  double theta = 1.0;
  double sigma_min = 0.0, sigma_max = 0.0, tau_min = 0.0, tau_max = 0.0;
  bool converged = false;
  std::string message;
  std::string method;
  int iterations = 0;
  double residual = kNaN;
  double backward_error = kNaN;
  double err_dg = kNaN, err_h1 = kNaN, err_l2 = kNaN;
  double norm_dg_exact = kNaN;
  double cond = kNaN, lambda_min = kNaN, lambda_max = kNaN;
  double coercivity_min = kNaN, coercivity_max = kNaN;
  double seconds = 0.0;  // logged, not written to JSON
};

inline Json to_json(const RunRecord& r) {
  return Json{{"mesh", r.mesh},
              {"cells", r.cells},
              {"p", r.p},
              {"dofs", r.dofs},
              {"h_max", r.h_max},
              {"theta", r.theta},
              {"sigma", {{"min", r.sigma_min}, {"max", r.sigma_max}}},
              {"tau", {{"min", r.tau_min}, {"max", r.tau_max}}},
              {"solve",
               {{"converged", r.converged},
                {"method", r.method},
                {"iterations", r.iterations},
                {"residual", r.residual},
                {"backward_error", r.backward_error},
                {"message", r.message}}},
              {"errors", {{"dg", r.err_dg}, {"h1", r.err_h1}, {"l2", r.err_l2}, {"dg_norm_of_exact", r.norm_dg_exact}}},
              {"condition", {{"estimate", r.cond}, {"lambda_min", r.lambda_min}, {"lambda_max", r.lambda_max}}},
              {"coercivity", {{"lambda_min", r.coercivity_min}, {"lambda_max", r.coercivity_max}}}};
}

struct RunOptions {
  bool condition = true;
  bool coercivity = true;
  std::string matrix_market_path;  // empty: none
  int threads = 1;
};

inline RunRecord run_one(const MeshLevel& level, int p, const ExactSolution& u, const PenaltyConfig& penalty,
                         const SolveOptions& solve, const RunOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const PolyMesh& mesh = level.mesh;
  RunRecord r;
  r.mesh = level.label;
  r.cells = mesh.num_cells();
  r.p = p;
  r.h_max = mesh.max_diameter();
  const std::vector<int> deg(static_cast<std::size_t>(mesh.num_cells()), p);
  r.theta = compute_metrics(mesh, deg).theta;

  DiscretizationOptions dopt;
  dopt.threads = opt.threads;
  const Discretization d = make_discretization(mesh, deg, make_penalties(mesh, deg, penalty), dopt);
  r.dofs = d.dofs.total;
  r.sigma_min = *std::min_element(d.penalty.sigma.begin(), d.penalty.sigma.end());
  r.sigma_max = *std::max_element(d.penalty.sigma.begin(), d.penalty.sigma.end());
  r.tau_min = *std::min_element(d.penalty.tau.begin(), d.penalty.tau.end());
  r.tau_max = *std::max_element(d.penalty.tau.begin(), d.penalty.tau.end());

  const DgSystem s =
      assemble_system(d, u.bilap, u.value, [&](const Point& x, const Vec2& n) { return u.g_neumann(x, n); });
  if (!opt.matrix_market_path.empty()) write_matrix_market_file(opt.matrix_market_path, s.matrix);

  std::unique_ptr<SpdFactor> factor;
  const bool need_factor = solve.method != SolveMethod::CG || opt.condition || opt.coercivity;
  if (need_factor) factor = std::make_unique<SpdFactor>(s.matrix);
  try {
    if (factor && !factor->ok())
      throw SolveError("Cholesky factorisation failed: matrix is not numerically positive definite", {});
    const SolveReport rep = solve_spd(s.matrix, s.rhs, s.dofs, solve, factor.get(), extended_residual(d, s.rhs));
    r.converged = true;
    r.method = rep.method;
    r.iterations = rep.iterations;
    r.residual = rep.residual;
    r.backward_error = rep.backward_error;
    r.err_dg = dg_norm_error(d, rep.x, u);
    r.err_h1 = broken_h1_error(d, rep.x, u);
    r.err_l2 = l2_error(d, rep.x, u);
    r.norm_dg_exact = dg_norm_of_exact(d, u);
  } catch (const SolveError& e) {
    r.message = e.what();
    if (!e.history().empty()) r.residual = e.history().back();
  }
  if (factor && factor->ok()) {
    if (opt.condition) {
      const ConditionEstimate c = estimate_condition(s.matrix, factor.get());
      r.cond = c.cond;
      r.lambda_min = c.lambda_min;
      r.lambda_max = c.lambda_max;
    }
    if (opt.coercivity) {
      const SparseMatrix G = assemble_dg_gram(d);
      const SpdFactor gf(G);
      if (gf.ok()) {
        const GeneralizedExtremes g = generalized_extremes(s.matrix, G, *factor, gf);
        r.coercivity_min = g.lambda_min;
        r.coercivity_max = g.lambda_max;
      }
    }
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline void log_run(std::ostream* log, const RunRecord& r) {
  if (!log) return;
  *log << "  " << r.mesh << " p=" << r.p << " dofs=" << r.dofs;
  if (r.converged)
    *log << " err_dg=" << r.err_dg << " err_l2=" << r.err_l2 << " (" << r.method << ", residual " << r.residual
         << ")";
  else
    *log << " FAILED: " << r.message;
  if (!std::isnan(r.cond)) *log << " cond~" << r.cond;
  if (!std::isnan(r.coercivity_min)) *log << " coercivity " << r.coercivity_min;
  *log << " [" << r.seconds << " s]\n";
}

inline Json penalty_json(const PenaltyConfig& p) {
  return Json{{"regime", to_string(p.regime)},
              {"c_sigma", p.constants.c_sigma},
              {"c_tau", p.constants.c_tau},
              {"c_inv1", p.constants.c_inv1},
              {"c_inv2", p.constants.c_inv2},
              {"p_coverable", p.p_coverable},
              {"allow_any_degree", p.allow_any_degree}};
}

inline Json config_json(const StudyConfig& c) {
  Json terms = Json::array();
  for (const auto& t : c.custom_terms) terms.push_back({t.c, t.i, t.j});
  return Json{{"problem", c.problem},
              {"custom_terms", terms},
              {"mesh",
               {{"family", c.mesh.family},
                {"sizes", c.mesh.sizes},
                {"lloyd_iters", c.mesh.lloyd_iters},
                {"seed", c.mesh.seed},
                {"fine_n", c.mesh.fine_n},
                {"files", c.mesh.files}}},
              {"degrees", c.degrees},
              {"penalty", penalty_json(c.penalty)},
              {"solve",
               {{"tol", c.solve.tol},
                {"max_iter", c.solve.max_iter},
                {"method", to_string(c.solve.method)},
                {"backward_error_floor", kBackwardErrorFloor}}},
              {"threads", c.threads}};
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << j.dump(2) << "\n";
}

inline RunOptions run_options(const StudyConfig& c) {
  RunOptions o;
  o.condition = c.condition;
  o.coercivity = c.coercivity;
  o.threads = c.threads;
  return o;
}

// ---------------------------------------------------------------------------
// h-refinement study

struct StudyResult {
  std::vector<MeshLevel> meshes;
  std::vector<RunRecord> runs;  // mesh-major, degrees in config order
  bool all_converged = true;

  std::vector<ErrorRow> rows(int p) const {
    std::vector<ErrorRow> out;
    for (const auto& r : runs)
      if (r.p == p && r.converged) out.push_back({r.h_max, r.dofs, r.err_dg, r.err_h1, r.err_l2});
    return out;
  }
};

inline std::string gnuplot_script(const std::vector<int>& degrees) {
  std::ostringstream os;
  os << "set datafile separator ','\nset logscale xy\nset key left top\nset xlabel 'h_max'\nset terminal pngcairo\n";
  const char* names[] = {"dg", "h1", "l2"};
  for (int k = 0; k < 3; ++k) {
    os << "set output 'error_" << names[k] << ".png'\nset ylabel 'err_" << names[k] << "'\nplot ";
    for (std::size_t i = 0; i < degrees.size(); ++i) {
      if (i) os << ", \\\n     ";
      os << "'rates_p" << degrees[i] << ".csv' skip 1 using 2:" << 4 + k << " with linespoints title 'p=" << degrees[i]
         << "'";
    }
    os << "\n";
  }
  return os.str();
}

// Writes rates_p{p}.csv, study.json and plot.gp to c.out_dir. Failed solves
// are recorded and skipped in the rate tables.
inline StudyResult run_study(const StudyConfig& c, std::ostream* log = nullptr) {
  namespace fs = std::filesystem;
  const fs::path out(c.out_dir);
  fs::create_directories(out);
  StudyResult res;
  res.meshes = build_meshes(c.mesh, log);
  const ExactSolution u = make_problem(c);
  for (const auto& level : res.meshes)
    for (int p : c.degrees) {
      RunOptions o = run_options(c);
      if (c.matrix_market) o.matrix_market_path = (out / ("A_" + level.label + "_p" + std::to_string(p) + ".mtx")).string();
      RunRecord r;
      try {
        r = run_one(level, p, u, c.penalty, c.solve, o);
      } catch (const std::exception& e) {  // e.g. a degree the regime does not admit
        r.mesh = level.label;
        r.cells = level.mesh.num_cells();
        r.p = p;
        r.h_max = level.mesh.max_diameter();
        r.message = e.what();
      }
      log_run(log, r);
      res.all_converged = res.all_converged && r.converged;
      res.runs.push_back(std::move(r));
    }

  Json rates = Json::object();
  for (int p : c.degrees) {
    const auto rows = res.rows(p);
    std::ofstream csv(out / ("rates_p" + std::to_string(p) + ".csv"));
    write_rates_csv(csv, rows);
    Json e = Json::array();
    if (rows.size() >= 2)
      for (const auto& x : eoc_table(rows)) e.push_back({{"dg", x.dg}, {"h1", x.h1}, {"l2", x.l2}});
    rates[std::to_string(p)] = e;
  }
  std::ofstream(out / "plot.gp") << gnuplot_script(c.degrees);

  Json j;
  j["kind"] = "study";
  j["config"] = config_json(c);
  j["meshes"] = Json::array();
  for (const auto& m : res.meshes) j["meshes"].push_back(mesh_json(m));
  j["runs"] = Json::array();
  for (const auto& r : res.runs) j["runs"].push_back(to_json(r));
  j["eoc"] = rates;
  j["all_converged"] = res.all_converged;
  write_json(out / "study.json", j);
  return res;
}

// ---------------------------------------------------------------------------
// p-refinement on a fixed mesh

struct LineFit {
  double slope = kNaN;
  double intercept = kNaN;
  double r2 = kNaN;
  int points = 0;
};

// Least-squares line through (x, y).
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit f;
  f.points = static_cast<int>(x.size());
  if (x.size() < 2) return f;
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0.0 ? 1.0 : sxy * sxy / (sxx * syy);
  return f;
}

struct PsweepResult {
  MeshLevel mesh;
  std::vector<RunRecord> runs;
  std::vector<bool> exact;  // error at the solver floor relative to ||u||_DG
  LineFit fit;              // log(err_dg) against p over non-exact runs
  bool all_converged = true;
};

inline constexpr double kExactRelTol = 1e-8;

// Writes psweep.csv and psweep.json to c.out_dir.
inline PsweepResult run_prefinement(const StudyConfig& c, std::ostream* log = nullptr) {
  namespace fs = std::filesystem;
  const fs::path out(c.out_dir);
  fs::create_directories(out);
  MeshSettings ms = c.mesh;
  if (ms.family == "file")
    ms.files.resize(1);
  else
    ms.sizes = {c.psweep_cells};
  PsweepResult res;
  res.mesh = std::move(build_meshes(ms, log).front());
  const ExactSolution u = make_problem(c);
  std::vector<double> xs, ys;
  for (int p : c.psweep_degrees) {
    RunRecord r;
    try {
      r = run_one(res.mesh, p, u, c.penalty, c.solve, run_options(c));
    } catch (const std::exception& e) {
      r.mesh = res.mesh.label;
      r.p = p;
      r.message = e.what();
    }
    log_run(log, r);
    const bool exact = r.converged && r.err_dg <= kExactRelTol * r.norm_dg_exact;
    if (r.converged && !exact && r.err_dg > 0.0) {
      xs.push_back(p);
      ys.push_back(std::log(r.err_dg));
    }
    res.all_converged = res.all_converged && r.converged;
    res.exact.push_back(exact);
    res.runs.push_back(std::move(r));
  }
  res.fit = fit_line(xs, ys);

  std::ofstream csv(out / "psweep.csv");
  csv << "p,dofs,err_dg,err_h1,err_l2,exact\n" << std::setprecision(10);
  for (std::size_t i = 0; i < res.runs.size(); ++i) {
    const auto& r = res.runs[i];
    csv << r.p << "," << r.dofs << "," << r.err_dg << "," << r.err_h1 << "," << r.err_l2 << ","
        << (res.exact[i] ? 1 : 0) << "\n";
  }
  std::ofstream(out / "psweep.gp")
      << "set datafile separator ','\nset logscale y\nset xlabel 'p'\nset ylabel 'err_dg'\nset terminal pngcairo\n"
         "set output 'psweep.png'\nplot 'psweep.csv' skip 1 using 1:3 with linespoints title 'DG error'\n";
  Json j;
  j["kind"] = "psweep";
  j["config"] = config_json(c);
  j["mesh"] = mesh_json(res.mesh);
  j["runs"] = Json::array();
  for (std::size_t i = 0; i < res.runs.size(); ++i) {
    Json r = to_json(res.runs[i]);
    r["exact"] = static_cast<bool>(res.exact[i]);
    j["runs"].push_back(r);
  }
  j["fit"] = {{"quantity", "log(err_dg) vs p"},
              {"slope", res.fit.slope},
              {"intercept", res.fit.intercept},
              {"r2", res.fit.r2},
              {"points", res.fit.points}};
  j["all_converged"] = res.all_converged;
  write_json(out / "psweep.json", j);
  return res;
}

// ---------------------------------------------------------------------------
// Inequality suites

inline Json to_json(const InequalityWitness& w) {
  return Json{{"kind", w.kind},
              {"cell", w.cell},
              {"p", w.p},
              {"observed_max", w.max_ratio},
              {"bound", w.bound},
              {"slack", w.slack()},
              {"sample_count", w.sample_count},
              {"center", {w.center.x(), w.center.y()}},
              {"scale", {w.scale.x(), w.scale.y()}},
              {"argmax_coefficients", w.argmax},
              {"full_space_ratio", w.full_space_ratio}};
}

inline Json to_json(const SuiteReport& s) {
  Json j{{"name", s.name},
         {"checks", s.checks},
         {"violations", s.violations},
         {"passed", s.passed()},
         {"min_slack", s.checks ? s.min_slack : kNaN}};
  if (s.checks) {
    j["bound"] = s.worst.bound;
    j["observed_max"] = s.worst.max_ratio;
    j["worst"] = to_json(s.worst);
  }
  j["failures"] = Json::array();
  for (const auto& f : s.failures) j["failures"].push_back(to_json(f));
  return j;
}

struct DilationCheck {
  std::string mesh;
  int cell = 0;
  int p = 0;
  std::vector<double> factors;
  std::vector<double> scaled_ratio;  // ratio * s^2; constant under exact h^-2 scaling
  double spread = kNaN;             // max / min - 1
  static constexpr double kTolerance = 0.01;
  bool passed() const { return spread <= kTolerance; }
};

struct VerifyResult {
  std::vector<SuiteReport> suites;
  DilationCheck dilation;
  bool passed = true;
};

inline constexpr int kMaxHarmonicDegree = 6;

// Writes verify.json to c.out_dir. Suites: simplex trace on random triangles,
// then polytopic trace and harmonic H1 on every configured mesh and degree.
inline VerifyResult run_verify(const StudyConfig& c, std::ostream* log = nullptr) {
  namespace fs = std::filesystem;
  const fs::path out(c.out_dir);
  fs::create_directories(out);
  VerifyResult res;
  if (c.verify_triangles > 0) {
    res.suites.push_back(
        simplex_trace_suite(c.verify_triangles, c.verify_p_max, c.mesh.seed, c.verify_samples, c.threads));
    res.suites.back().name = "simplex_trace";
  }
  const auto meshes = build_meshes(c.mesh, log);
  for (const auto& m : meshes)
    for (int p : c.degrees) {
      SuiteReport t = polytopic_trace_suite(m.mesh, p, c.threads);
      t.name = "polytopic_trace/" + m.label + "/p" + std::to_string(p);
      res.suites.push_back(std::move(t));
      if (p <= kMaxHarmonicDegree) {
        SuiteReport h = harmonic_h1_suite(m.mesh, p, c.threads);
        h.name = "harmonic_h1/" + m.label + "/p" + std::to_string(p);
        res.suites.push_back(std::move(h));
      }
    }
  if (!meshes.empty()) {
    DilationCheck& dc = res.dilation;
    dc.mesh = meshes.front().label;
    dc.p = std::min(*std::max_element(c.degrees.begin(), c.degrees.end()), kMaxHarmonicDegree);
    dc.factors = {0.3, 0.7, 1.0, 1.9, 3.7};
    dc.scaled_ratio = harmonic_dilation_profile(meshes.front().mesh, dc.cell, dc.p, dc.factors);
    const auto [lo, hi] = std::minmax_element(dc.scaled_ratio.begin(), dc.scaled_ratio.end());
    dc.spread = *hi / *lo - 1.0;
  }
  for (const auto& s : res.suites) {
    res.passed = res.passed && s.passed();
    if (log)
      *log << "  " << s.name << ": " << s.checks << " checks, " << s.violations << " violations, min slack "
           << s.min_slack << "\n";
  }
  if (!meshes.empty()) {
    res.passed = res.passed && res.dilation.passed();
    if (log) *log << "  harmonic dilation spread " << res.dilation.spread << "\n";
  }

  Json j;
  j["kind"] = "verify";
  j["config"] = config_json(c);
  j["suites"] = Json::array();
  for (const auto& s : res.suites) j["suites"].push_back(to_json(s));
  if (!meshes.empty())
    j["dilation"] = {{"mesh", res.dilation.mesh},
                     {"cell", res.dilation.cell},
                     {"p", res.dilation.p},
                     {"factors", res.dilation.factors},
                     {"ratio_times_s2", res.dilation.scaled_ratio},
                     {"spread", res.dilation.spread},
                     {"tolerance", DilationCheck::kTolerance},
                     {"passed", res.dilation.passed()}};
  j["passed"] = res.passed;
  write_json(out / "verify.json", j);
  return res;
}

}  // namespace polydg
