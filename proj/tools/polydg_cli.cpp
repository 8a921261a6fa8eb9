// polydg: command-line driver for meshes, single solves, refinement studies
// and inequality checks.
#include "polydg/polydg.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

using namespace polydg;

namespace {

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out;
};

StudyConfig resolve(const GlobalFlags& g) {
  StudyConfig c = g.config.empty() ? StudyConfig{} : load_config(g.config);
  if (g.seed) c.mesh.seed = *g.seed;
  if (g.threads) c.threads = *g.threads;
  if (g.out) c.out_dir = *g.out;
  const auto errors = validate(c);
  if (!errors.empty()) {
    std::string msg = "invalid settings:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return c;
}

void write_mesh_creating_dirs(const std::string& path, const PolyMesh& m) {
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  write_mesh_file(path, m);
}

void print_mesh_summary(std::ostream& os, const PolyMesh& m, int p) {
  const MeshMetrics k = compute_metrics(m, p);
  Json j{{"cells", m.num_cells()},
         {"faces", m.num_faces()},
         {"vertices", m.num_vertices()},
         {"h_max", m.max_diameter()},
         {"max_faces_per_cell", k.face_count_max},
         {"shape_regularity_C_r", k.shape_regularity},
         {"face_simplex_C_s", k.face_simplex},
         {"theta", k.theta},
         {"valid", m.validate().empty()}};
  os << j.dump(2) << "\n";
}

int run_solve(const StudyConfig& c) {
  namespace fs = std::filesystem;
  MeshSettings ms = c.mesh;
  if (ms.family == "file")
    ms.files.resize(1);
  else
    ms.sizes.resize(1);
  const MeshLevel level = std::move(build_meshes(ms, &std::cerr).front());
  fs::create_directories(c.out_dir);
  RunOptions o = run_options(c);
  if (c.matrix_market) o.matrix_market_path = (fs::path(c.out_dir) / "A.mtx").string();
  const RunRecord r = run_one(level, c.degrees.front(), make_problem(c), c.penalty, c.solve, o);
  log_run(&std::cerr, r);
  Json j{{"kind", "solve"}, {"config", config_json(c)}, {"mesh", mesh_json(level)}, {"run", to_json(r)}};
  write_json(fs::path(c.out_dir) / "solve.json", j);
  return r.converged ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symmetric interior penalty DG for the biharmonic problem on polygonal meshes"};
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--config", g.config, "TOML configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "override mesh.seed");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "output directory (overrides output.dir)");

  auto* mesh = app.add_subcommand("mesh", "generate, agglomerate or inspect meshes")->fallthrough();
  mesh->require_subcommand(1);
  int cells = 64, lloyd = 100, fine_n = 256, degree = 2;
  std::string output, input;
  auto* gen = mesh->add_subcommand("generate", "clipped Voronoi mesh of the unit square")->fallthrough();
  gen->add_option("--cells", cells, "number of cells")->check(CLI::PositiveNumber);
  gen->add_option("--lloyd", lloyd, "Lloyd relaxation sweeps")->check(CLI::NonNegativeNumber);
  gen->add_option("-o,--output", output, "mesh file to write")->required();
  auto* agg = mesh->add_subcommand("agglomerate", "agglomerate a fine mesh into polygons")->fallthrough();
  agg->add_option("--input", input, "fine mesh file (default: criss-cross triangulation)")->check(CLI::ExistingFile);
  agg->add_option("--fine-n", fine_n, "criss-cross fine mesh has 2 n^2 triangles")->check(CLI::PositiveNumber);
  agg->add_option("--cells", cells, "target number of aggregates")->check(CLI::PositiveNumber);
  agg->add_option("-o,--output", output, "mesh file to write")->required();
  auto* inspect = mesh->add_subcommand("inspect", "print mesh metrics as JSON")->fallthrough();
  inspect->add_option("file", input, "mesh file")->required()->check(CLI::ExistingFile);
  inspect->add_option("--degree", degree, "degree used for theta")->check(CLI::Range(2, 20));

  auto* solve = app.add_subcommand("solve", "single solve on the first configured mesh and degree")->fallthrough();
  auto* study = app.add_subcommand("study", "h-refinement study: rates_p*.csv, study.json, plot.gp")->fallthrough();
  auto* psweep = app.add_subcommand("psweep", "p-refinement on a fixed mesh: psweep.csv, psweep.json")->fallthrough();
  auto* verify = app.add_subcommand("verify", "trace and inverse inequality suites: verify.json")->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    const StudyConfig c = resolve(g);
    if (gen->parsed()) {
      std::vector<std::string> log;
      const PolyMesh m = generate_voronoi(Rect{}, cells, lloyd, c.mesh.seed, &log);
      for (const auto& l : log) std::cerr << l << "\n";
      write_mesh_creating_dirs(output, m);
      print_mesh_summary(std::cout, m, degree);
      return 0;
    }
    if (agg->parsed()) {
      const PolyMesh fine = input.empty() ? criss_cross_mesh(Rect{}, fine_n, fine_n) : read_mesh_file(input);
      std::vector<std::string> log;
      const PolyMesh m = agglomerate(fine, cells, c.mesh.seed, &log);
      for (const auto& l : log) std::cerr << l << "\n";
      write_mesh_creating_dirs(output, m);
      print_mesh_summary(std::cout, m, degree);
      return 0;
    }
    if (inspect->parsed()) {
      print_mesh_summary(std::cout, read_mesh_file(input), degree);
      return 0;
    }
    if (solve->parsed()) return run_solve(c);
    if (study->parsed()) {
      const StudyResult r = run_study(c, &std::cerr);
      if (!r.all_converged) std::cerr << "some solves failed; see study.json\n";
      return r.all_converged ? 0 : 1;
    }
    if (psweep->parsed()) {
      const PsweepResult r = run_prefinement(c, &std::cerr);
      std::cerr << "fit log(err_dg) = " << r.fit.intercept << " + " << r.fit.slope << " p, R^2 = " << r.fit.r2 << "\n";
      return r.all_converged ? 0 : 1;
    }
    if (verify->parsed()) {
      const VerifyResult r = run_verify(c, &std::cerr);
      if (!r.passed) {
        std::cerr << "bound violated; witnesses in verify.json\n";
        return 2;
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 64;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
