#include "polydg/study.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace polydg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("polydg_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

StudyConfig small(const std::string& text, const fs::path& out) {
  StudyConfig c = parse_config(text);
  c.out_dir = out.string();
  return c;
}

}  // namespace

TEST(Config, DefaultsWhenEmpty) {
  const StudyConfig c = parse_config("");
  EXPECT_EQ(c.problem, "example1");
  EXPECT_EQ(c.mesh.family, "voronoi");
  EXPECT_DOUBLE_EQ(c.solve.tol, 1e-10);
  EXPECT_EQ(c.solve.method, SolveMethod::Auto);
  EXPECT_DOUBLE_EQ(c.penalty.constants.c_sigma, 10.0);
  EXPECT_DOUBLE_EQ(c.penalty.constants.c_tau, 10.0);
}

TEST(Config, ReadsEveryKey) {
  const StudyConfig c = parse_config(R"(
[problem]
name = "custom"
terms = [[2.5, 2, 0], [-1, 0, 1]]
[mesh]
family = "agglomerated"
sizes = [8, 32]
lloyd_iters = 3
seed = 99
fine_n = 16
[degrees]
p = [3]
[penalty]
regime = "arbitrary"
c_sigma = 4
c_tau = 5.5
c_inv1 = 2
c_inv2 = 3
p_coverable = false
[solve]
tol = 1e-9
max_iter = 77
method = "cg"
condition = false
coercivity = false
[output]
dir = "somewhere"
matrix_market = true
[run]
threads = 3
[psweep]
cells = 9
p = [2, 4]
[verify]
triangles = 5
p_max = 2
samples = 0
)");
  ASSERT_EQ(c.custom_terms.size(), 2u);
  EXPECT_DOUBLE_EQ(c.custom_terms[0].c, 2.5);
  EXPECT_EQ(c.custom_terms[1].j, 1);
  EXPECT_EQ(c.mesh.family, "agglomerated");
  EXPECT_EQ(c.mesh.sizes, (std::vector<int>{8, 32}));
  EXPECT_EQ(c.mesh.seed, 99u);
  EXPECT_EQ(c.mesh.fine_n, 16);
  EXPECT_EQ(c.degrees, std::vector<int>{3});
  EXPECT_EQ(c.penalty.regime, Regime::ArbitraryFaces);
  EXPECT_DOUBLE_EQ(c.penalty.constants.c_tau, 5.5);
  EXPECT_FALSE(c.penalty.p_coverable);
  EXPECT_EQ(c.solve.max_iter, 77);
  EXPECT_EQ(c.solve.method, SolveMethod::CG);
  EXPECT_FALSE(c.condition);
  EXPECT_TRUE(c.matrix_market);
  EXPECT_EQ(c.threads, 3);
  EXPECT_EQ(c.psweep_degrees, (std::vector<int>{2, 4}));
  EXPECT_EQ(c.verify_p_max, 2);
}

TEST(Config, ShippedConfigsParse) {
  for (const char* name : {"example1.toml", "example2.toml", "verify.toml", "custom_quartic.toml"})
    EXPECT_NO_THROW(load_config(std::string(POLYDG_CONFIG_DIR) + "/" + name)) << name;
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config("[mesh]\nsizes = [64, 64]\n"), ConfigError);
  EXPECT_THROW(parse_config("[mesh]\nsizes = [256, 64]\n"), ConfigError);
  EXPECT_THROW(parse_config("[mesh]\nfamily = \"hexagons\"\n"), ConfigError);
  EXPECT_THROW(parse_config("[problem]\nname = \"example9\"\n"), ConfigError);
  EXPECT_THROW(parse_config("[problem]\nname = \"custom\"\n"), ConfigError);
  EXPECT_THROW(parse_config("[degrees]\np = [1, 2]\n"), ConfigError);
  EXPECT_THROW(parse_config("[solve]\ntol = \"small\"\n"), ConfigError);
  EXPECT_THROW(parse_config("[mesh\nsizes = 3"), ConfigError);
  EXPECT_THROW(parse_config("[penalty]\nregime = \"loose\"\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("[solve]\nmethod = \"lu\"\n"), std::invalid_argument);
}

TEST(LineFit, ExactLineAndConstant) {
  const LineFit f = fit_line({2, 3, 4, 5}, {1, -1, -3, -5});
  EXPECT_NEAR(f.slope, -2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 5.0, 1e-13);
  EXPECT_NEAR(f.r2, 1.0, 1e-14);
  EXPECT_NEAR(fit_line({1, 2, 3}, {4, 4, 4}).slope, 0.0, 1e-15);
  EXPECT_TRUE(std::isnan(fit_line({1}, {2}).slope));
  // Known R^2: points (0,0), (1,1), (2,0) have no linear trend.
  EXPECT_NEAR(fit_line({0, 1, 2}, {0, 1, 0}).r2, 0.0, 1e-15);
}

TEST(Study, QuadraticIsReproducedAndFilesAreWritten) {
  const fs::path out = scratch("study_quadratic");
  const StudyConfig c = small(R"(
[problem]
name = "custom"
terms = [[1, 2, 0], [-2, 1, 1], [0.5, 0, 2], [1, 0, 1], [3, 0, 0]]
[mesh]
sizes = [4, 16]
lloyd_iters = 5
seed = 3
[degrees]
p = [2]
)",
                              out);
  const StudyResult r = run_study(c);
  ASSERT_TRUE(r.all_converged);
  for (const auto& run : r.runs) {
    EXPECT_LE(run.err_dg, 1e-8);
    EXPECT_LE(run.err_h1, 1e-8);
    EXPECT_LE(run.err_l2, 1e-8);
    EXPECT_GT(run.coercivity_min, 0.0);
    EXPECT_GT(run.cond, 1.0);
  }
  EXPECT_TRUE(fs::exists(out / "plot.gp"));
  const std::string csv = slurp(out / "rates_p2.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "level,h_max,dofs,err_dg,err_h1,err_l2,eoc_dg,eoc_h1,eoc_l2");
  const Json j = Json::parse(slurp(out / "study.json"));
  EXPECT_EQ(j["config"]["penalty"]["c_sigma"], 10.0);
  EXPECT_EQ(j["config"]["penalty"]["regime"], "bounded");
  EXPECT_EQ(j["meshes"].size(), 2u);
  EXPECT_TRUE(j["meshes"][0].contains("face_simplex_C_s"));
  EXPECT_TRUE(j["runs"][0]["condition"].contains("estimate"));
  EXPECT_TRUE(j["all_converged"].get<bool>());
}

TEST(Study, OutputIsReproducible) {
  const std::string text = "[mesh]\nsizes = [4, 9]\nlloyd_iters = 4\n[degrees]\np = [2, 3]\n";
  const fs::path a = scratch("repro_a"), b = scratch("repro_b");
  run_study(small(text, a));
  run_study(small(text, b));
  EXPECT_EQ(slurp(a / "study.json"), slurp(b / "study.json"));
  EXPECT_EQ(slurp(a / "rates_p3.csv"), slurp(b / "rates_p3.csv"));
}

TEST(Study, FailedRunIsRecordedAndReported) {
  const fs::path out = scratch("study_fail");
  // The arbitrary-face regime does not admit p = 4 unless explicitly allowed.
  const StudyConfig c =
      small("[mesh]\nsizes = [4, 9]\nlloyd_iters = 2\n[degrees]\np = [2, 4]\n[penalty]\nregime = \"arbitrary\"\n", out);
  const StudyResult r = run_study(c);
  EXPECT_FALSE(r.all_converged);
  ASSERT_EQ(r.runs.size(), 4u);
  EXPECT_TRUE(r.runs[0].converged);
  EXPECT_FALSE(r.runs[1].converged);
  EXPECT_FALSE(r.runs[1].message.empty());
  EXPECT_TRUE(fs::exists(out / "study.json"));
  EXPECT_EQ(r.rows(2).size(), 2u);
}

TEST(Psweep, SingleCellDofsAndExactFlags) {
  const fs::path out = scratch("psweep_cubic");
  const StudyConfig c = small(R"(
[problem]
name = "custom"
terms = [[1, 3, 0], [2, 1, 2], [-1, 0, 2], [1, 0, 0]]
[psweep]
cells = 1
p = [2, 3, 4]
)",
                              out);
  const PsweepResult r = run_prefinement(c);
  ASSERT_EQ(r.runs.size(), 3u);
  for (const auto& run : r.runs) EXPECT_EQ(run.dofs, (run.p + 1) * (run.p + 2) / 2);
  EXPECT_FALSE(r.exact[0]);
  EXPECT_TRUE(r.exact[1]);
  EXPECT_TRUE(r.exact[2]);
  EXPECT_EQ(r.fit.points, 1);
  const std::string csv = slurp(out / "psweep.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "p,dofs,err_dg,err_h1,err_l2,exact");
  EXPECT_TRUE(fs::exists(out / "psweep.json"));
}

TEST(Psweep, SmoothSolutionDecays) {
  const StudyConfig c = small("[psweep]\ncells = 16\np = [2, 3, 4, 5]\n", scratch("psweep_smooth"));
  const PsweepResult r = run_prefinement(c);
  ASSERT_TRUE(r.all_converged);
  for (std::size_t i = 1; i < r.runs.size(); ++i) EXPECT_LT(r.runs[i].err_dg, r.runs[i - 1].err_dg);
  EXPECT_LT(r.fit.slope, 0.0);
}

TEST(Verify, SingleCellPasses) {
  const fs::path out = scratch("verify_single");
  const StudyConfig c = small("[mesh]\nsizes = [1]\n[degrees]\np = [2, 3, 6]\n[verify]\ntriangles = 20\np_max = 3\n", out);
  const VerifyResult r = run_verify(c);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.suites.size(), 7u);  // simplex + (polytopic, harmonic) x 3 degrees
  EXPECT_LE(r.dilation.spread, 0.01);
  const Json j = Json::parse(slurp(out / "verify.json"));
  EXPECT_TRUE(j["passed"].get<bool>());
  for (const auto& s : j["suites"]) {
    EXPECT_TRUE(s.contains("bound"));
    EXPECT_TRUE(s.contains("observed_max"));
    EXPECT_GE(s["min_slack"].get<double>(), 0.0);
  }
}
