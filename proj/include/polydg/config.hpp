#pragma once

#include "polydg/penalty.hpp"
#include "polydg/problems.hpp"
#include "polydg/solve.hpp"

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace polydg {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MeshSettings {
  std::string family = "voronoi";  // voronoi | agglomerated | file
  std::vector<int> sizes{64, 256, 1024};
  int lloyd_iters = 100;
  std::uint64_t seed = 42;
  int fine_n = 256;                // agglomerated: fine criss-cross mesh of 2 fine_n^2 triangles
  std::vector<std::string> files;  // family = file
};

struct StudyConfig {
  std::string problem = "example1";  // example1 | example2 | quartic | custom
  std::vector<Monomial> custom_terms;
  MeshSettings mesh;
  std::vector<int> degrees{2, 3};
  PenaltyConfig penalty;
  SolveOptions solve;
  bool condition = true;   // Lanczos condition estimate per run
  bool coercivity = true;  // lambda_min of (A, DG Gram) per run
  std::string out_dir = "out";
  bool matrix_market = false;
  int threads = 1;
  // psweep
  int psweep_cells = 64;
  std::vector<int> psweep_degrees{2, 3, 4, 5};
  // verify
  int verify_triangles = 1000;
  int verify_p_max = 6;
  int verify_samples = 20;
};

namespace detail {

template <class T>
T read_or(const toml::table& t, std::string_view path, T fallback) {
  const toml::node_view<const toml::node> n = t.at_path(path);
  if (!n) return fallback;
  if constexpr (std::is_same_v<T, bool>) {
    if (auto v = n.value_exact<bool>()) return *v;
  } else if constexpr (std::is_integral_v<T>) {
    if (auto v = n.value_exact<int64_t>()) return static_cast<T>(*v);
  } else if constexpr (std::is_floating_point_v<T>) {
    if (auto v = n.value<double>()) return *v;
  } else {
    if (auto v = n.value_exact<std::string>()) return *v;
  }
  throw ConfigError("config: '" + std::string(path) + "' has the wrong type");
}

template <class T>
std::vector<T> read_list(const toml::table& t, std::string_view path, std::vector<T> fallback) {
  const toml::node_view<const toml::node> n = t.at_path(path);
  if (!n) return fallback;
  const toml::array* arr = n.as_array();
  if (!arr) throw ConfigError("config: '" + std::string(path) + "' must be an array");
  std::vector<T> out;
  for (const auto& e : *arr) {
    std::optional<T> v;
    if constexpr (std::is_integral_v<T>) {
      if (auto x = e.value_exact<int64_t>()) v = static_cast<T>(*x);
    } else {
      v = e.value_exact<T>();
    }
    if (!v) throw ConfigError("config: '" + std::string(path) + "' has an element of the wrong type");
    out.push_back(*v);
  }
  return out;
}

// [[c, i, j], ...] -> c x^i y^j
inline std::vector<Monomial> read_terms(const toml::table& t, std::string_view path) {
  std::vector<Monomial> out;
  const toml::node_view<const toml::node> n = t.at_path(path);
  if (!n) return out;
  const toml::array* arr = n.as_array();
  if (!arr) throw ConfigError("config: '" + std::string(path) + "' must be an array of [c, i, j]");
  for (const auto& e : *arr) {
    const toml::array* term = e.as_array();
    if (!term || term->size() != 3) throw ConfigError("config: each entry of '" + std::string(path) + "' is [c, i, j]");
    const auto c = (*term)[0].value<double>();
    const auto i = (*term)[1].value_exact<int64_t>();
    const auto j = (*term)[2].value_exact<int64_t>();
    if (!c || !i || !j || *i < 0 || *j < 0)
      throw ConfigError("config: bad monomial in '" + std::string(path) + "' (need real c, integers i, j >= 0)");
    out.push_back({*c, static_cast<int>(*i), static_cast<int>(*j)});
  }
  return out;
}

}  // namespace detail

// Problems with a config: empty when valid.
inline std::vector<std::string> validate(const StudyConfig& c) {
  std::vector<std::string> e;
  if (c.problem == "custom") {
    if (c.custom_terms.empty()) e.push_back("problem.terms is required for a custom problem");
  } else {
    try {
      (void)problem_by_name(c.problem);
    } catch (const std::invalid_argument& ex) {
      e.push_back(ex.what());
    }
  }
  if (c.mesh.family != "voronoi" && c.mesh.family != "agglomerated" && c.mesh.family != "file")
    e.push_back("mesh.family must be voronoi, agglomerated or file");
  if (c.mesh.family == "file") {
    if (c.mesh.files.empty()) e.push_back("mesh.files is required for mesh.family = file");
  } else {
    if (c.mesh.sizes.empty()) e.push_back("mesh.sizes is empty");
    for (std::size_t i = 0; i < c.mesh.sizes.size(); ++i) {
      if (c.mesh.sizes[i] < 1) e.push_back("mesh.sizes entries must be positive");
      if (i > 0 && c.mesh.sizes[i] <= c.mesh.sizes[i - 1]) e.push_back("mesh.sizes must be strictly increasing");
    }
  }
  if (c.mesh.family == "agglomerated" && c.mesh.fine_n < 1) e.push_back("mesh.fine_n must be positive");
  if (c.mesh.lloyd_iters < 0) e.push_back("mesh.lloyd_iters must be non-negative");
  if (c.degrees.empty()) e.push_back("degrees.p is empty");
  for (int p : c.degrees)
    if (p < 2) e.push_back("degrees.p entries must be at least 2");
  for (int p : c.psweep_degrees)
    if (p < 2) e.push_back("psweep.p entries must be at least 2");
  if (!(c.solve.tol > 0.0)) e.push_back("solve.tol must be positive");
  if (c.solve.max_iter < 0) e.push_back("solve.max_iter must be non-negative");
  const auto& k = c.penalty.constants;
  if (!(k.c_sigma > 0 && k.c_tau > 0 && k.c_inv1 > 0 && k.c_inv2 > 0)) e.push_back("penalty constants must be positive");
  if (c.threads < 1) e.push_back("threads must be at least 1");
  if (c.psweep_cells < 1) e.push_back("psweep.cells must be positive");
  if (c.verify_triangles < 0 || c.verify_p_max < 0 || c.verify_p_max > 6 || c.verify_samples < 0)
    e.push_back("verify: triangles >= 0, 0 <= p_max <= 6, samples >= 0");
  return e;
}

inline StudyConfig parse_config(std::string_view text, std::string_view source = "config") {
  toml::table t;
  try {
    t = toml::parse(text, source);
  } catch (const toml::parse_error& err) {
    std::ostringstream os;
    os << err;
    throw ConfigError("config: " + os.str());
  }
  StudyConfig c;
  using detail::read_list;
  using detail::read_or;
  c.problem = read_or<std::string>(t, "problem.name", c.problem);
  c.custom_terms = detail::read_terms(t, "problem.terms");

  c.mesh.family = read_or<std::string>(t, "mesh.family", c.mesh.family);
  c.mesh.sizes = read_list<int>(t, "mesh.sizes", c.mesh.sizes);
  c.mesh.lloyd_iters = read_or<int>(t, "mesh.lloyd_iters", c.mesh.lloyd_iters);
  c.mesh.seed = read_or<std::uint64_t>(t, "mesh.seed", c.mesh.seed);
  c.mesh.fine_n = read_or<int>(t, "mesh.fine_n", c.mesh.fine_n);
  c.mesh.files = read_list<std::string>(t, "mesh.files", c.mesh.files);

  c.degrees = read_list<int>(t, "degrees.p", c.degrees);

  c.penalty.regime = parse_regime(read_or<std::string>(t, "penalty.regime", to_string(c.penalty.regime)));
  c.penalty.constants.c_sigma = read_or<double>(t, "penalty.c_sigma", c.penalty.constants.c_sigma);
  c.penalty.constants.c_tau = read_or<double>(t, "penalty.c_tau", c.penalty.constants.c_tau);
  c.penalty.constants.c_inv1 = read_or<double>(t, "penalty.c_inv1", c.penalty.constants.c_inv1);
  c.penalty.constants.c_inv2 = read_or<double>(t, "penalty.c_inv2", c.penalty.constants.c_inv2);
  c.penalty.p_coverable = read_or<bool>(t, "penalty.p_coverable", c.penalty.p_coverable);
  c.penalty.allow_any_degree = read_or<bool>(t, "penalty.allow_any_degree", c.penalty.allow_any_degree);

  c.solve.tol = read_or<double>(t, "solve.tol", c.solve.tol);
  c.solve.max_iter = read_or<int>(t, "solve.max_iter", c.solve.max_iter);
  c.solve.method = parse_solve_method(read_or<std::string>(t, "solve.method", to_string(c.solve.method)));
  c.condition = read_or<bool>(t, "solve.condition", c.condition);
  c.coercivity = read_or<bool>(t, "solve.coercivity", c.coercivity);

  c.out_dir = read_or<std::string>(t, "output.dir", c.out_dir);
  c.matrix_market = read_or<bool>(t, "output.matrix_market", c.matrix_market);
  c.threads = read_or<int>(t, "run.threads", c.threads);

  c.psweep_cells = read_or<int>(t, "psweep.cells", c.psweep_cells);
  c.psweep_degrees = read_list<int>(t, "psweep.p", c.psweep_degrees);

  c.verify_triangles = read_or<int>(t, "verify.triangles", c.verify_triangles);
  c.verify_p_max = read_or<int>(t, "verify.p_max", c.verify_p_max);
  c.verify_samples = read_or<int>(t, "verify.samples", c.verify_samples);

  const auto errors = validate(c);
  if (!errors.empty()) {
    std::string msg = "config: invalid";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return c;
}

inline StudyConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

inline ExactSolution make_problem(const StudyConfig& c) {
  if (c.problem == "custom") return polynomial_solution(Polynomial(c.custom_terms), "custom");
  return problem_by_name(c.problem);
}

}  // namespace polydg
