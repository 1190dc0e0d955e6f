#ifndef MSGFEM_EXPERIMENTS_HPP
#define MSGFEM_EXPERIMENTS_HPP

// Experiment runner: configuration, sweep records and the sweeps over
// (ell, s, n_loc) grids used by the command-line tool.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "msgfem/gfem.hpp"

namespace msgfem {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Command { NlocSweep, RhoSweep, SSweep, FieldDump, Selftest };

struct ExperimentConfig {
  int mesh_n = 100;
  Example example = Example::RandomField;
  std::uint64_t seed = 1;
  int m = 4;
  int overlap_layers = 2;
  /// Empty lists take the defaults of the command being run.
  std::vector<int> ell_list;
  std::vector<int> nloc_list;
  /// Empty means "auto".
  std::vector<int> s_list;
  std::string output_dir = "out";
  int threads = 1;
  bool diagnostics = false;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline long long parse_integer(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  long long v = 0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty())
    throw ConfigError(std::string(key) + ": '" + t + "' is not an integer");
  return v;
}

inline int parse_int(std::string_view key, std::string_view text) {
  const long long v = parse_integer(key, text);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw ConfigError(std::string(key) + ": value out of range");
  return static_cast<int>(v);
}

/// "0,4,8", "2..16" or a mix such as "1,2..5,10".
inline std::vector<int> parse_int_list(std::string_view key, std::string_view text) {
  std::vector<int> out;
  std::stringstream ss{std::string(text)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError(std::string(key) + ": empty list entry");
    if (const auto dots = item.find(".."); dots != std::string::npos) {
      const int a = parse_int(key, item.substr(0, dots)), b = parse_int(key, item.substr(dots + 2));
      if (b < a) throw ConfigError(std::string(key) + ": empty range " + item);
      for (int v = a; v <= b; ++v) out.push_back(v);
    } else {
      out.push_back(parse_int(key, item));
    }
  }
  if (out.empty()) throw ConfigError(std::string(key) + ": empty list");
  return out;
}

inline bool parse_bool(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw ConfigError(std::string(key) + ": '" + t + "' is not a boolean");
}

}  // namespace detail

/// Applies one key=value setting.
inline void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  using namespace detail;
  if (key == "mesh_n") {
    cfg.mesh_n = parse_int(key, value);
  } else if (key == "example") {
    try {
      cfg.example = parse_example(trim(value));
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "seed") {
    const long long v = parse_integer(key, value);
    if (v < 0) throw ConfigError("seed must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(v);
  } else if (key == "m") {
    cfg.m = parse_int(key, value);
  } else if (key == "overlap_layers" || key == "overlap") {
    cfg.overlap_layers = parse_int(key, value);
  } else if (key == "ell_list" || key == "ell") {
    cfg.ell_list = parse_int_list(key, value);
  } else if (key == "nloc_list" || key == "n_loc") {
    cfg.nloc_list = parse_int_list(key, value);
  } else if (key == "s_list" || key == "s") {
    if (trim(value) == "auto")
      cfg.s_list.clear();
    else
      cfg.s_list = parse_int_list(key, value);
  } else if (key == "output_dir" || key == "out") {
    cfg.output_dir = trim(value);
  } else if (key == "threads") {
    cfg.threads = parse_int(key, value);
  } else if (key == "diagnostics") {
    cfg.diagnostics = parse_bool(key, value);
  } else {
    throw ConfigError("unknown configuration key '" + key + "'");
  }
}

/// Flat key=value text; '#' starts a comment.
inline void read_config(std::istream& in, ExperimentConfig& cfg) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = detail::trim(std::string_view(line).substr(0, eq));
    try {
      apply_setting(cfg, key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

inline ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig cfg = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  read_config(in, cfg);
  return cfg;
}

/// Fills empty lists with the defaults of `cmd` and validates.
inline ExperimentConfig resolve(ExperimentConfig cfg, Command cmd) {
  auto fill = [](std::vector<int>& v, std::vector<int> d) {
    if (v.empty()) v = std::move(d);
  };
  switch (cmd) {
    case Command::NlocSweep:
      fill(cfg.ell_list, {0, 4, 8});
      fill(cfg.nloc_list, {2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16});
      break;
    case Command::RhoSweep:
      fill(cfg.ell_list, {0, 2, 4, 6, 8, 10, 12});
      fill(cfg.nloc_list, {6, 12});
      break;
    case Command::SSweep:
      fill(cfg.ell_list, {8});
      fill(cfg.nloc_list, {10});
      if (cfg.s_list.empty()) {
        const int n = *std::max_element(cfg.nloc_list.begin(), cfg.nloc_list.end());
        for (int k : {1, 2, 3, 4, 6, 8}) cfg.s_list.push_back(k * n);
      }
      break;
    case Command::FieldDump:
      fill(cfg.ell_list, {10});
      fill(cfg.nloc_list, {20});
      fill(cfg.s_list, {80});
      break;
    case Command::Selftest:
      break;
  }
  if (cmd != Command::Selftest && cfg.s_list.empty()) {
    const int n = *std::max_element(cfg.nloc_list.begin(), cfg.nloc_list.end());
    cfg.s_list = {std::max(4 * n, 40)};
  }

  if (cfg.mesh_n < 2) throw ConfigError("mesh_n must be at least 2");
  if (cfg.example == Example::RandomField && cfg.mesh_n % 50 != 0)
    throw ConfigError("mesh_n must be a multiple of 50 for the random field (patches of side 1/50)");
  if (cfg.m < 1 || cfg.m > cfg.mesh_n) throw ConfigError("m must lie in [1, mesh_n]");
  const int block = (cfg.mesh_n + cfg.m - 1) / cfg.m;
  if ((cfg.m - 1) * block >= cfg.mesh_n) throw ConfigError("m leaves an empty subdomain block");
  if (cfg.overlap_layers < 1) throw ConfigError("overlap_layers must be >= 1");
  if (cfg.threads < 0) throw ConfigError("threads must be >= 0");
  if (cmd != Command::Selftest) {
    for (int e : cfg.ell_list)
      if (e < 0) throw ConfigError("ell values must be >= 0");
    for (int n : cfg.nloc_list)
      if (n < 1) throw ConfigError("n_loc values must be >= 1");
    for (int s : cfg.s_list)
      if (s < 1) throw ConfigError("s values must be >= 1");
  }
  if (cfg.output_dir.empty()) throw ConfigError("output_dir must not be empty");
  return cfg;
}

struct SweepRecord {
  std::string example;
  int mesh_n = 0;
  std::uint64_t seed = 0;
  int m = 0;
  int ell = 0;
  double H = 0;
  double Hstar = 0;
  double rho = 0;
  int n_loc = 0;
  int s = 0;
  double error = 0;
  int kappa = 0;
  int kappastar = 0;
  double wall_time_ms = 0;
  int dropped_cols = 0;
};

inline constexpr std::string_view sweep_csv_header =
    "example,mesh_n,seed,m,ell,H,Hstar,rho,n_loc,s,error,kappa,kappastar,wall_time_ms,dropped_cols";

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRecord>& records) {
  os << sweep_csv_header << '\n';
  os.precision(17);
  for (const auto& r : records) {
    os << r.example << ',' << r.mesh_n << ',' << r.seed << ',' << r.m << ',' << r.ell << ',' << r.H << ',' << r.Hstar
       << ',' << r.rho << ',' << r.n_loc << ',' << r.s << ',' << r.error << ',' << r.kappa << ',' << r.kappastar << ',';
    os.precision(6);
    os << r.wall_time_ms;
    os.precision(17);
    os << ',' << r.dropped_cols << '\n';
  }
}

struct SweepResult {
  std::vector<SweepRecord> records;
  /// One message per failed record or failed ell group.
  std::vector<std::string> failures;
};

namespace detail {

inline double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

inline void write_file(const std::filesystem::path& path, const auto& writer) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  writer(os);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace detail

/// Records for every (ell, s, n_loc) in the configured lists, in that nesting
/// order. The local Steklov bases are built once per ell with the largest s.
/// A failing record is reported and skipped.
inline SweepResult run_sweep(const ExperimentConfig& cfg, const FineProblem& fine, const Vector& u_h) {
  SweepResult out;
  const int s_max = *std::max_element(cfg.s_list.begin(), cfg.s_list.end());
  for (int ell : cfg.ell_list) {
    std::optional<MsGfem> gfem;
    const auto t_build = std::chrono::steady_clock::now();
    try {
      gfem.emplace(fine, build_decomposition(fine.mesh, cfg.m, cfg.overlap_layers, ell), s_max, cfg.threads);
    } catch (const std::exception& e) {
      out.failures.push_back("ell=" + std::to_string(ell) + ": " + e.what());
      continue;
    }
    const double build_ms = detail::elapsed_ms(t_build);
    const Decomposition& d = gfem->decomposition();
    if (cfg.diagnostics) {
      std::filesystem::create_directories(cfg.output_dir);
      detail::write_file(std::filesystem::path(cfg.output_dir) / ("decomposition_ell" + std::to_string(ell) + ".csv"),
                         [&](std::ostream& os) { write_decomposition_csv(os, fine.mesh, d); });
    }
    std::clog << "msgfem: ell=" << ell << " rho=" << d.rho() << " local build " << build_ms << " ms\n";
    for (int s : cfg.s_list) {
      std::vector<LocalEigen> eig;
      try {
        eig = gfem->eigenproblems(s, cfg.threads);
      } catch (const std::exception& e) {
        out.failures.push_back("ell=" + std::to_string(ell) + " s=" + std::to_string(s) + ": " + e.what());
        continue;
      }
      for (int n_loc : cfg.nloc_list) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
          const auto locals = gfem->local_spaces(eig, n_loc);
          const GfemSolution sol = gfem->solve(locals);
          SweepRecord r;
          r.example = std::string(to_string(cfg.example));
          r.mesh_n = cfg.mesh_n;
          r.seed = cfg.seed;
          r.m = cfg.m;
          r.ell = ell;
          r.H = d.H;
          r.Hstar = d.H_star;
          r.rho = d.rho();
          r.n_loc = n_loc;
          r.s = s;
          r.error = relative_energy_error(fine.stiffness, u_h, sol.u_G);
          r.kappa = d.kappa;
          r.kappastar = d.kappa_star;
          r.dropped_cols = sol.dropped_columns + sol.dropped_pivots;
          r.wall_time_ms = detail::elapsed_ms(t0);
          if (cfg.diagnostics) {
            const auto name = "local_ell" + std::to_string(ell) + "_s" + std::to_string(s) + "_nloc" +
                              std::to_string(n_loc) + ".csv";
            detail::write_file(std::filesystem::path(cfg.output_dir) / name, [&](std::ostream& os) {
              write_local_diagnostics_header(os, n_loc);
              for (std::size_t i = 0; i < locals.size(); ++i)
                write_local_diagnostics_row(os, locals[i], gfem->builds()[i].harmonic.dimension,
                                            gfem->builds()[i].harmonic.count() < s ? gfem->builds()[i].harmonic.count()
                                                                                   : s,
                                            n_loc);
            });
          }
          out.records.push_back(r);
        } catch (const std::exception& e) {
          out.failures.push_back("ell=" + std::to_string(ell) + " s=" + std::to_string(s) +
                                 " n_loc=" + std::to_string(n_loc) + ": " + e.what());
        }
      }
    }
  }
  return out;
}

inline SweepResult run_sweep(const ExperimentConfig& cfg) {
  const FineProblem fine = make_paper_problem(cfg.mesh_n, cfg.example, cfg.seed);
  const Vector u_h = reference_solve(fine);
  return run_sweep(cfg, fine, u_h);
}

/// Errors against n_loc for each ell.
inline SweepResult run_nloc_sweep(const ExperimentConfig& cfg) { return run_sweep(resolve(cfg, Command::NlocSweep)); }
/// Errors against H/H* for each n_loc.
inline SweepResult run_rho_sweep(const ExperimentConfig& cfg) { return run_sweep(resolve(cfg, Command::RhoSweep)); }
/// Errors against the Steklov truncation s.
inline SweepResult run_s_sweep(const ExperimentConfig& cfg) { return run_sweep(resolve(cfg, Command::SSweep)); }

struct FieldDump {
  SweepRecord record;
  Vector u_h;
  Vector u_G;
  Vector pointwise_error;
  int max_error_node = -1;
  std::vector<std::filesystem::path> files;
};

/// Solves one (m, ell, n_loc, s) tuple (the first entry of each list) and
/// writes u_h.csv, u_G.csv, error.csv, coefficient.csv, decomposition.csv and
/// local_diagnostics.csv into the output directory.
inline FieldDump run_field_dump(const ExperimentConfig& in) {
  const ExperimentConfig cfg = resolve(in, Command::FieldDump);
  if (cfg.ell_list.size() > 1 || cfg.nloc_list.size() > 1 || cfg.s_list.size() > 1)
    detail::warn("field-dump uses only the first ell, n_loc and s values");
  const int ell = cfg.ell_list.front(), n_loc = cfg.nloc_list.front(), s = cfg.s_list.front();

  const FineProblem fine = make_paper_problem(cfg.mesh_n, cfg.example, cfg.seed);
  FieldDump fd;
  fd.u_h = reference_solve(fine);
  const auto t0 = std::chrono::steady_clock::now();
  const MsGfem gfem(fine, build_decomposition(fine.mesh, cfg.m, cfg.overlap_layers, ell), s, cfg.threads);
  const auto locals = gfem.local_spaces(gfem.eigenproblems(s, cfg.threads), n_loc);
  const GfemSolution sol = gfem.solve(locals);
  const Decomposition& d = gfem.decomposition();
  fd.u_G = sol.u_G;
  fd.pointwise_error = (fd.u_h - fd.u_G).cwiseAbs();
  Eigen::Index arg = 0;
  fd.pointwise_error.maxCoeff(&arg);
  fd.max_error_node = static_cast<int>(arg);

  SweepRecord& r = fd.record;
  r.example = std::string(to_string(cfg.example));
  r.mesh_n = cfg.mesh_n;
  r.seed = cfg.seed;
  r.m = cfg.m;
  r.ell = ell;
  r.H = d.H;
  r.Hstar = d.H_star;
  r.rho = d.rho();
  r.n_loc = n_loc;
  r.s = s;
  r.error = relative_energy_error(fine.stiffness, fd.u_h, fd.u_G);
  r.kappa = d.kappa;
  r.kappastar = d.kappa_star;
  r.dropped_cols = sol.dropped_columns + sol.dropped_pivots;
  r.wall_time_ms = detail::elapsed_ms(t0);

  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  auto dump = [&](const char* name, const auto& writer) {
    fd.files.push_back(dir / name);
    detail::write_file(fd.files.back(), writer);
  };
  dump("u_h.csv", [&](std::ostream& os) { write_nodal_csv(os, fine.mesh, fd.u_h); });
  dump("u_G.csv", [&](std::ostream& os) { write_nodal_csv(os, fine.mesh, fd.u_G); });
  dump("error.csv", [&](std::ostream& os) { write_nodal_csv(os, fine.mesh, fd.pointwise_error); });
  dump("coefficient.csv", [&](std::ostream& os) { write_coefficient_csv(os, fine.mesh, fine.coeff); });
  dump("decomposition.csv", [&](std::ostream& os) { write_decomposition_csv(os, fine.mesh, d); });
  dump("local_diagnostics.csv", [&](std::ostream& os) {
    write_local_diagnostics_header(os, n_loc);
    for (std::size_t i = 0; i < locals.size(); ++i) {
      const HarmonicBasis& hb = gfem.builds()[i].harmonic;
      write_local_diagnostics_row(os, locals[i], hb.dimension, hb.count(), n_loc);
    }
  });
  dump("field_dump.csv", [&](std::ostream& os) { write_sweep_csv(os, {r}); });

  std::clog << "msgfem: field-dump error=" << r.error << " max |u_h - u_G| = " << fd.pointwise_error[arg]
            << " at (x,y)=(" << fine.mesh.node_x(fd.max_error_node) << ',' << fine.mesh.node_y(fd.max_error_node)
            << ")\n";
  return fd;
}

/// Reads an "x,y,value" file back into a nodal vector.
inline Vector read_nodal_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != "x,y,value")
    throw std::runtime_error("read_nodal_csv: missing x,y,value header");
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto c = line.rfind(',');
    if (c == std::string::npos) throw std::runtime_error("read_nodal_csv: malformed row");
    values.push_back(std::stod(line.substr(c + 1)));
  }
  return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

struct SelftestCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Small, fast consistency checks of the whole pipeline.
inline std::vector<SelftestCheck> run_selftest() {
  std::vector<SelftestCheck> checks;
  auto check = [&](std::string name, auto&& body) {
    SelftestCheck c{std::move(name), false, {}};
    try {
      std::ostringstream os;
      c.passed = body(os);
      c.detail = os.str();
    } catch (const std::exception& e) {
      c.detail = std::string("exception: ") + e.what();
    }
    checks.push_back(std::move(c));
  };

  check("constant solution", [](std::ostream& os) {
    const GridMesh mesh(8, 8);
    ProblemData data;
    data.q = [](double, double) { return 1.0; };
    const FineProblem p(mesh, CoefficientField(8, 8, std::vector<double>(64, 1.0)), data);
    const double dev = (reference_solve(p).array() - 1.0).abs().maxCoeff();
    os << "max |u_h - 1| = " << dev;
    return dev <= 1e-10;
  });

  check("partition of unity", [](std::ostream& os) {
    const GridMesh mesh(20, 20);
    const Decomposition d = build_decomposition(mesh, 4, 2, 1);
    const Vector v = Vector::LinSpaced(mesh.node_count(), -1.0, 2.0);
    Vector sum = Vector::Zero(mesh.node_count());
    for (int j = 0; j < d.size(); ++j)
      sum += zero_extend(mesh, d, j, pu_apply(pu_operator(mesh, d, j), restrict_to(mesh, d.omega[j].box, v)));
    const double dev = (sum - v).cwiseAbs().maxCoeff();
    os << "max deviation " << dev;
    return dev <= 1e-14;
  });

  check("full space exactness", [](std::ostream& os) {
    const FineProblem p(GridMesh(16, 16), high_contrast_field(GridMesh(16, 16)), paper_problem_data(Example::HighContrast));
    const Vector u_h = reference_solve(p);
    const MsGfem g(p, build_decomposition(p.mesh, 2, 2, 2), 1000);
    const double err = relative_energy_error(p.stiffness, u_h, g.solve(1000, 1000).u_G);
    os << "error " << err;
    return err <= 1e-8;
  });

  check("error decays with n_loc", [](std::ostream& os) {
    const FineProblem p = make_paper_problem(50, Example::RandomField, 1);
    const Vector u_h = reference_solve(p);
    const MsGfem g(p, build_decomposition(p.mesh, 2, 2, 4), 40);
    double prev = std::numeric_limits<double>::infinity();
    bool ok = true;
    for (int n : {2, 4, 8}) {
      const double e = relative_energy_error(p.stiffness, u_h, g.solve(n, 40).u_G);
      os << "n_loc=" << n << ": " << e << "; ";
      ok = ok && e <= prev + 1e-10;
      prev = e;
    }
    return ok && prev < 0.1;
  });

  check("h(s)", [](std::ostream& os) {
    const double v = h_of_s(0.5);
    os << "h(0.5) = " << v;
    return std::abs(v - (1.0 - std::log(2.0))) <= 1e-12;
  });
  return checks;
}

}  // namespace msgfem

#endif  // MSGFEM_EXPERIMENTS_HPP
