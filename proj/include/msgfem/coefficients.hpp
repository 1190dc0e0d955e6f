#ifndef MSGFEM_COEFFICIENTS_HPP
#define MSGFEM_COEFFICIENTS_HPP

// Coefficient generators and problem data for the two benchmark problems:
// a patchwise random field and a high-contrast oscillating field on the unit
// square, both with u = 1 on x1 in {0,1} and flux -1 on x2 in {0,1}.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "msgfem/coefficient_field.hpp"
#include "msgfem/grid_fem.hpp"

namespace msgfem {

enum class Example { RandomField, HighContrast };

inline std::string_view to_string(Example e) {
  return e == Example::RandomField ? "random-field" : "high-contrast";
}

inline Example parse_example(std::string_view s) {
  if (s == "random-field" || s == "random" || s == "RandomField") return Example::RandomField;
  if (s == "high-contrast" || s == "contrast" || s == "HighContrast") return Example::HighContrast;
  throw std::invalid_argument("unknown example '" + std::string(s) + "'");
}

/// f: source, g: Neumann flux on x2 in {0,1}, q: Dirichlet value on x1 in {0,1}.
struct ProblemData {
  ScalarFunction f;
  ScalarFunction g;
  ScalarFunction q;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based uniform draw in [0,1) keyed by (seed, counter).
inline double keyed_uniform(std::uint64_t seed, std::uint64_t counter) {
  const std::uint64_t bits = splitmix64(splitmix64(seed) ^ splitmix64(counter + 0x632be59bd9b4e019ULL));
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline int cells_per_length(double length, double h, const char* what) {
  const double ratio = length / h;
  const long n = std::lround(ratio);
  if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio))
    throw std::invalid_argument(std::string(what) + " is not an integer multiple of the mesh size");
  return static_cast<int>(n);
}

}  // namespace detail

/// Piecewise constant field on patch_scale x patch_scale blocks, one
/// log-uniform draw on [value_low, value_high] per block. The draw depends
/// only on (seed, block index), never on traversal order.
inline CoefficientField random_field(const GridMesh& mesh, std::uint64_t seed, double patch_scale = 1.0 / 50,
                                     double value_low = 1.0, double value_high = 100.0) {
  if (!(value_low > 0.0)) throw std::invalid_argument("random_field: value_low must be positive");
  if (value_high < value_low) throw std::invalid_argument("random_field: value_high < value_low");
  const int px = detail::cells_per_length(patch_scale, mesh.hx(), "patch_scale");
  const int py = detail::cells_per_length(patch_scale, mesh.hy(), "patch_scale");
  const int blocks_x = (mesh.nx() + px - 1) / px;
  const double log_ratio = std::log(value_high / value_low);
  std::vector<double> values(mesh.element_count());
  for (int ey = 0; ey < mesh.ny(); ++ey) {
    for (int ex = 0; ex < mesh.nx(); ++ex) {
      const auto block = static_cast<std::uint64_t>((ey / py) * blocks_x + ex / px);
      const double u = detail::keyed_uniform(seed, block);
      values[mesh.element(ex, ey)] = value_low == value_high ? value_low : value_low * std::exp(u * log_ratio);
    }
  }
  return {mesh.nx(), mesh.ny(), std::move(values)};
}

/// A(x) = 1e4 - 4 + 1e4 sin(pi/4 + floor(x1+x2) + floor(x1/eps) + floor(x2/eps)).
inline double high_contrast_value(double x1, double x2, double epsilon) {
  const double k = std::floor(x1 + x2) + std::floor(x1 / epsilon) + std::floor(x2 / epsilon);
  return 1e4 - 4.0 + 1e4 * std::sin(std::numbers::pi / 4 + k);
}

/// High-contrast field sampled at element centres.
inline CoefficientField high_contrast_field(const GridMesh& mesh, double epsilon = 1.0 / 40) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("high_contrast_field: epsilon must be positive");
  std::vector<double> values(mesh.element_count());
  for (int e = 0; e < mesh.element_count(); ++e) {
    values[e] = high_contrast_value(mesh.element_center_x(e), mesh.element_center_y(e), epsilon);
    if (!(values[e] > 0.0))
      throw std::domain_error("high_contrast_field: non-positive value at element " + std::to_string(e));
  }
  return {mesh.nx(), mesh.ny(), std::move(values)};
}

inline ProblemData paper_problem_data(Example example) {
  ProblemData d;
  d.g = [](double, double) { return -1.0; };
  d.q = [](double, double) { return 1.0; };
  if (example == Example::RandomField)
    d.f = [](double x, double y) { return 1e3 * std::exp(-10 * (x - 0.35) * (x - 0.35) - 10 * (y - 0.55) * (y - 0.55)); };
  else
    d.f = [](double x, double y) { return 1e4 * std::exp(-10 * (x - 0.5) * (x - 0.5) - 10 * (y - 0.5) * (y - 0.5)); };
  return d;
}

inline CoefficientField make_coefficient(const GridMesh& mesh, Example example, std::uint64_t seed) {
  return example == Example::RandomField ? random_field(mesh, seed) : high_contrast_field(mesh);
}

/// "x,y,value" rows at element centres.
inline void write_coefficient_csv(std::ostream& os, const GridMesh& mesh, const CoefficientField& coeff) {
  os << "x,y,value\n";
  os.precision(17);
  for (int e = 0; e < mesh.element_count(); ++e)
    os << mesh.element_center_x(e) << ',' << mesh.element_center_y(e) << ',' << coeff[e] << '\n';
}

}  // namespace msgfem

#endif  // MSGFEM_COEFFICIENTS_HPP
