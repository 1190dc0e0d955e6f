#ifndef MSGFEM_TESTS_ORACLES_HPP
#define MSGFEM_TESTS_ORACLES_HPP

// Independent reference computations used by the tests. Nothing here calls
// into the library's assembly or solver code.

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline constexpr std::array<double, 3> gauss3_x{-0.7745966692414834, 0.0, 0.7745966692414834};
inline constexpr std::array<double, 3> gauss3_w{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

/// Gradients of the bilinear shape functions on [0,hx]x[0,hy], corners
/// counterclockwise from the lower-left, at reference point (xi, eta) in [0,1]^2.
inline std::array<std::array<double, 2>, 4> q1_gradients(double xi, double eta, double hx, double hy) {
  return {{{-(1 - eta) / hx, -(1 - xi) / hy},
           {(1 - eta) / hx, -xi / hy},
           {eta / hx, xi / hy},
           {-eta / hx, (1 - xi) / hy}}};
}

inline std::array<double, 4> q1_values(double xi, double eta) {
  return {(1 - xi) * (1 - eta), xi * (1 - eta), xi * eta, (1 - xi) * eta};
}

/// Element stiffness by 3x3 Gauss quadrature.
inline Eigen::Matrix4d element_stiffness(double hx, double hy, double a) {
  Eigen::Matrix4d k = Eigen::Matrix4d::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double xi = 0.5 * (gauss3_x[i] + 1), eta = 0.5 * (gauss3_x[j] + 1);
      const double w = 0.25 * gauss3_w[i] * gauss3_w[j] * hx * hy;
      const auto g = q1_gradients(xi, eta, hx, hy);
      for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 4; ++q) k(p, q) += w * a * (g[p][0] * g[q][0] + g[p][1] * g[q][1]);
    }
  return k;
}

/// Dense global stiffness of an n x n unit-square grid with per-cell coefficient.
inline Eigen::MatrixXd dense_stiffness(int n, const std::vector<double>& a) {
  const int nn = (n + 1) * (n + 1);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(nn, nn);
  const double h = 1.0 / n;
  for (int ey = 0; ey < n; ++ey)
    for (int ex = 0; ex < n; ++ex) {
      const int n0 = ey * (n + 1) + ex;
      const std::array<int, 4> nodes{n0, n0 + 1, n0 + n + 2, n0 + n + 1};
      const Eigen::Matrix4d ke = element_stiffness(h, h, a[ey * n + ex]);
      for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 4; ++q) k(nodes[p], nodes[q]) += ke(p, q);
    }
  return k;
}

/// Energy error |u - u_exact|_{H1 seminorm} of a nodal Q1 field on an n x n
/// unit-square grid, 3x3 Gauss per cell against the exact gradient.
inline double energy_error(int n, const Eigen::VectorXd& u, const std::function<std::array<double, 2>(double, double)>& grad) {
  const double h = 1.0 / n;
  double sum = 0;
  for (int ey = 0; ey < n; ++ey)
    for (int ex = 0; ex < n; ++ex) {
      const int n0 = ey * (n + 1) + ex;
      const std::array<int, 4> nodes{n0, n0 + 1, n0 + n + 2, n0 + n + 1};
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          const double xi = 0.5 * (gauss3_x[i] + 1), eta = 0.5 * (gauss3_x[j] + 1);
          const auto g = q1_gradients(xi, eta, h, h);
          double gx = 0, gy = 0;
          for (int p = 0; p < 4; ++p) {
            gx += u[nodes[p]] * g[p][0];
            gy += u[nodes[p]] * g[p][1];
          }
          const auto ge = grad((ex + xi) * h, (ey + eta) * h);
          sum += 0.25 * gauss3_w[i] * gauss3_w[j] * h * h * ((gx - ge[0]) * (gx - ge[0]) + (gy - ge[1]) * (gy - ge[1]));
        }
    }
  return std::sqrt(sum);
}

inline Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd x(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) x(i, j) = nd(rng);
  return x * x.transpose() + n * Eigen::MatrixXd::Identity(n, n);
}

inline Eigen::VectorXd random_vector(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = ud(rng);
  return v;
}

/// Least-squares line through (x, y): slope, intercept and R^2.
struct LineFit {
  double slope = 0, intercept = 0, r2 = 0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
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
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += r * r;
  }
  f.r2 = syy > 0 ? 1.0 - ss_res / syy : 1.0;
  return f;
}

}  // namespace oracle

#endif  // MSGFEM_TESTS_ORACLES_HPP
