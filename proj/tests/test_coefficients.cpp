#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "msgfem/coefficients.hpp"

using namespace msgfem;

TEST(RandomField, BlocksOf8x8At400) {
  const GridMesh mesh(400, 400);
  const CoefficientField c = random_field(mesh, 7);
  std::set<double> distinct(c.values().begin(), c.values().end());
  EXPECT_EQ(distinct.size(), 2500u);
  for (int by = 0; by < 50; ++by)
    for (int bx = 0; bx < 50; ++bx) {
      const double v = c[mesh.element(8 * bx, 8 * by)];
      for (int dy = 0; dy < 8; ++dy)
        for (int dx = 0; dx < 8; ++dx) ASSERT_EQ(c[mesh.element(8 * bx + dx, 8 * by + dy)], v);
    }
  EXPECT_GE(c.alpha(), 1.0);
  EXPECT_LE(c.beta(), 100.0);
}

TEST(RandomField, ConstantRange) {
  const GridMesh mesh(50, 50);
  const CoefficientField c = random_field(mesh, 3, 1.0 / 50, 2.5, 2.5);
  EXPECT_EQ(c.alpha(), 2.5);
  EXPECT_EQ(c.beta(), 2.5);
}

TEST(RandomField, Deterministic) {
  const GridMesh mesh(100, 100);
  EXPECT_EQ(random_field(mesh, 11).values(), random_field(mesh, 11).values());
  EXPECT_NE(random_field(mesh, 11).values(), random_field(mesh, 12).values());
  // the block value does not depend on the mesh resolution
  const GridMesh fine(200, 200);
  const CoefficientField a = random_field(mesh, 5), b = random_field(fine, 5);
  for (int ey = 0; ey < 100; ++ey)
    for (int ex = 0; ex < 100; ++ex) ASSERT_EQ(a[mesh.element(ex, ey)], b[fine.element(2 * ex, 2 * ey)]);
}

TEST(RandomField, LogUniformMoments) {
  // log(A) uniform on [0, log 100]: mean log(100)/2, variance log(100)^2/12
  const GridMesh mesh(400, 400);
  const CoefficientField c = random_field(mesh, 2024);
  double mean = 0, sq = 0;
  for (int by = 0; by < 50; ++by)
    for (int bx = 0; bx < 50; ++bx) {
      const double l = std::log(c[mesh.element(8 * bx, 8 * by)]);
      mean += l / 2500;
      sq += l * l / 2500;
    }
  const double L = std::log(100.0);
  EXPECT_NEAR(mean, L / 2, 4 * L / std::sqrt(12.0 * 2500));
  EXPECT_NEAR(sq - mean * mean, L * L / 12, 0.1 * L * L / 12);
}

TEST(RandomField, Errors) {
  const GridMesh mesh(75, 75);
  EXPECT_THROW(random_field(mesh, 1), std::invalid_argument);
  EXPECT_THROW(random_field(GridMesh(50, 50), 1, 1.0 / 50, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(random_field(GridMesh(50, 50), 1, 1.0 / 50, -1.0, 1.0), std::invalid_argument);
}

TEST(HighContrast, FirstCellValue) {
  const GridMesh mesh(400, 400);
  const CoefficientField c = high_contrast_field(mesh);
  EXPECT_NEAR(c[0], 9996.0 + 1e4 * std::sin(std::numbers::pi / 4), 1e-9);
  EXPECT_NEAR(c[0], 17067.0678, 1e-4);
}

TEST(HighContrast, ScannedBoundsAt400) {
  // reference values from an independent scan of all element centres
  const GridMesh mesh(400, 400);
  const CoefficientField c = high_contrast_field(mesh);
  EXPECT_NEAR(c.alpha(), 4.830966494027962, 1e-9);
  EXPECT_NEAR(c.beta(), 19983.058604410024, 1e-8);
  EXPECT_NEAR(c.contrast(), 4136.451500773825, 1e-6);
  EXPECT_GT(c.alpha(), 0.0);
}

TEST(HighContrast, Errors) { EXPECT_THROW(high_contrast_field(GridMesh(4, 4), 0.0), std::invalid_argument); }

TEST(ProblemData, PeaksAndBoundaryData) {
  const ProblemData rf = paper_problem_data(Example::RandomField);
  const ProblemData hc = paper_problem_data(Example::HighContrast);
  EXPECT_DOUBLE_EQ(rf.f(0.35, 0.55), 1000.0);
  EXPECT_DOUBLE_EQ(hc.f(0.5, 0.5), 10000.0);
  EXPECT_LT(rf.f(0.0, 0.0), 1000.0);
  for (const auto* d : {&rf, &hc}) {
    EXPECT_EQ(d->q(0.0, 0.3), 1.0);
    EXPECT_EQ(d->q(1.0, 0.9), 1.0);
    EXPECT_EQ(d->g(0.4, 0.0), -1.0);
    EXPECT_EQ(d->g(0.4, 1.0), -1.0);
  }
}

TEST(Example, NamesRoundTrip) {
  for (auto e : {Example::RandomField, Example::HighContrast}) EXPECT_EQ(parse_example(to_string(e)), e);
  EXPECT_THROW(parse_example("banana"), std::invalid_argument);
}

TEST(CoefficientCsv, RowPerElement) {
  const GridMesh mesh(4, 4);
  std::ostringstream os;
  write_coefficient_csv(os, mesh, high_contrast_field(mesh));
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x,y,value");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 16);
}
