// Solve the random-field problem on a 100 x 100 grid with 16 subdomains and
// print the relative energy error for a few local space sizes.

#include <iostream>

#include "msgfem/gfem.hpp"

int main() {
  using namespace msgfem;
  set_warnings(false);
  const FineProblem fine = make_paper_problem(100, Example::RandomField, 1);
  const Vector u_h = reference_solve(fine);

  const Decomposition d = build_decomposition(fine.mesh, 4, 2, 8);
  std::cout << "subdomains " << d.size() << ", H/H* = " << d.rho() << '\n';

  const MsGfem gfem(fine, d, 64);
  for (int n_loc : {2, 4, 8, 16}) {
    const GfemSolution sol = gfem.solve(n_loc, 64);
    std::cout << "n_loc " << n_loc << "  error " << relative_energy_error(fine.stiffness, u_h, sol.u_G) << '\n';
  }
}
