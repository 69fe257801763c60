// Sieves the integral Heisenberg group for elements whose central log
// coordinate has at most r prime factors outside S, printing a few of them.

#include <iostream>

#include "affsieve/unipotent_sieve.hpp"

using namespace affsieve;

int main() {
  MatrixQ a{{1, 1, 0}, {0, 1, 0}, {0, 0, 1}};
  MatrixQ b{{1, 0, 0}, {0, 1, 1}, {0, 0, 1}};
  auto names = upper_coordinate_names(3);
  UniSieveBudget budget;
  budget.want = 4;
  auto res = unipotent_group_sieve({a, b}, parse_poly("x13", names),
                                   {{parse_poly("x12", names), parse_poly("x23", names)}}, UniChart::Log, budget);
  std::cout << "lattice scale " << res.lattice.scale << ", r = " << res.r << ", S = " << res.S.to_string() << "\n";
  std::cout << res.points.size() << " certified elements; first ten:\n";
  for (std::size_t i = 0; i < res.points.size() && i < 10; ++i) {
    const auto& p = res.points[i];
    std::cout << "  " << p.element.to_string() << "  log x13 = " << to_string(p.p_value) << "\n";
  }
}
