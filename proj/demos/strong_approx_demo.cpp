// Compares the image of the free SL_2 pair mod q with |SL_2(Z/q)| and prints
// the local densities of tr - 2.

#include <iostream>

#include "affsieve/modp.hpp"

using namespace affsieve;

int main() {
  GeneratorSet gens({MatrixQ{{1, 2}, {0, 1}}, MatrixQ{{1, 0}, {2, 1}}}, true);
  for (std::int64_t q : {2, 3, 5, 7, 15, 35}) {
    auto v = verify_strong_approx(gens, q, sl_expected_order(2));
    std::cout << "q = " << q << ": " << v.status_name() << "  (" << v.witness << ")\n";
  }
  auto f = parse_matrix_poly("tr - 2", 2);
  for (std::int64_t p : {2, 3, 5, 7, 11, 13}) {
    auto ld = local_density(gens, f, p);
    std::cout << "beta(" << p << ") = " << to_string(ld.beta) << (ld.ramified ? "  ramified" : "") << "\n";
  }
}
