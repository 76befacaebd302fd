// Samples eigenvectors of a 2x2 diagonal matrix and recovers its full basis.
#include <iostream>

#include "phasefilter/phasefilter.hpp"

using namespace phasefilter;

int main() {
  const double lambdas[] = {0.1, 0.7};
  RngHandle rng(7);
  const auto a = generate_matrix(2, lambdas, rng, /*identity_q=*/true);
  const auto schedule = FilterSchedule::manual(2, 200, 3, 10007, 2, 1e-3, 1e-3, 1.0);

  const auto truth = jacobi_eigh(a);
  SamplerOptions opt;
  opt.oracle = &truth;
  for (int i = 0; i < 4; ++i) {
    const auto s = sample_eigenvector(a, schedule, rng, opt);
    std::cout << "sample " << i << ": eigenvector " << *s.matched_index << ", distance " << *s.matched_distance
              << ", residual " << s.residual << '\n';
  }

  DiagOptions dopt;
  dopt.oracle = &truth;
  const auto d = diagonalize(a, schedule, rng, 50, dopt);
  std::cout << "diagonalize: " << d.eigenvectors.size() << " vectors in " << d.outer_rounds << " outer rounds\n";
  return d.converged ? 0 : 1;
}
