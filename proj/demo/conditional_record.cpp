// Sample a photocount record from the steady state, then condition on it.
//
//   demo_conditional [seed]
//
// Prints the record, the +/- block weights of the conditional state from the
// extended-precision engine, and the closed-form ratio for comparison.

#include <cstdlib>
#include <iomanip>
#include <iostream>

#include <cqed/conditional.hpp>
#include <cqed/io.hpp>

int main(int argc, char** argv) {
  using namespace cqed;
  const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 7;
  const auto p = SystemParams::with_margin(10.0, 1.0, 3.0, Complex(0.0, 1.0));
  const double dt = 0.4;

  std::cout << "alpha = " << p.alpha() << ", n_fock = " << p.n_fock() << "\n";
  const SampledTrajectory tr = sample_record(build_rho_ss(p), dt, 5e-4, seed, p);
  std::cout << "record over dt = " << dt << ": " << record_json(tr.record).dump() << "\n";

  const PreciseConditional pc = precise_conditional(steady_blocks(p), tr.record.labels, dt, p);
  std::cout << std::setprecision(12);
  std::cout << "log p(record)        = " << pc.log_weight << "\n";
  std::cout << "lambda+ , lambda-    = " << pc.lambda[0] << " , " << pc.lambda[1] << "\n";
  std::cout << "engine ratio         = " << pc.lambda[0] / pc.lambda[1] << "\n";
  std::cout << "closed-form ratio    = " << eigenvalue_ratio(tr.record.labels, dt, p) << "\n";

  // Distance of each block from the coherent state it started in.
  std::cout << "distance to rho_ss   = " << block_distance(pc.factor, steady_blocks(p)).trace << "\n";
}
