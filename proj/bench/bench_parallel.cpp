// Serial reference versus OpenMP kernels: wall time and agreement of the results.
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>

#include "hypnf/deformation.hpp"

using namespace hypnf;

namespace {

double seconds(const std::function<void()>& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void row(const std::string& name, double serial, double parallel, bool same) {
  std::printf("%-22s %10.3f %10.3f %8.2fx  %s\n", name.c_str(), serial, parallel,
              parallel > 0.0 ? serial / parallel : 0.0, same ? "identical" : "DIFFERENT");
}

Monomial mono(std::vector<int> a, std::vector<int> b) { return Monomial::from_exponents(a, b); }

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%-22s %10s %10s %9s\n", "kernel", "serial s", "openmp s", "speedup");

  Jet<double> q0(1, 2);
  q0.add_term(mono({1}, {1}), 1.0);
  RegionSpec region;
  region.delta = 0.3;
  region.B0 = lyapunov_B0(Matrix::Constant(1, 1, 1.0));
  const auto r = FlatFunction::monomial_bump(1, mono({3}, {5}), 1e-3, 0.5);

  {
    HomologicalSolver solver(Hamiltonian(q0), r, make_partition(4, region.B0));
    const auto pts = plane_grid(1, 0.2, 8);
    std::vector<HomologicalValue> a, b;
    const double ts = seconds([&] { a = solve_batch(solver, pts, ExecPolicy::Serial); });
    const double tp = seconds([&] { b = solve_batch(solver, pts, ExecPolicy::Parallel); });
    bool same = true;
    for (std::size_t i = 0; i < a.size(); ++i) same = same && a[i].value == b[i].value;
    row("homological batch", ts, tp, same);
  }
  {
    Jet<double> cubic(1, 3);
    cubic.add_term(mono({1}, {1}), 1.0);
    cubic.add_term(mono({2}, {1}), 0.5);
    cubic.add_term(mono({1}, {2}), 0.5);
    const Hamiltonian h(cubic);
    RegionSpec reg = region;
    reg.delta = 0.05;
    GronwallOptions so, po;
    so.policy = ExecPolicy::Serial;
    po.policy = ExecPolicy::Parallel;
    GronwallReport a, b;
    const double ts = seconds([&] { a = estimate_gronwall(h, reg, 64, 0, so); });
    const double tp = seconds([&] { b = estimate_gronwall(h, reg, 64, 0, po); });
    row("gronwall sampling", ts, tp, a.lambda_minus == b.lambda_minus && a.slack == b.slack);
  }
  {
    DeformationProblem prob(q0, r, region);
    DeformationOptions so, po;
    so.grid_size = po.grid_size = 4;
    so.policy = ExecPolicy::Serial;
    po.policy = ExecPolicy::Parallel;
    std::optional<ConjugacyResult> a, b;
    const double ts = seconds([&] { a.emplace(deform(prob, so)); });
    const double tp = seconds([&] { b.emplace(deform(prob, po)); });
    row("deformation", ts, tp, a->grid.residuals == b->grid.residuals);

    const auto grid = plane_grid(1, 0.2, 6);
    const auto p = prob.perturbed();
    ConjugacyReport va, vb;
    const double vs = seconds([&] { va = verify_conjugacy(p, a->kappa1, q0, grid, ExecPolicy::Serial); });
    const double vp = seconds([&] { vb = verify_conjugacy(p, a->kappa1, q0, grid, ExecPolicy::Parallel); });
    row("verify grid", vs, vp, va.residuals == vb.residuals);
  }
  return 0;
}
