#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <vector>

#include "hypnf/flow.hpp"
#include "hypnf/smooth.hpp"

namespace hypnf {

// chi_out + chi_in = 1, homogeneous of degree 0. With r = ||xi||_0 / ||x||_0, chi_out is 1
// for r <= r_lo and 0 for r >= r_hi, with a polynomial smoothstep in log r between.
class CutoffPair {
 public:
  CutoffPair(int order, AnisotropicNorm b0, double r_lo = 0.7071067811865476,
             double r_hi = 1.4142135623730951);

  int order() const { return order_; }
  double r_lo() const { return r_lo_; }
  double r_hi() const { return r_hi_; }
  const AnisotropicNorm& B0() const { return b0_; }

  // smoothstep of order k on [0, 1], C^k at both ends
  double smoothstep(double s) const;
  // chi_out as a function of the norm ratio r
  double profile(double r) const;
  double ratio(const Vector& rho) const;  // +inf when x = 0
  double chi_out(const Vector& rho) const;
  double chi_in(const Vector& rho) const { return 1.0 - chi_out(rho); }
  // integral of profile(r) over r in (0, inf)
  double profile_integral() const;

 private:
  int order_;
  AnisotropicNorm b0_;
  double r_lo_, r_hi_;
  std::vector<double> coeffs_;  // smoothstep polynomial coefficients in s
};

CutoffPair make_partition(int order, const AnisotropicNorm& b0);

struct HomologicalOptions {
  FlowOptions flow;
  double tol = 1e-9;       // absolute target for tail and quadrature
  double rel_tol = 1e-11;  // relative target, against the running integral
  double lambda1 = 0.0;    // 0 means smallest Re(lambda) of the quadratic part
  double slack = 0.0;      // Gronwall slack used in the tail bound
  double delta = std::numeric_limits<double>::infinity();  // tail bound used inside this ball
  unsigned gk_depth = 3;  // DP5 steps are short, so little refinement is needed
  double max_time_factor = 400.0;  // give up after max_time_factor / lambda1
};

struct HomologicalValue {
  double value = 0.0;
  double f_out = 0.0;
  double f_in = 0.0;
  double tail_bound = 0.0;
  double panel_error = 0.0;
  double flow_error = 0.0;  // integrand Lipschitz bound times the trajectory error estimate
  double t_out = 0.0;       // length of the backward integration
  double t_in = 0.0;        // length of the forward integration
  double error_estimate() const { return tail_bound + panel_error + flow_error; }
};

// f = int_{-inf}^0 (chi_out g)(exp tH rho) dt - int_0^inf (chi_in g)(exp tH rho) dt, so H_p f = g.
class HomologicalSolver {
 public:
  HomologicalSolver(Hamiltonian h, FlatFunction g, CutoffPair cut, HomologicalOptions opts = {});

  HomologicalValue solve(const Vector& rho) const;
  double operator()(const Vector& rho) const { return solve(rho).value; }

  const Hamiltonian& hamiltonian() const { return h_; }
  const FlatFunction& rhs() const { return g_; }
  const CutoffPair& cutoff() const { return cut_; }
  const HomologicalOptions& options() const { return opts_; }
  double decay_rate() const { return decay_; }

 private:
  double integrate_side(const Vector& rho, bool out_side, HomologicalValue& v, double& span) const;

  Hamiltonian h_;
  FlatFunction g_;
  CutoffPair cut_;
  HomologicalOptions opts_;
  double lambda1_;
  double decay_;  // N_flat * (lambda1 - slack)
};

HomologicalValue solve_homological(const Hamiltonian& h, const FlatFunction& g,
                                   const CutoffPair& cut, const Vector& rho,
                                   const HomologicalOptions& opts = {});

std::vector<HomologicalValue> solve_batch(const HomologicalSolver& solver,
                                          const std::vector<Vector>& points,
                                          ExecPolicy policy = ExecPolicy::Parallel);

struct ResidualRow {
  Vector point;
  double derivative = 0.0;  // d/dt f(exp tH rho) at t = 0
  double g = 0.0;
  double residual = 0.0;
};

struct ResidualReport {
  double max_residual = 0.0;
  std::vector<ResidualRow> rows;
};

using PointFunction = std::function<double(const Vector&)>;

// Centered difference of f along the flow with step h, compared against g.
ResidualReport residual_check(const Hamiltonian& h, const PointFunction& f, const PointFunction& g,
                              const std::vector<Vector>& points, double step,
                              ExecPolicy policy = ExecPolicy::Parallel,
                              const FlowOptions& flow = {});

// Points as CSV rows of 2n numbers, optional header line.
std::vector<Vector> read_points_csv(std::istream& is, int dof);
void write_homological_csv(std::ostream& os, const std::vector<Vector>& points,
                           const std::vector<HomologicalValue>& values,
                           const std::vector<double>& residuals);

}  // namespace hypnf
