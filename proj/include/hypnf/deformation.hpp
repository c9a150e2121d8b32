#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <vector>

#include "hypnf/flow.hpp"
#include "hypnf/homological.hpp"

namespace hypnf {

// q_s = q0 + s r on [0, 1], conjugated back to q0 by the flow in s of H_{f_s}.
struct DeformationProblem {
  Jet<double> q0;  // action form, real saddle blocks
  FlatFunction r;
  RegionSpec region;
  int s_steps = 8;         // uniform s-nodes; the adaptive stepper never crosses one
  double quad_tol = 1e-11; // relative quadrature tolerance of the homological solves
  double ode_tol = 1e-8;   // relative tolerance of the s-integration on kappa_s - id

  DeformationProblem(Jet<double> q0_, FlatFunction r_, RegionSpec region_)
      : q0(std::move(q0_)), r(std::move(r_)), region(std::move(region_)) {}

  int dof() const { return q0.dof(); }
  // p = q0 + r as an evaluable Hamiltonian
  Hamiltonian perturbed() const { return Hamiltonian(q0, r, 1.0); }
  void validate() const;
};

struct DeformationOptions {
  int cutoff_order = 4;
  FlowOptions flow;
  double quad_abs_floor = 1e-30;
  double ode_atol = 1e-18;
  // slack of the flow estimates; NaN means the worst fitted slack of q_0 and q_1
  double slack = std::numeric_limits<double>::quiet_NaN();
  int gronwall_samples = 32;
  std::uint64_t seed = 0;
  int diagnostic_points = 6;  // points where every s-node is monitored
  int symplectic_points = 2;  // of those, points where the Jacobian of kappa_s is checked
  double diagnostic_radius = 0.6;  // fraction of delta
  double jacobian_step = 1e-4;     // relative to |rho|
  double symp_tol = 1e-6;
  int grid_size = 20;
  double grid_half_width = 0.0;  // 0 means 2 delta / 3; the grid lies in the (x_1, xi_1) plane
  long max_s_steps = 10000;
  ExecPolicy policy = ExecPolicy::Parallel;
};

// H_{f_s} at a point, f_s solving H_{q_s} f_s = r, by a centered five-point difference.
class GeneratorField {
 public:
  struct Sample {
    Vector velocity;  // J grad f_s
    Vector gradient;
    double error = 0.0;  // max-norm bound: truncation plus propagated quadrature error
  };

  GeneratorField(Jet<double> q0, FlatFunction r, CutoffPair cut, HomologicalOptions opts,
                 double step_factor);

  Sample operator()(double s, const Vector& y) const;
  HomologicalSolver solver(double s) const;
  Hamiltonian hamiltonian(double s) const { return Hamiltonian(q0_, r_, s); }
  double step_factor() const { return step_factor_; }
  const FlatFunction& rhs() const { return r_; }

 private:
  Jet<double> q0_;
  FlatFunction r_;
  CutoffPair cut_;
  HomologicalOptions opts_;
  double step_factor_;
};

// kappa_s(rho) at every s-node
struct KappaTrace {
  Vector rho;
  std::vector<double> s;               // nodes, s[0] = 0
  std::vector<Vector> displacement;    // kappa_s(rho) - rho at each node
  std::vector<Vector> node_gradient;   // grad f_s at kappa_s(rho), empty at s = 0 if r = 0
  std::vector<double> node_speed;      // |H_{f_s}(kappa_s(rho))|
  std::vector<double> node_error;      // error estimate accumulated up to each node
  double ode_error = 0.0;    // accumulated local error estimates
  double field_error = 0.0;  // accumulated generator-field error times step length
  long steps = 0;
  long rejected = 0;
  long field_evaluations = 0;

  Vector image() const { return rho + displacement.back(); }
  double error_estimate() const { return ode_error + field_error; }
};

// The time-one map kappa_1, replayed on demand by integrating in s from kappa_0 = id.
class KappaMap {
 public:
  KappaMap(std::shared_ptr<const GeneratorField> field, int s_steps, double rtol, double atol,
           long max_steps, bool identity);

  KappaTrace trace(const Vector& rho) const;
  Vector operator()(const Vector& rho) const { return trace(rho).image(); }
  Vector displacement(const Vector& rho) const { return trace(rho).displacement.back(); }
  bool is_identity() const { return identity_; }
  int s_steps() const { return s_steps_; }

 private:
  std::shared_ptr<const GeneratorField> field_;
  int s_steps_;
  double rtol_, atol_;
  long max_steps_;
  bool identity_;
};

struct NodeDiagnostics {
  double s = 0.0;
  double homological_residual = 0.0;  // max |H_{q_s} f_s - r| / max |r| at kappa_s of the samples
  double symplectic_defect = 0.0;     // max |K^T J K - J| of the difference Jacobian of kappa_s
  double conjugacy_residual = 0.0;    // max |q_s(kappa_s(rho)) - q0(rho)|
  double normalized_residual = 0.0;   // conjugacy_residual / (s max |r|)
  double generator_norm = 0.0;        // max |H_{f_s}| at the samples
  double error_estimate = 0.0;        // max kappa_s error estimate so far
};

struct ResidualStats {
  double max = 0.0;
  double mean = 0.0;
  double q50 = 0.0;
  double q90 = 0.0;
  double q99 = 0.0;
};

ResidualStats residual_stats(std::vector<double> values);

struct ConjugacyReport {
  ResidualStats residual;  // |p(kappa(rho)) - q0(rho)|
  ResidualStats baseline;  // |p(rho) - q0(rho)|
  double reduction = 0.0;  // baseline.max / residual.max, +inf when the residual vanishes
  std::vector<Vector> points;
  std::vector<Vector> images;
  std::vector<double> residuals;
  std::vector<double> baselines;
  std::vector<double> errors;  // error estimates of kappa at each point, when known
};

struct ConjugacyResult {
  KappaMap kappa1;
  std::vector<NodeDiagnostics> nodes;
  ConjugacyReport grid;
  double lambda1 = 0.0;
  double slack = 0.0;
  double slack_q0 = 0.0;  // fitted slack of q_0 and q_1 when estimated
  double slack_q1 = 0.0;
  double max_symplectic_defect = 0.0;
  double max_error_estimate = 0.0;  // over the grid
  bool accepted = false;  // symplectic to symp_tol and residual below baseline
};

using PointMap = std::function<Vector(const Vector&)>;

ConjugacyResult deform(const DeformationProblem& prob, const DeformationOptions& opts = {});

// Grid residuals of p o kappa against q0, with |p - q0| as baseline.
ConjugacyReport verify_conjugacy(const Hamiltonian& p, const PointMap& kappa, const Jet<double>& q0,
                                 const std::vector<Vector>& grid,
                                 ExecPolicy policy = ExecPolicy::Parallel);
// Same, reusing traces so that the error estimate of each point is recorded.
ConjugacyReport verify_conjugacy(const Hamiltonian& p, const KappaMap& kappa, const Jet<double>& q0,
                                 const std::vector<Vector>& grid,
                                 ExecPolicy policy = ExecPolicy::Parallel);

// size x size points of [-half, half]^2 in the (x_1, xi_1) plane, other coordinates 0.
std::vector<Vector> plane_grid(int dof, double half_width, int size);

// max |K^T J K - J| for the centered difference Jacobian K of the map at rho.
double map_symplectic_defect(const PointMap& kappa, const Vector& rho, double rel_step = 1e-4);

struct DecayFit {
  double slope = 0.0;          // least-squares slope of log|kappa(rho) - rho| against log|rho|
  double max_ratio = 0.0;      // max |kappa(rho) - rho| / |rho|^power
  int power = 0;
  std::vector<double> radii;
  std::vector<double> defects;
};

// Samples t * direction for t geometric from t_max down to t_min.
DecayFit near_identity_decay(const KappaMap& kappa, const Vector& direction, double t_max,
                             double t_min, int samples, int power,
                             ExecPolicy policy = ExecPolicy::Parallel);

void write_conjugacy_csv(std::ostream& os, const ConjugacyReport& rep);

}  // namespace hypnf
