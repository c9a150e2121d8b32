#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

#include "hypnf/hamiltonian.hpp"
#include "hypnf/ode.hpp"
#include "hypnf/symplectic.hpp"

namespace hypnf {

struct FlowOptions {
  double rtol = 1e-12;
  double atol = 1e-15;
  double energy_tol_factor = 1e-9;  // energy_tol = factor * (1 + |p(rho0)|)
  int energy_retries = 2;           // tighten rtol by 100x per retry before failing
  double chart_radius = std::numeric_limits<double>::infinity();
  long max_steps = 200000;
};

struct Trajectory {
  int dof = 0;
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Matrix> dkappa;  // empty unless the variational flow was requested
  OdeSolution dense;
  double energy_drift = 0.0;
  double global_error = 0.0;
  double rtol_used = 0.0;
  double atol_used = 0.0;

  bool has_dkappa() const { return !dkappa.empty(); }
  Vector state(double t) const;
  Matrix dkappa_at(double t) const;
  double max_symplectic_defect() const;
  void write_csv(std::ostream& os) const;
};

Trajectory integrate(const Hamiltonian& h, const Vector& rho0, double t0, double t1,
                     const FlowOptions& opts = {});
Trajectory variational_flow(const Hamiltonian& h, const Vector& rho0, double t0, double t1,
                            const FlowOptions& opts = {});

// Time-t flow map of H started at rho.
Vector flow_map(const Hamiltonian& h, const Vector& rho, double t, const FlowOptions& opts = {});

struct RegionSpec {
  double delta = 0.0;
  double cone_factor = 2.0;
  AnisotropicNorm B0;

  int dof() const { return B0.dim(); }
  void validate(int dof) const;
};

// RegionSpec with B0 from the Lyapunov equation of the Williamson x-block.
RegionSpec region_from_frame(const WilliamsonFrame& frame, double delta);

enum class Region { Out, In, Both, Neither };
const char* region_name(Region r);

struct BlockNorms {
  double x = 0.0;   // ||x||_0
  double xi = 0.0;  // ||xi||_0
};
BlockNorms block_norms(const Vector& rho, const AnisotropicNorm& b0);

Region region_membership(const Vector& rho, const RegionSpec& spec);

enum class HitKind { MinusOut, PlusOut, MinusIn, PlusIn };
const char* hit_name(HitKind k);

struct HitTime {
  enum class Status { Finite, Infinite };
  Status status = Status::Finite;
  double value = 0.0;
  double error = 0.0;  // root tolerance plus propagated integration error
  bool is_infinite() const { return status == Status::Infinite; }
};

struct HittingTimes {
  HitTime t_minus_out, t_plus_out, t_minus_in, t_plus_in;
  bool reentry_detected = false;
  const HitTime& get(HitKind k) const;
};

struct HitOptions {
  FlowOptions flow;
  double root_tol = 1e-12;
  double flat_tol = 1e-12;  // ||xi||_0 < flat_tol ||x||_0 counts as lying on I_+
  double horizon = 0.0;     // 0 means 50 / lambda_1
  double lambda1 = 0.0;     // 0 means computed from the quadratic part of H
  bool check_reentry = true;
};

// Smallest Re(lambda) of the linearization of the jet at the origin.
double smallest_rate(const Hamiltonian& h);
double largest_rate(const Hamiltonian& h);

HitTime hitting_time(const Hamiltonian& h, const Vector& rho0, const RegionSpec& spec, HitKind kind,
                     const HitOptions& opts = {});
HittingTimes hitting_times(const Hamiltonian& h, const Vector& rho0, const RegionSpec& spec,
                           const HitOptions& opts = {});

struct GronwallOptions {
  FlowOptions flow;
  int probes_per_unit_time = 40;
  double min_radius_fraction = 0.05;  // samples drawn with ||rho||_0 in [fraction, 1) * delta
  ExecPolicy policy = ExecPolicy::Parallel;
};

struct GronwallReport {
  double lambda_minus = 0.0;  // smallest observed growth/decay rate
  double lambda_plus = 0.0;   // largest observed rate
  double lambda1 = 0.0;       // linear exponents from the spectrum
  double lambdan = 0.0;
  double slack = 0.0;  // max(lambda1 - lambda_minus, lambda_plus - lambdan, 0)
  double delta = 0.0;
  int samples = 0;
  std::uint64_t seed = 0;
  long points_checked = 0;
  bool monotone = true;  // d/dt ||x||_0 > 0 and d/dt ||xi||_0 < 0 inside the outgoing region
};

// Instantaneous rates d/dt log||x||_0 and -d/dt log||xi||_0 at rho.
struct Rates {
  double x = std::numeric_limits<double>::quiet_NaN();
  double xi = std::numeric_limits<double>::quiet_NaN();
};
Rates log_norm_rates(const Hamiltonian& h, const Vector& rho, const AnisotropicNorm& b0);

// Random point of the outgoing region, reproducible from (seed, index).
Vector sample_outgoing(const RegionSpec& spec, std::uint64_t seed, std::uint64_t index,
                       double min_radius_fraction = 0.05);

GronwallReport estimate_gronwall(const Hamiltonian& h, const RegionSpec& spec, int samples,
                                 std::uint64_t seed, const GronwallOptions& opts = {});

struct DeltaCertificate {
  double delta = 0.0;
  int halvings = 0;
  GronwallReport report;
};

// Halves delta until the monotonicity check holds on every sample.
DeltaCertificate certify_delta(const Hamiltonian& h, const RegionSpec& spec, int samples,
                               std::uint64_t seed, int max_halvings = 20,
                               const GronwallOptions& opts = {});

}  // namespace hypnf
