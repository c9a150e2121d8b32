#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hypnf/deformation.hpp"
#include "hypnf/jet_io.hpp"
#include "hypnf/symplectic.hpp"

namespace hypnf::cli {

// flat_remainder {kind: "monomial-bump", alpha, beta, eps, radius, plateau}
struct FlatSpec {
  std::vector<int> alpha, beta;
  double eps = 1.0;
  double radius = 0.0;
  double plateau = 0.5;
};

// chart {delta, B0: "auto" | n x n array for the x block}
struct ChartSpec {
  double delta = 0.1;
  std::optional<Matrix> B0;
};

// Input document: {n, N, terms, flat_remainder?, chart?}
struct HamiltonianSpec {
  int n = 1;
  int N = 2;
  Jet<double> jet{1, 2};
  Json jet_doc;
  std::optional<FlatSpec> flat;
  ChartSpec chart;
};

HamiltonianSpec parse_hamiltonian_spec(const Json& doc);
FlatFunction make_flat(const HamiltonianSpec& spec);

// Williamson chart of the input: frame, jet in chart coordinates, region and remainder.
struct Chart {
  WilliamsonFrame frame;
  Jet<double> jet{1, 2};
  RegionSpec region;
  FlatFunction flat = FlatFunction::zero(1);
  bool has_flat = false;

  Hamiltonian hamiltonian() const { return has_flat ? Hamiltonian(jet, flat) : Hamiltonian(jet); }
};

WilliamsonFrame williamson_frame(const Jet<double>& jet);
Chart build_chart(const HamiltonianSpec& spec);

Json frame_to_json(const WilliamsonFrame& frame);
Json versions();
// FNV-1a 64-bit, lower-case hex
std::string fnv1a_hex(std::string_view bytes);

// Runs the hypnf command line; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hypnf::cli
