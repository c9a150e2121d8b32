#include "hypnf/cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "hypnf/normal_form.hpp"

namespace hypnf::cli {

namespace {

constexpr const char* kVersion = "0.1.0";

std::vector<int> int_array(const Json& v, int n, const std::string& what) {
  if (!v.is_array() || static_cast<int>(v.size()) != n)
    throw Error(ErrorKind::ParseError, what + " must be an array of length n");
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer() || e.get<int>() < 0)
      throw Error(ErrorKind::ParseError, what + " entries must be nonnegative integers");
    out.push_back(e.get<int>());
  }
  return out;
}

double number(const Json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) throw Error(ErrorKind::ParseError, std::string(key) + " must be a number");
  return obj[key].get<double>();
}

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json matrix_rows(const Matrix& m) {
  Json a = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) a.push_back(m(r, c));
  }
  return a;
}

Json complex_json(const Complex& c) { return Json::array({c.real(), c.imag()}); }

Json stats_json(const ResidualStats& s) {
  return {{"max", s.max}, {"mean", s.mean}, {"q50", s.q50}, {"q90", s.q90}, {"q99", s.q99}};
}

Json hit_json(const HitTime& t) {
  if (t.is_infinite()) return {{"status", "infinite"}, {"value", nullptr}, {"error", 0.0}};
  return {{"status", "finite"}, {"value", t.value}, {"error", t.error}};
}

Json action_json(const ActionPolynomial<Complex>& q) {
  Json a = Json::array();
  for (const auto& [e, c] : q.coeffs) a.push_back({{"k", e}, {"coeff", complex_json(c)}});
  return a;
}

Json action_json(const ActionPolynomial<Rational>& q) {
  Json a = Json::array();
  for (const auto& [e, c] : q.coeffs) a.push_back({{"k", e}, {"coeff", c.get_str()}});
  return a;
}

Vector point_arg(const std::vector<double>& v, int n, const char* what) {
  if (static_cast<int>(v.size()) != 2 * n)
    throw Error(ErrorKind::DimensionMismatch,
                std::string(what) + " needs " + std::to_string(2 * n) + " coordinates");
  return Vector::Map(v.data(), static_cast<Eigen::Index>(v.size()));
}

struct Globals {
  std::string input;
  std::string out_dir;
  std::uint64_t seed = 0;
  double tol = 0.0;  // 0 means the command default
  bool csv = false;
  int order = 0;     // 0 means N of the input
};

struct CommandArgs {
  std::vector<double> rho;
  double time = 1.0;
  bool variational = false;
  double delta = 0.0;
  int samples = 64;
  bool certify = false;
  std::string points;
  int cutoff_order = 4;
  double residual_step = 1e-3;
  bool exact = false;
  int s_steps = 8;
  int grid_size = 20;
  double half_width = 0.0;
  int diagnostics = 6;
  std::string kappa = "identity";
  int decay_samples = 6;
};

class Runner {
 public:
  Runner(const Globals& g, const CommandArgs& a, std::ostream& err) : g_(g), a_(a), err_(err) {}

  void load() {
    if (g_.input.empty()) throw Error(ErrorKind::ParseError, "--input is required");
    std::ifstream is(g_.input, std::ios::binary);
    if (!is) throw Error(ErrorKind::ParseError, "cannot open input '" + g_.input + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    bytes_ = ss.str();
    digest_ = fnv1a_hex(bytes_);
    Json doc;
    try {
      doc = Json::parse(bytes_);
    } catch (const Json::exception& e) {
      throw Error(ErrorKind::ParseError, std::string("invalid JSON: ") + e.what());
    }
    spec_ = parse_hamiltonian_spec(doc);
  }

  const std::string& digest() const { return digest_; }

  std::string csv_path(const std::string& name) const {
    const std::filesystem::path dir = g_.out_dir.empty() ? "." : g_.out_dir;
    std::filesystem::create_directories(dir);
    return (dir / name).string();
  }

  Json williamson() {
    const auto frame = williamson_frame(spec_.jet);
    Json j = frame_to_json(frame);
    err_ << "Williamson frame: n=" << frame.dof() << " ell=" << frame.ell << " m=" << frame.m
         << " symplectic_defect=" << frame.symplectic_defect << "\n";
    const auto f = frame.frequencies();
    for (Eigen::Index i = 0; i < f.size(); ++i)
      err_ << "  lambda_" << i + 1 << " = " << f(i).real() << (f(i).imag() < 0 ? " - " : " + ")
           << std::abs(f(i).imag()) << "i\n";
    return j;
  }

  Json bnf() {
    const int order = g_.order > 0 ? g_.order : spec_.N;
    BirkhoffOptions bo;
    if (g_.tol > 0.0) bo.resonance_tol = g_.tol;
    Json j;
    j["order"] = order;
    if (a_.exact) {
      williamson_layout(spec_.jet);  // exact mode needs an input already in Williamson form
      const auto pr = rational_jet_from_json(spec_.jet_doc).with_order(order);
      const auto nf = birkhoff_normalize<Rational>(pr, order, bo);
      Json gens = Json::array();
      for (const auto& g : nf.generators) gens.push_back(jet_to_json(g));
      Json lam = Json::array();
      for (const auto& l : nf.lambda) lam.push_back(l.get_str());
      j["mode"] = "exact";
      j["lambda"] = lam;
      j["generators"] = gens;
      j["q0"] = jet_to_json(nf.normal_form);
      j["q0_action"] = action_json(nf.q0);
      j["verification"] = {{"max_non_action", nf.max_non_action},
                           {"realness_defect", 0.0}};
    } else {
      const auto frame = williamson_frame(spec_.jet);
      const auto pw = to_williamson_coordinates(spec_.jet.with_order(order), frame);
      const auto nf = birkhoff_normalize_real(pw, order, bo);
      Json gens = Json::array();
      for (const auto& g : nf.generators) gens.push_back(jet_to_json(g));
      Json lam = Json::array();
      for (Eigen::Index i = 0; i < nf.lambda.size(); ++i) lam.push_back(complex_json(nf.lambda(i)));
      j["mode"] = "float";
      j["frame"] = frame_to_json(frame);
      j["lambda"] = lam;
      j["generators"] = gens;
      j["q0"] = jet_to_json(nf.normal_form);
      j["q0_action"] = action_json(nf.q0);
      j["verification"] = {{"max_non_action", nf.max_non_normal},
                           {"realness_defect", nf.realness_defect}};
    }
    err_ << "normal form to order " << order << ": max non-action coefficient "
         << j["verification"]["max_non_action"].get<double>() << "\n";
    return j;
  }

  Json flow() {
    const auto chart = build_chart(spec_);
    const Vector rho = point_arg(a_.rho, spec_.n, "--rho");
    FlowOptions fo;
    if (g_.tol > 0.0) fo.rtol = g_.tol;
    const auto h = chart.hamiltonian();
    const auto tr = a_.variational ? variational_flow(h, rho, 0.0, a_.time, fo)
                                   : integrate(h, rho, 0.0, a_.time, fo);
    Json j = {{"rho0", vector_json(rho)},
              {"time", a_.time},
              {"final_state", vector_json(tr.states.back())},
              {"energy_drift", tr.energy_drift},
              {"global_error", tr.global_error},
              {"rtol_used", tr.rtol_used},
              {"samples", tr.times.size()},
              {"steps", tr.dense.accepted},
              {"rejected", tr.dense.rejected}};
    if (tr.has_dkappa()) {
      j["dkappa_final"] = matrix_rows(tr.dkappa.back());
      j["max_symplectic_defect"] = tr.max_symplectic_defect();
    }
    if (g_.csv) {
      const auto path = csv_path("trajectory.csv");
      std::ofstream os(path);
      tr.write_csv(os);
      j["csv"] = path;
    }
    return j;
  }

  RegionSpec region(const Chart& chart) const {
    RegionSpec r = chart.region;
    if (a_.delta > 0.0) r.delta = a_.delta;
    return r;
  }

  Json hit() {
    const auto chart = build_chart(spec_);
    const Vector rho = point_arg(a_.rho, spec_.n, "--rho");
    HitOptions ho;
    if (g_.tol > 0.0) ho.root_tol = g_.tol;
    const auto ht = hitting_times(chart.hamiltonian(), rho, region(chart), ho);
    const auto reg = region(chart);
    return {{"rho", vector_json(rho)},
            {"delta", reg.delta},
            {"region", region_name(region_membership(rho, reg))},
            {"t_minus_out", hit_json(ht.t_minus_out)},
            {"t_plus_out", hit_json(ht.t_plus_out)},
            {"t_minus_in", hit_json(ht.t_minus_in)},
            {"t_plus_in", hit_json(ht.t_plus_in)},
            {"reentry_detected", ht.reentry_detected}};
  }

  Json gronwall() {
    const auto chart = build_chart(spec_);
    GronwallOptions go;
    if (g_.tol > 0.0) go.flow.rtol = g_.tol;
    const auto h = chart.hamiltonian();
    const auto reg = region(chart);
    GronwallReport rep;
    Json j;
    if (a_.certify) {
      const auto cert = certify_delta(h, reg, a_.samples, g_.seed, 20, go);
      rep = cert.report;
      j["certified_delta"] = cert.delta;
      j["halvings"] = cert.halvings;
    } else {
      rep = estimate_gronwall(h, reg, a_.samples, g_.seed, go);
    }
    j["lambda_minus"] = rep.lambda_minus;
    j["lambda_plus"] = rep.lambda_plus;
    j["lambda1"] = rep.lambda1;
    j["lambdan"] = rep.lambdan;
    j["slack"] = rep.slack;
    j["delta"] = rep.delta;
    j["samples"] = rep.samples;
    j["seed"] = rep.seed;
    j["points_checked"] = rep.points_checked;
    j["monotone"] = rep.monotone;
    return j;
  }

  Json homological() {
    const auto chart = build_chart(spec_);
    if (!chart.has_flat)
      throw Error(ErrorKind::ParseError, "homological needs a flat_remainder as right-hand side");
    std::vector<Vector> pts;
    if (!a_.points.empty()) {
      std::ifstream is(a_.points);
      if (!is) throw Error(ErrorKind::ParseError, "cannot open points file '" + a_.points + "'");
      pts = read_points_csv(is, spec_.n);
    } else {
      pts.push_back(point_arg(a_.rho, spec_.n, "--rho"));
    }
    HomologicalOptions ho;
    if (g_.tol > 0.0) ho.tol = g_.tol;
    ho.delta = chart.region.delta;
    const Hamiltonian h(chart.jet);
    HomologicalSolver solver(h, chart.flat, make_partition(a_.cutoff_order, chart.region.B0), ho);
    const auto values = solve_batch(solver, pts);
    PointFunction f = [&solver](const Vector& v) { return solver(v); };
    PointFunction g = [&chart](const Vector& v) { return chart.flat(v); };
    const auto res = residual_check(h, f, g, pts, a_.residual_step);
    std::vector<double> residuals;
    Json rows = Json::array();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      residuals.push_back(res.rows[i].residual);
      rows.push_back({{"point", vector_json(pts[i])},
                      {"f_value", values[i].value},
                      {"tail_bound", values[i].tail_bound},
                      {"panel_error", values[i].panel_error},
                      {"flow_error", values[i].flow_error},
                      {"residual", res.rows[i].residual}});
    }
    Json j = {{"cutoff_order", a_.cutoff_order},
              {"tol", ho.tol},
              {"residual_step", a_.residual_step},
              {"max_residual", res.max_residual},
              {"values", rows}};
    if (g_.csv) {
      const auto path = csv_path("homological.csv");
      std::ofstream os(path);
      write_homological_csv(os, pts, values, residuals);
      j["csv"] = path;
    }
    return j;
  }

  DeformationProblem problem(const Chart& chart) const {
    DeformationProblem prob(chart.jet, chart.has_flat ? chart.flat : FlatFunction::zero(spec_.n),
                            region(chart));
    prob.s_steps = a_.s_steps;
    if (g_.tol > 0.0) prob.quad_tol = g_.tol;
    return prob;
  }

  DeformationOptions deform_options() const {
    DeformationOptions o;
    o.cutoff_order = a_.cutoff_order;
    o.seed = g_.seed;
    o.grid_size = a_.grid_size;
    o.grid_half_width = a_.half_width;
    o.diagnostic_points = a_.diagnostics;
    return o;
  }

  Json conjugacy_json(const ConjugacyReport& rep, const char* csv_name) const {
    Json j = {{"points", rep.points.size()},
              {"residual", stats_json(rep.residual)},
              {"baseline", stats_json(rep.baseline)},
              {"reduction", std::isfinite(rep.reduction) ? Json(rep.reduction) : Json("inf")}};
    if (g_.csv) {
      const auto path = csv_path(csv_name);
      std::ofstream os(path);
      write_conjugacy_csv(os, rep);
      j["csv"] = path;
    }
    return j;
  }

  Json deform() {
    const auto chart = build_chart(spec_);
    const auto prob = problem(chart);
    const auto opts = deform_options();
    const auto res = hypnf::deform(prob, opts);
    Json nodes = Json::array();
    for (const auto& nd : res.nodes) {
      nodes.push_back({{"s", nd.s},
                       {"homological_residual", nd.homological_residual},
                       {"symplectic_defect", nd.symplectic_defect},
                       {"conjugacy_residual", nd.conjugacy_residual},
                       {"normalized_residual", nd.normalized_residual},
                       {"generator_norm", nd.generator_norm},
                       {"error_estimate", nd.error_estimate}});
    }
    Json j = {{"s_steps", prob.s_steps},
              {"quad_tol", prob.quad_tol},
              {"ode_tol", prob.ode_tol},
              {"delta", prob.region.delta},
              {"lambda1", res.lambda1},
              {"slack", res.slack},
              {"slack_q0", res.slack_q0},
              {"slack_q1", res.slack_q1},
              {"nodes", nodes},
              {"max_symplectic_defect", res.max_symplectic_defect},
              {"max_error_estimate", res.max_error_estimate},
              {"final_residual", res.grid.residual.max},
              {"kappa", res.kappa1.is_identity() ? "identity" : "deformation"},
              {"accepted", res.accepted},
              {"grid", conjugacy_json(res.grid, "conjugacy.csv")}};
    if (!res.kappa1.is_identity() && a_.decay_samples >= 2) {
      Vector dir = Vector::Ones(2 * spec_.n);
      dir.tail(spec_.n) *= 0.8;
      const int nflat = prob.r.certificate().order;
      const double tmax = 2.0 * prob.region.delta / 3.0;
      const auto fit = near_identity_decay(res.kappa1, dir, tmax, tmax / 10.0, a_.decay_samples,
                                           std::min(nflat - 2, 4));
      j["near_identity"] = {{"slope", fit.slope},
                            {"max_ratio", fit.max_ratio},
                            {"power", fit.power},
                            {"radii", fit.radii},
                            {"defects", fit.defects}};
    }
    return j;
  }

  Json verify() {
    const auto chart = build_chart(spec_);
    const auto p = chart.hamiltonian();
    const auto prob = problem(chart);
    const double hw = a_.half_width > 0.0 ? a_.half_width : 2.0 * prob.region.delta / 3.0;
    Json j = {{"kappa", a_.kappa}, {"grid_size", a_.grid_size}, {"half_width", hw}};
    if (a_.kappa == "identity") {
      PointMap id = [](const Vector& v) { return v; };
      j["conjugacy"] = conjugacy_json(
          verify_conjugacy(p, id, chart.jet, plane_grid(spec_.n, hw, a_.grid_size)),
          "verify.csv");
    } else if (a_.kappa == "deform") {
      auto opts = deform_options();
      opts.grid_half_width = hw;
      const auto res = hypnf::deform(prob, opts);
      j["conjugacy"] = conjugacy_json(res.grid, "verify.csv");
    } else {
      throw Error(ErrorKind::ParseError, "--kappa must be 'identity' or 'deform'");
    }
    return j;
  }

 private:
  const Globals& g_;
  const CommandArgs& a_;
  std::ostream& err_;
  std::string bytes_;
  std::string digest_;
  HamiltonianSpec spec_;
};

void emit(const Json& report, const Globals& g, std::ostream& out) {
  const std::string text = report.dump(2) + "\n";
  if (g.out_dir.empty()) {
    out << text;
    return;
  }
  std::filesystem::create_directories(g.out_dir);
  std::ofstream os(std::filesystem::path(g.out_dir) / "report.json", std::ios::binary);
  os << text;
}

}  // namespace

HamiltonianSpec parse_hamiltonian_spec(const Json& doc) {
  HamiltonianSpec s;
  s.jet = jet_from_json(doc);
  s.n = s.jet.dof();
  s.N = s.jet.order();
  s.jet_doc = {{"n", doc["n"]}, {"N", doc["N"]}, {"terms", doc["terms"]}};
  if (doc.contains("flat_remainder") && !doc["flat_remainder"].is_null()) {
    const Json& f = doc["flat_remainder"];
    if (!f.is_object()) throw Error(ErrorKind::ParseError, "flat_remainder must be an object");
    const std::string kind = f.value("kind", "monomial-bump");
    if (kind != "monomial-bump")
      throw Error(ErrorKind::ParseError, "flat_remainder kind '" + kind + "' is not supported");
    FlatSpec fs;
    fs.alpha = int_array(f.value("alpha", Json()), s.n, "flat_remainder.alpha");
    fs.beta = int_array(f.value("beta", Json()), s.n, "flat_remainder.beta");
    fs.eps = number(f, "eps", 1.0);
    fs.radius = number(f, "radius", 0.0);
    fs.plateau = number(f, "plateau", 0.5);
    if (!(fs.plateau > 0.0 && fs.plateau < 1.0))
      throw Error(ErrorKind::ParseError, "flat_remainder.plateau must lie in (0, 1)");
    s.flat = fs;
  }
  if (doc.contains("chart") && !doc["chart"].is_null()) {
    const Json& c = doc["chart"];
    if (!c.is_object()) throw Error(ErrorKind::ParseError, "chart must be an object");
    s.chart.delta = number(c, "delta", s.chart.delta);
    if (!(s.chart.delta > 0.0)) throw Error(ErrorKind::ParseError, "chart.delta must be positive");
    if (c.contains("B0") && !(c["B0"].is_string() && c["B0"].get<std::string>() == "auto")) {
      const Json& b = c["B0"];
      if (!b.is_array() || static_cast<int>(b.size()) != s.n)
        throw Error(ErrorKind::ParseError, "chart.B0 must be \"auto\" or an n x n array");
      Matrix m(s.n, s.n);
      for (int r = 0; r < s.n; ++r) {
        if (!b[static_cast<std::size_t>(r)].is_array() ||
            static_cast<int>(b[static_cast<std::size_t>(r)].size()) != s.n)
          throw Error(ErrorKind::ParseError, "chart.B0 rows must have length n");
        for (int k = 0; k < s.n; ++k) {
          const Json& e = b[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)];
          if (!e.is_number()) throw Error(ErrorKind::ParseError, "chart.B0 entries must be numbers");
          m(r, k) = e.get<double>();
        }
      }
      s.chart.B0 = m;
    }
  }
  return s;
}

FlatFunction make_flat(const HamiltonianSpec& spec) {
  if (!spec.flat) return FlatFunction::zero(spec.n);
  const auto& f = *spec.flat;
  return FlatFunction::monomial_bump(spec.n, Monomial::from_exponents(f.alpha, f.beta), f.eps,
                                     f.radius, f.plateau);
}

WilliamsonFrame williamson_frame(const Jet<double>& jet) {
  const Hamiltonian h(jet);
  const auto fm = fundamental_matrix(h, PhasePoint::zero(jet.dof()));
  const auto quads = classify_spectrum(fm);
  return williamson_normalize(quadratic_jet(quadratic_hessian(jet)), quads);
}

Chart build_chart(const HamiltonianSpec& spec) {
  Chart c;
  c.frame = williamson_frame(spec.jet);
  c.jet = to_williamson_coordinates(spec.jet, c.frame);
  c.region = region_from_frame(c.frame, spec.chart.delta);
  if (spec.chart.B0) {
    const Matrix& b = *spec.chart.B0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(b);
    if ((b - b.transpose()).cwiseAbs().maxCoeff() > 1e-12 || es.eigenvalues().minCoeff() <= 0.0)
      throw Error(ErrorKind::ParseError, "chart.B0 must be symmetric positive definite");
    c.region.B0 = AnisotropicNorm{b};
  }
  c.has_flat = spec.flat.has_value();
  c.flat = make_flat(spec);
  return c;
}

Json frame_to_json(const WilliamsonFrame& frame) {
  Json j;
  j["n"] = frame.dof();
  j["ell"] = frame.ell;
  j["m"] = frame.m;
  j["a"] = frame.a;
  j["c"] = frame.c;
  j["d"] = frame.d;
  j["S"] = matrix_rows(frame.S);
  j["symplectic_defect"] = frame.symplectic_defect;
  Json ev = Json::array();
  const auto f = frame.frequencies();
  for (Eigen::Index i = 0; i < f.size(); ++i) ev.push_back(complex_json(f(i)));
  j["frequencies"] = ev;
  return j;
}

Json versions() {
  std::ostringstream eigen, json;
  eigen << EIGEN_WORLD_VERSION << "." << EIGEN_MAJOR_VERSION << "." << EIGEN_MINOR_VERSION;
  json << NLOHMANN_JSON_VERSION_MAJOR << "." << NLOHMANN_JSON_VERSION_MINOR << "."
       << NLOHMANN_JSON_VERSION_PATCH;
  return {{"hypnf", kVersion}, {"eigen", eigen.str()}, {"nlohmann_json", json.str()},
          {"cli11", CLI11_VERSION}};
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (const char* t = std::getenv("HYPNF_THREADS")) {
    const int k = std::atoi(t);
    if (k > 0) omp_set_num_threads(k);
  }

  Globals g;
  CommandArgs a;
  CLI::App app{"Birkhoff normal forms near hyperbolic fixed points", "hypnf"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--input", g.input, "Hamiltonian JSON document");
  app.add_option("--out", g.out_dir, "write report.json and CSV files into this directory");
  app.add_option("--seed", g.seed, "seed for sampling (default 0)");
  app.add_option("--tol", g.tol, "main tolerance of the command");
  app.add_flag("--csv", g.csv, "write trajectory or grid CSV files");
  app.add_option("--order", g.order, "normalization order (default N of the input)");

  app.add_subcommand("williamson", "symplectic normal form of the quadratic part");
  auto* bnf = app.add_subcommand("bnf", "Birkhoff normal form to order N");
  bnf->add_flag("--exact", a.exact, "rational arithmetic; input must be in Williamson form");
  auto* flow = app.add_subcommand("flow", "integrate the Hamiltonian flow in the Williamson chart");
  flow->add_option("--rho", a.rho, "initial point x1..xn,xi1..xin")->delimiter(',')->required();
  flow->add_option("--time", a.time, "final time (negative integrates backward)");
  flow->add_flag("--variational", a.variational, "also integrate the variational equation");
  auto* hit = app.add_subcommand("hit", "hitting times of the outgoing and incoming regions");
  hit->add_option("--rho", a.rho, "point x1..xn,xi1..xin")->delimiter(',')->required();
  hit->add_option("--delta", a.delta, "ball radius (default chart.delta)");
  auto* gronwall = app.add_subcommand("gronwall", "empirical growth rates in the outgoing region");
  gronwall->add_option("--samples", a.samples, "number of sampled trajectories");
  gronwall->add_option("--delta", a.delta, "ball radius (default chart.delta)");
  gronwall->add_flag("--certify", a.certify, "halve delta until monotonicity holds");
  auto* homological = app.add_subcommand("homological", "solve H_p f = g for the flat remainder g");
  auto* hrho = homological->add_option("--rho", a.rho, "evaluation point")->delimiter(',');
  homological->add_option("--points", a.points, "CSV file of evaluation points")->excludes(hrho);
  homological->add_option("--cutoff-order", a.cutoff_order, "smoothness order of the cutoffs");
  homological->add_option("--residual-step", a.residual_step, "flow step of the residual check");
  auto* deform = app.add_subcommand("deform", "conjugate q0 + r back to q0");
  auto* verify = app.add_subcommand("verify", "residual of p o kappa against q0 on a grid");
  for (auto* sc : {deform, verify}) {
    sc->add_option("--s-steps", a.s_steps, "uniform s-nodes");
    sc->add_option("--grid-size", a.grid_size, "grid points per axis");
    sc->add_option("--half-width", a.half_width, "grid half width (default 2 delta / 3)");
    sc->add_option("--cutoff-order", a.cutoff_order, "smoothness order of the cutoffs");
    sc->add_option("--diagnostics", a.diagnostics, "monitored points per s-node");
    sc->add_option("--delta", a.delta, "ball radius (default chart.delta)");
  }
  deform->add_option("--decay-samples", a.decay_samples, "points on the decay ray (0 skips it)");
  verify->add_option("--kappa", a.kappa, "identity or deform");

  std::vector<std::string> argv;
  for (auto it = args.rbegin(); it != args.rend(); ++it) argv.push_back(*it);
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "hypnf: " << e.what() << "\n";
    return exit_code(ErrorKind::ParseError);
  }

  std::string command;
  for (auto* sc : app.get_subcommands()) command = sc->get_name();

  Runner runner(g, a, err);
  Json report;
  report["command"] = command;
  report["versions"] = versions();
  report["seed"] = g.seed;
  report["tol"] = g.tol;
  int code = 0;
  try {
    runner.load();
    report["input_digest"] = runner.digest();
    Json result;
    if (command == "williamson") result = runner.williamson();
    else if (command == "bnf") result = runner.bnf();
    else if (command == "flow") result = runner.flow();
    else if (command == "hit") result = runner.hit();
    else if (command == "gronwall") result = runner.gronwall();
    else if (command == "homological") result = runner.homological();
    else if (command == "deform") result = runner.deform();
    else result = runner.verify();
    report["status"] = "ok";
    report["result"] = result;
  } catch (const ResonanceError& e) {
    code = exit_code(e.kind());
    report["status"] = "error";
    report["error"] = {{"kind", std::string(error_kind_name(e.kind()))}, {"message", e.what()}, {"k", e.k()}};
    err << "hypnf: " << e.what() << "\n";
  } catch (const Error& e) {
    code = exit_code(e.kind());
    report["status"] = "error";
    report["error"] = {{"kind", std::string(error_kind_name(e.kind()))}, {"message", e.what()}};
    err << "hypnf: " << e.what() << "\n";
  } catch (const std::exception& e) {
    code = 1;
    report["status"] = "error";
    report["error"] = {{"kind", "InternalError"}, {"message", e.what()}};
    err << "hypnf: " << e.what() << "\n";
  }
  if (!report.contains("input_digest")) report["input_digest"] = nullptr;
  report["exit_code"] = code;
  emit(report, g, out);
  return code;
}

}  // namespace hypnf::cli
