#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include "hypnf/cli.hpp"

using namespace hypnf;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
  Json json() const { return Json::parse(out); }
};

Run hypnf_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string data(const std::string& name) { return std::string(HYPNF_DATA_DIR) + "/" + name; }

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("hypnf_cli_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("williamson: saddle and already-normal inputs") {
  const auto r = hypnf_run({"williamson", "--input", data("saddle.json")});
  REQUIRE(r.code == 0);
  const auto j = r.json();
  CHECK(j["status"] == "ok");
  CHECK(j["result"]["a"].size() == 1);
  CHECK(j["result"]["a"][0].get<double>() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(j["result"]["symplectic_defect"].get<double>() < 1e-10);
  CHECK(r.err.find("lambda_1") != std::string::npos);

  const auto id = hypnf_run({"williamson", "--input", data("xi-x.json")}).json();
  const auto s = id["result"]["S"];
  REQUIRE(s.size() == 4);
  CHECK(s[0].get<double>() == doctest::Approx(1.0));
  CHECK(std::abs(s[1].get<double>()) < 1e-14);
  CHECK(std::abs(s[2].get<double>()) < 1e-14);
  CHECK(s[3].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("williamson: elliptic input exits with the spectrum code") {
  const auto r = hypnf_run({"williamson", "--input", data("elliptic.json")});
  CHECK(r.code == 3);
  CHECK(r.err.find("purely imaginary spectrum") != std::string::npos);
  const auto j = r.json();
  CHECK(j["status"] == "error");
  CHECK(j["exit_code"] == 3);
  CHECK(j["error"]["kind"] == "PurelyImaginarySpectrum");
}

TEST_CASE("bnf: cubic saddle, resonance and order 2") {
  for (const char* mode : {"", "--exact"}) {
    std::vector<std::string> args{"bnf", "--input", data("cubic-saddle.json")};
    if (*mode) args.push_back(mode);
    const auto r = hypnf_run(args);
    REQUIRE(r.code == 0);
    const auto res = r.json()["result"];
    CHECK(res["verification"]["max_non_action"].get<double>() == 0.0);
    const auto q0 = jet_from_json(res["q0"]);
    Jet<double> iota(1, 3);
    iota.add_term(Monomial::from_exponents(std::vector<int>{1}, std::vector<int>{1}), 1.0);
    CHECK(q0 == iota);
    CHECK(res["generators"].size() == 1);
  }

  const auto res = hypnf_run({"bnf", "--input", data("resonant-1-2.json")});
  CHECK(res.code == 4);
  const auto j = res.json();
  CHECK(j["error"]["k"] == Json::array({2, -1}));
  CHECK(res.err.find("(2,-1)") != std::string::npos);

  const auto two = hypnf_run({"bnf", "--input", data("saddle.json"), "--order", "2"}).json();
  CHECK(two["result"]["generators"].empty());
  const auto q0 = jet_from_json(two["result"]["q0"]);
  CHECK(q0.size() == 1);
  CHECK(q0.coeff(Monomial::from_exponents(std::vector<int>{1}, std::vector<int>{1})) ==
        doctest::Approx(2.0));
}

TEST_CASE("bnf: emitted jets re-parse to equal jets") {
  const auto res = hypnf_run({"bnf", "--input", data("cubic-saddle.json"), "--order", "5"}).json();
  for (const auto& doc : res["result"]["generators"]) {
    const auto jet = jet_from_json(doc);
    CHECK(jet_from_json(jet_to_json(jet)) == jet);
    CHECK(jet_to_json(jet) == doc);
  }
  const auto q0 = jet_from_json(res["result"]["q0"]);
  CHECK(jet_to_json(q0) == res["result"]["q0"]);
}

TEST_CASE("hit: linear oracle and origin") {
  const auto r = hypnf_run({"hit", "--input", data("xi-x.json"), "--rho", "1,0.5"});
  REQUIRE(r.code == 0);
  const auto t = r.json()["result"]["t_minus_out"];
  CHECK(t["status"] == "finite");
  CHECK(std::abs(t["value"].get<double>() - std::log(2.0)) < 1e-8);
  // p = xi^2 - x^2 has rate 2 in its Williamson chart
  const auto s = hypnf_run({"hit", "--input", data("saddle.json"), "--rho", "1,0.5"}).json();
  CHECK(std::abs(s["result"]["t_minus_out"]["value"].get<double>() - std::log(2.0) / 2) < 1e-8);

  const auto axis = hypnf_run({"hit", "--input", data("xi-x.json"), "--rho", "0.1,0"}).json();
  CHECK(axis["result"]["t_minus_out"]["status"] == "infinite");

  const auto o = hypnf_run({"hit", "--input", data("xi-x.json"), "--rho", "0,0"});
  CHECK(o.code == 13);
  CHECK(o.err.find("T_minus_out undefined at origin") != std::string::npos);

  const auto dim = hypnf_run({"hit", "--input", data("xi-x.json"), "--rho", "1,0.5,2"});
  CHECK(dim.code == 9);
}

TEST_CASE("deform and verify: trivial cases") {
  const auto d = hypnf_run({"deform", "--input", data("unperturbed.json"), "--grid-size", "4"});
  REQUIRE(d.code == 0);
  const auto res = d.json()["result"];
  CHECK(res["final_residual"].get<double>() == 0.0);
  CHECK(res["kappa"] == "identity");
  CHECK(res["accepted"] == true);

  const auto v = hypnf_run({"verify", "--input", data("perturbed.json"), "--grid-size", "6"});
  REQUIRE(v.code == 0);
  const auto c = v.json()["result"]["conjugacy"];
  CHECK(c["residual"] == c["baseline"]);
  CHECK(c["baseline"]["max"].get<double>() > 0.0);
  CHECK(c["reduction"].get<double>() == 1.0);
}

TEST_CASE("homological: eigen-monomial point") {
  const auto r = hypnf_run(
      {"homological", "--input", data("eigen-monomial.json"), "--rho", "0.2,0.15", "--tol", "1e-7"});
  REQUIRE(r.code == 0);
  const auto row = r.json()["result"]["values"][0];
  const double k = make_partition(4, lyapunov_B0(Matrix::Constant(1, 1, 1.0))).profile_integral();
  const double x = 0.2, xi = 0.15;
  const double expected = -x * x * std::pow(xi, 4) / 2 + k * std::pow(x * xi, 3) / 2;
  CHECK(std::abs(row["f_value"].get<double>() - expected) < 1e-6);
  CHECK(row["residual"].get<double>() < 1e-5);

  const auto missing = hypnf_run({"homological", "--input", data("xi-x.json"), "--rho", "0.2,0.1"});
  CHECK(missing.code == 2);
}

TEST_CASE("reports are deterministic and written to --out") {
  const std::vector<std::string> args{"gronwall", "--input", data("perturbed.json"), "--samples",
                                      "8", "--seed", "3"};
  const auto a = hypnf_run(args);
  const auto b = hypnf_run(args);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.json()["result"]["seed"] == 3);

  const auto dir = scratch("out");
  const auto f = hypnf_run({"flow", "--input", data("xi-x.json"), "--rho", "1,1", "--time", "1",
                            "--out", dir.string(), "--csv"});
  REQUIRE(f.code == 0);
  CHECK(f.out.empty());
  std::ifstream rep(dir / "report.json");
  REQUIRE(rep.good());
  const auto j = Json::parse(rep);
  const auto fin = j["result"]["final_state"];
  CHECK(std::abs(fin[0].get<double>() - std::exp(1.0)) < 1e-10);
  CHECK(std::abs(fin[1].get<double>() - std::exp(-1.0)) < 1e-10);
  std::ifstream csv(dir / "trajectory.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "t,x1,xi1");
  std::filesystem::remove_all(dir);
}

TEST_CASE("input errors map to the parse exit code") {
  CHECK(hypnf_run({"williamson", "--input", data("does-not-exist.json")}).code == 2);
  CHECK(hypnf_run({"unknown-command"}).code == 2);
  CHECK(hypnf_run({"williamson"}).code == 2);
  const auto dir = scratch("bad");
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "broken.json") << "{\"n\": 1, \"N\": 2, \"terms\": [";
    std::ofstream(dir / "short.json")
        << R"({"n": 2, "N": 2, "terms": [{"alpha": [1], "beta": [1], "coeff": 1.0}]})";
    std::ofstream(dir / "plugin.json")
        << R"({"n": 1, "N": 2, "terms": [{"alpha": [1], "beta": [1], "coeff": 1.0}],
              "flat_remainder": {"kind": "callable-plugin"}})";
  }
  for (const char* f : {"broken.json", "short.json", "plugin.json"}) {
    const auto r = hypnf_run({"williamson", "--input", (dir / f).string()});
    CHECK(r.code == 2);
    CHECK(r.json()["error"]["kind"] == "ParseError");
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("every error kind has a distinct exit code outside the spectrum family") {
  const ErrorKind spectrum[] = {ErrorKind::NotCriticalPoint, ErrorKind::DegenerateHessian,
                                ErrorKind::PurelyImaginarySpectrum, ErrorKind::ZeroEigenvalue,
                                ErrorKind::NonDiagonalizable, ErrorKind::ResonantOrMultipleSpectrum,
                                ErrorKind::NormalizationFailed, ErrorKind::NoComplexBlocks,
                                ErrorKind::UnstableA0};
  for (auto k : spectrum) CHECK(exit_code(k) == 3);
  const ErrorKind others[] = {
      ErrorKind::ParseError,         ErrorKind::ResonanceObstruction, ErrorKind::NotWilliamson,
      ErrorKind::NonActionMonomial,  ErrorKind::GeneratorTooLowDegree, ErrorKind::NegativeAction,
      ErrorKind::DimensionMismatch,  ErrorKind::StepSizeCollapse,    ErrorKind::LeftDomain,
      ErrorKind::EnergyDrift,        ErrorKind::OriginUndefined,     ErrorKind::NoCrossingWithinHorizon,
      ErrorKind::InsufficientSamples, ErrorKind::DecayMarginTooSmall, ErrorKind::HomologicalFailure,
      ErrorKind::ResidualDiverging};
  std::set<int> codes;
  for (auto k : others) {
    CHECK(exit_code(k) != 0);
    CHECK(exit_code(k) != 3);
    codes.insert(exit_code(k));
  }
  CHECK(codes.size() == std::size(others));
  CHECK(exit_code(ErrorKind::ParseError) == 2);
  CHECK(exit_code(ErrorKind::ResonanceObstruction) == 4);
}

TEST_CASE("input digest") {
  CHECK(cli::fnv1a_hex("") == "cbf29ce484222325");
  CHECK(cli::fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("the installed binary reports exit codes") {
  const std::string bin = HYPNF_BINARY;
  auto status = [&](const std::string& args) {
    const int s = std::system((bin + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  CHECK(status("williamson --input " + data("saddle.json")) == 0);
  CHECK(status("williamson --input " + data("elliptic.json")) == 3);
  CHECK(status("bnf --input " + data("resonant-1-2.json")) == 4);
  CHECK(status("--help") == 0);
}
