#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sofsat/dar_model.hpp"
#include "sofsat/synthesis.hpp"
#include "sofsat/verifier.hpp"

namespace sofsat::io {

using Json = nlohmann::ordered_json;

// "x1^2", "-0.5*x1*x2^3", "2"; states are x1..xn.
Monomial parse_monomial(const std::string& text, Index n);
// Comma separated list, one monomial per entry of pi.
std::vector<Monomial> parse_monomial_list(const std::string& text, Index n);

// Model documents:
//   dims      {n, n_pi, n_pi_x, m, p, l}
//   A1 .. Ups3, Sigma1, Sigma2   {"const": M, "x": [M...], "delta": [M...]}
//                                or a plain matrix (constant); omitted parts are zero
//   C1, C2    matrices (rows of numbers)
//   u_bar     vector
//   X_bounds  vector, or X_vertices + X_facets; D likewise (may be absent when l = 0)
//   pi_oracle optional monomial list such as "x1^2, x2^2"
// Errors are InputError with the offending key in the message.
DarModel parse_model(const Json& doc);
DarModel load_model(const std::string& path);
Json model_to_json(const DarModel& model);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, const std::string& where);

struct RunConfig {
  int i_max = 50;
  double gamma = 1e-2;
  bool skip_maximize = false;
  uint64_t seed = 1;
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
};

struct SynthesisRun {
  SynthesisResult feasibility;                // Algorithm 1
  std::optional<SynthesisResult> maximized;   // Algorithm 2
  const SynthesisResult& final() const { return maximized ? *maximized : feasibility; }
};

Json certificate_to_json(const Certificate& cert);
Certificate certificate_from_json(const Json& j);

// The first key is a timestamp; everything after it depends only on the inputs.
Json synthesis_report(const DarModel& model, const SynthesisRun& run, const RunConfig& config,
                      const std::string& timestamp);

struct LoadedReport {
  std::string status;
  Matrix K;
  Certificate cert;
};

// Throws InputError when the gain or a certificate field is missing.
LoadedReport parse_report(const Json& doc);
LoadedReport load_report(const std::string& path);

Json verification_to_json(const VerificationReport& report, const std::string& timestamp);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& doc);

// UTC, ISO 8601.
std::string utc_timestamp();

}  // namespace sofsat::io
