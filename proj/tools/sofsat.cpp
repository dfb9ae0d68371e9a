// sofsat: command-line front end.
//
//   sofsat check    --model M
//   sofsat synth    --model M [--out report.json] [--imax N] [--gamma G] [--skip-maximize]
//   sofsat verify   --model M --report R [--seed S] [--samples K] [--out verification.json]
//   sofsat simulate --model M --report R --x0 a,b,... [--tfinal T] [--step H]
//                   [--delta-mode MODE] [--out series.csv]
//
// Exit codes: 0 ok, 1 check or verification failed, 2 input error,
// 3 iteration limit, 4 solver failure.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>

#include "sofsat/io.hpp"
#include "sofsat/simulate.hpp"
#include "sofsat/synthesis.hpp"
#include "sofsat/verifier.hpp"

namespace {

using namespace sofsat;

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kInputError = 2;
constexpr int kIterationLimit = 3;
constexpr int kSolverFailure = 4;

struct Args {
  std::string model;
  std::string report;
  std::string out;
  int imax = 50;
  double gamma = 1e-2;
  bool skip_maximize = false;
  uint64_t seed = 1;
  size_t samples = 10000;
  size_t trajectories = 100;
  double step = 0.0;  // 0 picks the command default
  double t_final = 50.0;
  std::string delta_mode = "vertex-cycling";
  std::string x0;
};

Vector parse_x0(const std::string& text, Index n) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      vals.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw InputError("--x0: '" + item + "' is not a number");
    }
  }
  if (static_cast<Index>(vals.size()) != n)
    throw InputError("--x0: has " + std::to_string(vals.size()) + " entries, expected " +
                     std::to_string(n));
  return Eigen::Map<Vector>(vals.data(), n);
}

void check_report_dims(const DarModel& model, const io::LoadedReport& r) {
  const Dims& d = model.dims();
  const Certificate& c = r.cert;
  auto expect = [](const Matrix& m, Index rows, Index cols, const char* name) {
    if (m.rows() != rows || m.cols() != cols)
      throw InputError(std::string("report: ") + name + " is " + std::to_string(m.rows()) + "x" +
                       std::to_string(m.cols()) + ", model needs " + std::to_string(rows) + "x" +
                       std::to_string(cols));
  };
  expect(r.K, d.m, d.p, "K");
  expect(c.P, d.n, d.n, "P");
  expect(c.N, d.n, d.n, "N");
  expect(c.Q, d.p, d.p, "Q");
  expect(c.S, d.p, d.m, "S");
  expect(c.R, d.m, d.m, "R");
  expect(c.W, d.m, d.m, "W");
  expect(c.Imult, d.n + d.n_pi + 2 * d.m, d.n_pi, "Imult");
  expect(c.Z, d.n_pi_x, d.n_pi_x, "Z");
  expect(c.Ls, d.p + d.m, d.m, "Ls");
  const size_t blocks = c.Gbar.size();
  if (blocks != 1 && blocks != static_cast<size_t>(1 + d.n + d.l))
    throw InputError("report: Gbar must have 1 or 1 + n + l blocks");
  if (c.Gbar_pi.size() != blocks) throw InputError("report: Gbar_pi and Gbar differ in length");
  for (const auto& g : c.Gbar) expect(g, d.m, d.n, "Gbar block");
  for (const auto& g : c.Gbar_pi) expect(g, d.m, d.n_pi_x, "Gbar_pi block");
}

int cmd_check(const Args& a) {
  const DarModel model = io::load_model(a.model);
  const WellPosednessReport wp = check_well_posedness(model);
  bool pass = wp.pass;
  std::cout << "well-posedness: " << (wp.pass ? "pass" : "FAIL") << " (" << wp.points_checked
            << " points, worst condition " << wp.worst_condition << ")\n";
  if (!wp.pass) std::cout << "  " << wp.message << "\n";
  if (model.pi_oracle()) {
    try {
      const ResidualReport rr = residual_check(model, random_residual_samples(model, 1000, a.seed));
      const bool ok = rr.max_residual() <= 1e-10;
      pass = pass && ok;
      std::cout << "residual check: " << (ok ? "pass" : "FAIL") << " (max residual "
                << rr.max_residual() << " over " << rr.samples << " samples)\n";
    } catch (const WellPosednessError& e) {
      pass = false;
      std::cout << "residual check: FAIL (" << e.what() << ")\n";
    }
  } else {
    std::cout << "residual check: skipped (no pi_oracle)\n";
  }
  return pass ? kOk : kCheckFailed;
}

int cmd_synth(const Args& a) {
  const DarModel model = io::load_model(a.model);
  const WellPosednessReport wp = check_well_posedness(model);
  if (!wp.pass) {
    std::cerr << "model is not well posed: " << wp.message << "\n";
    return kCheckFailed;
  }
  io::RunConfig cfg;
  cfg.i_max = a.imax;
  cfg.gamma = a.gamma;
  cfg.skip_maximize = a.skip_maximize;
  cfg.seed = a.seed;
  SynthesisOptions opts;
  opts.i_max = a.imax;
  opts.gamma = a.gamma;
  opts.solver = SolverOptions::from_environment();
  cfg.feas_tol = opts.solver.feas_tol;
  cfg.gap_tol = opts.solver.gap_tol;

  io::SynthesisRun run;
  run.feasibility = algorithm1(model, opts);
  std::cerr << "algorithm 1: " << to_string(run.feasibility.status) << " after "
            << run.feasibility.iterations << " iterations (" << run.feasibility.wall_time
            << " s)\n";
  if (run.feasibility.ok() && !a.skip_maximize) {
    run.maximized = algorithm2(model, run.feasibility, opts);
    std::cerr << "algorithm 2: " << to_string(run.maximized->status) << " after "
              << run.maximized->iterations << " iterations (" << run.maximized->wall_time
              << " s)\n";
  }
  const io::Json doc = io::synthesis_report(model, run, cfg, io::utc_timestamp());
  const std::string out = a.out.empty() ? "report.json" : a.out;
  io::write_json_file(out, doc);

  const SynthesisResult& fin = run.final();
  std::cout << "status: " << to_string(fin.status) << "\n";
  if (fin.has_certificate && fin.ok()) {
    const Matrix K = fin.gain();
    const EllipsoidMetrics m = ellipsoid_metrics(fin.cert.P);
    std::cout << std::setprecision(6) << "K: " << K.reshaped().transpose() << "\n"
              << "semi-axes: " << m.semi_axes.transpose() << "\n"
              << "trace(P): " << m.trace << "  log det(P^-1): " << m.log_det_Pinv << "\n";
  } else {
    std::cout << fin.message << "\n";
  }
  std::cout << "report: " << out << "\n";
  switch (fin.status) {
    case SynthesisStatus::kSuccess: return kOk;
    case SynthesisStatus::kIterationLimit: return kIterationLimit;
    case SynthesisStatus::kSolverFailure: return kSolverFailure;
  }
  return kSolverFailure;
}

int cmd_verify(const Args& a) {
  const DarModel model = io::load_model(a.model);
  const io::LoadedReport rep = io::load_report(a.report);
  check_report_dims(model, rep);
  VerifierOptions vo;
  vo.seed = a.seed;
  vo.sector_samples = a.samples;
  vo.vdot_samples = a.samples;
  vo.trajectories = a.trajectories;
  vo.t_final = a.t_final;
  vo.step = a.step > 0.0 ? a.step : 1e-2;
  const VerificationReport vr = verify_certificate(model, rep.cert, rep.K, vo);
  for (const auto& c : vr.checks) {
    std::cout << std::left << std::setw(22) << c.name << (c.pass ? "pass" : "FAIL")
              << "  samples " << c.samples << "  worst margin " << c.worst_margin;
    if (!c.pass && !c.detail.empty()) std::cout << "  [" << c.detail << "]";
    std::cout << "\n";
  }
  std::cout << "overall: " << (vr.pass ? "pass" : "FAIL") << " (seed " << vr.seed << ")\n";
  if (!a.out.empty()) io::write_json_file(a.out, io::verification_to_json(vr, io::utc_timestamp()));
  return vr.pass ? kOk : kCheckFailed;
}

std::string sibling_path(const std::string& path, const std::string& suffix) {
  const size_t dot = path.find_last_of('.');
  const size_t slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + suffix;
  return path.substr(0, dot) + suffix;
}

int cmd_simulate(const Args& a) {
  const DarModel model = io::load_model(a.model);
  const io::LoadedReport rep = io::load_report(a.report);
  check_report_dims(model, rep);
  const Dims& d = model.dims();
  const Vector x0 = parse_x0(a.x0, d.n);
  const DeltaMode mode = parse_delta_mode(a.delta_mode);
  SimulationOptions so;
  so.t_final = a.t_final;
  so.step = a.step > 0.0 ? a.step : 1e-3;
  const Trajectory tr = simulate(model, rep.K, x0, make_delta_signal(mode, model.D(), a.seed), so);

  const std::string out = a.out.empty() ? "trajectory.csv" : a.out;
  std::ofstream csv(out);
  if (!csv) throw InputError("cannot write '" + out + "'");
  csv << "t";
  for (Index i = 0; i < d.n; ++i) csv << ",x" << i + 1;
  for (Index i = 0; i < d.p; ++i) csv << ",y" << i + 1;
  for (Index i = 0; i < d.m; ++i) csv << ",v" << i + 1;
  for (Index i = 0; i < d.m; ++i) csv << ",sat_v" << i + 1;
  csv << ",V\n" << std::setprecision(17);
  for (size_t k = 0; k < tr.time.size(); ++k) {
    const Vector& x = tr.state[k];
    csv << tr.time[k];
    for (Index i = 0; i < d.n; ++i) csv << ',' << x[i];
    for (Index i = 0; i < d.p; ++i) csv << ',' << tr.output[k][i];
    for (Index i = 0; i < d.m; ++i) csv << ',' << tr.control[k][i];
    for (Index i = 0; i < d.m; ++i) csv << ',' << tr.applied[k][i];
    csv << ',' << x.dot(rep.cert.P * x) << '\n';
  }
  std::cout << "series: " << out << " (" << tr.time.size() << " rows)\n";
  if (d.n == 2) {
    const std::string ell = sibling_path(out, "_ellipse.csv");
    std::ofstream e(ell);
    if (!e) throw InputError("cannot write '" + ell + "'");
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (rep.cert.P + rep.cert.P.transpose()));
    const Matrix T = es.eigenvectors() *
                     es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse().asDiagonal() *
                     es.eigenvectors().transpose();
    e << "x1,x2\n" << std::setprecision(17);
    const int segments = 256;
    for (int k = 0; k <= segments; ++k) {
      const double th = 2.0 * std::numbers::pi * k / segments;
      const Vector p = T * Vector{{std::cos(th), std::sin(th)}};
      e << p[0] << ',' << p[1] << '\n';
    }
    std::cout << "ellipse: " << ell << "\n";
  }
  if (tr.diverged) {
    std::cout << "trajectory diverged at t = " << tr.divergence_time << "\n";
    return kCheckFailed;
  }
  if (!tr.failure.empty()) {
    std::cout << "simulation stopped: " << tr.failure << "\n";
    return kCheckFailed;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Saturated static output feedback synthesis for rational systems"};
  app.require_subcommand(1);
  Args a;

  auto* check = app.add_subcommand("check", "Well-posedness and DAR residual checks");
  check->add_option("--model", a.model, "Model file (JSON)")->required();
  check->add_option("--seed", a.seed, "Sampling seed");

  auto* synth = app.add_subcommand("synth", "Run the gain design and ellipsoid maximization");
  synth->add_option("--model", a.model, "Model file (JSON)")->required();
  synth->add_option("--out", a.out, "Report file (default report.json)");
  synth->add_option("--imax", a.imax, "Iteration cap per algorithm")->check(CLI::NonNegativeNumber);
  synth->add_option("--gamma", a.gamma, "Trace stopping tolerance")->check(CLI::PositiveNumber);
  synth->add_option("--seed", a.seed, "Sampling seed (recorded)");
  synth->add_flag("--skip-maximize", a.skip_maximize, "Stop after the feasibility search");

  auto* verify = app.add_subcommand("verify", "Independent checks of a synthesis report");
  verify->add_option("--model", a.model, "Model file (JSON)")->required();
  verify->add_option("--report", a.report, "Synthesis report")->required();
  verify->add_option("--seed", a.seed, "Sampling seed");
  verify->add_option("--samples", a.samples, "Samples for sector and Vdot checks");
  verify->add_option("--trajectories", a.trajectories, "Monte Carlo trajectories per delta signal");
  verify->add_option("--tfinal", a.t_final, "Simulation horizon")->check(CLI::NonNegativeNumber);
  verify->add_option("--step", a.step, "Integration step (default 1e-2)")->check(CLI::PositiveNumber);
  verify->add_option("--out", a.out, "Verification report file");

  auto* sim = app.add_subcommand("simulate", "Closed-loop time series");
  sim->add_option("--model", a.model, "Model file (JSON)")->required();
  sim->add_option("--report", a.report, "Synthesis report")->required();
  sim->add_option("--x0", a.x0, "Initial state, comma separated")->required();
  sim->add_option("--tfinal", a.t_final, "Simulation horizon")->check(CLI::NonNegativeNumber);
  sim->add_option("--step", a.step, "Integration step (default 1e-3)")->check(CLI::PositiveNumber);
  sim->add_option("--delta-mode", a.delta_mode,
                  "zero, vertex, vertex-cycling, random or sinusoidal");
  sim->add_option("--seed", a.seed, "Seed for random delta signals");
  sim->add_option("--out", a.out, "CSV output (default trajectory.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*check) return cmd_check(a);
    if (*synth) return cmd_synth(a);
    if (*verify) return cmd_verify(a);
    if (*sim) return cmd_simulate(a);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolverFailure;
  }
  return kInputError;
}
