#include "sofsat/sdp.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <limits>
#include <ostream>

namespace sofsat {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kFeasible: return "feasible";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kNumericalFailure: return "numerical-failure";
    case SolveStatus::kIterationLimit: return "iteration-limit";
  }
  return "numerical-failure";
}

SolverOptions SolverOptions::from_environment() {
  SolverOptions o;
  if (const char* env = std::getenv("SOFSAT_SOLVER_TOL")) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end != env && v > 0.0 && std::isfinite(v)) {
      o.feas_tol = v;
      o.gap_tol = v;
    }
  }
  return o;
}

namespace {

// Dual-form SDP:  maximize b'y  s.t.  S = C - sum_i y_i A_i >= 0,
// obtained from G(y) = F0 + sum_i y_i F_i >= 0 with C = F0, A_i = -F_i and
// b = -objective. The primal is  minimize <C, X>  s.t.  <A_i, X> = b_i, X >= 0.
struct DenseBlock {
  Index dim = 0;
  Matrix C;
  std::vector<std::pair<Index, Matrix>> A;
};

// Diagonal block: 1x1 constraints and the variable box.
struct LpBlock {
  Vector C;
  std::vector<std::vector<std::pair<Index, double>>> rows;
  Index dim() const { return C.size(); }
};

double frob_dot(const Matrix& a, const Matrix& b) { return a.cwiseProduct(b).sum(); }

// Largest alpha <= cap with X + alpha dX >= 0, given X = L L'.
double max_step(const Eigen::LLT<Matrix>& chol, const Matrix& dX, double cap) {
  if (dX.size() == 0) return cap;
  Matrix T = chol.matrixL().solve(dX);
  T = chol.matrixL().solve(T.transpose()).transpose();
  T = 0.5 * (T + T.transpose());
  const double lmin = Eigen::SelfAdjointEigenSolver<Matrix>(T, Eigen::EigenvaluesOnly)
                          .eigenvalues()
                          .minCoeff();
  if (lmin >= 0.0) return cap;
  return std::min(cap, -1.0 / lmin);
}

class InteriorPointSolver {
 public:
  InteriorPointSolver(const LmiProgram& prog, const SolverOptions& opt)
      : prog_(prog), opt_(opt), k_(prog.registry.num_variables()) {
    b_ = prog.is_feasibility() ? Vector::Zero(k_) : Vector(-prog.objective);
    if (b_.size() != k_) throw InputError("solve: objective has wrong length");
    std::vector<std::pair<double, std::vector<std::pair<Index, double>>>> lp_rows;
    for (const auto& c : prog.constraints) {
      const LinearTerm g = c.canonical();
      if (g.rows() == 1) {
        std::vector<std::pair<Index, double>> row;
        for (const auto& [i, f] : g.coefficients())
          if (f(0, 0) != 0.0) row.emplace_back(i, -f(0, 0));
        lp_rows.emplace_back(g.constant_part()(0, 0), std::move(row));
        continue;
      }
      DenseBlock blk;
      blk.dim = g.rows();
      blk.C = g.constant_part();
      for (const auto& [i, f] : g.coefficients())
        if (!f.isZero(0.0)) blk.A.emplace_back(i, -f);
      dense_.push_back(std::move(blk));
    }
    if (opt.variable_bound > 0.0) {
      for (Index i = 0; i < k_; ++i) {
        lp_rows.push_back({opt.variable_bound, {{i, 1.0}}});   // B - y_i >= 0
        lp_rows.push_back({opt.variable_bound, {{i, -1.0}}});  // B + y_i >= 0
      }
    }
    lp_.C.resize(static_cast<Index>(lp_rows.size()));
    for (size_t r = 0; r < lp_rows.size(); ++r) {
      lp_.C[static_cast<Index>(r)] = lp_rows[r].first;
      lp_.rows.push_back(std::move(lp_rows[r].second));
    }
  }

  SolveReport run();

 private:
  // Residuals and objective values at the current iterate.
  struct Measures {
    double pinf = 0, dinf = 0, gap = 0, pobj = 0, dobj = 0, mu = 0;
  };

  Vector apply_A(const std::vector<Matrix>& X, const Vector& xl) const {
    Vector out = Vector::Zero(k_);
    for (size_t j = 0; j < dense_.size(); ++j)
      for (const auto& [i, A] : dense_[j].A) out[i] += frob_dot(A, X[j]);
    for (Index r = 0; r < lp_.dim(); ++r)
      for (const auto& [i, a] : lp_.rows[static_cast<size_t>(r)]) out[i] += a * xl[r];
    return out;
  }

  void dual_slack(const Vector& y, std::vector<Matrix>& Sd, Vector& sl) const {
    Sd.resize(dense_.size());
    for (size_t j = 0; j < dense_.size(); ++j) {
      Sd[j] = dense_[j].C;
      for (const auto& [i, A] : dense_[j].A) Sd[j].noalias() -= y[i] * A;
    }
    sl = lp_.C;
    for (Index r = 0; r < lp_.dim(); ++r)
      for (const auto& [i, a] : lp_.rows[static_cast<size_t>(r)]) sl[r] -= a * y[i];
  }

  Measures measure() const {
    Measures m;
    const Vector rp = b_ - apply_A(X_, xl_);
    std::vector<Matrix> Cy;
    Vector cl;
    dual_slack(y_, Cy, cl);
    double rd2 = 0.0, c2 = 0.0, xs = 0.0;
    m.pobj = 0.0;
    for (size_t j = 0; j < dense_.size(); ++j) {
      rd2 += (Cy[j] - S_[j]).squaredNorm();
      c2 += dense_[j].C.squaredNorm();
      m.pobj += frob_dot(dense_[j].C, X_[j]);
      xs += frob_dot(X_[j], S_[j]);
    }
    rd2 += (cl - sl_).squaredNorm();
    c2 += lp_.C.squaredNorm();
    m.pobj += lp_.C.dot(xl_);
    xs += xl_.dot(sl_);
    m.dobj = b_.dot(y_);
    m.pinf = rp.norm() / (1.0 + b_.norm());
    m.dinf = std::sqrt(rd2) / (1.0 + std::sqrt(c2));
    m.gap = std::abs(m.pobj - m.dobj) / (1.0 + std::abs(m.pobj) + std::abs(m.dobj));
    m.mu = xs / static_cast<double>(nu_);
    return m;
  }

  // Minimum eigenvalue of every dense G_j(y) and of the diagonal rows,
  // relative to 1 + |C_j|.
  double worst_violation(const Vector& y) const {
    std::vector<Matrix> Sd;
    Vector sl;
    dual_slack(y, Sd, sl);
    double worst = 0.0;
    for (size_t j = 0; j < dense_.size(); ++j) {
      const double lmin =
          Eigen::SelfAdjointEigenSolver<Matrix>(Sd[j], Eigen::EigenvaluesOnly)
              .eigenvalues()
              .minCoeff();
      worst = std::max(worst, -lmin / (1.0 + dense_[j].C.cwiseAbs().maxCoeff()));
    }
    for (Index r = 0; r < sl.size(); ++r)
      worst = std::max(worst, -sl[r] / (1.0 + std::abs(lp_.C[r])));
    return worst;
  }

  const LmiProgram& prog_;
  SolverOptions opt_;
  Index k_;
  Vector b_;
  std::vector<DenseBlock> dense_;
  LpBlock lp_;
  Index nu_ = 0;

  std::vector<Matrix> X_, S_;
  Vector xl_, sl_, y_;
};

SolveReport InteriorPointSolver::run() {
  const auto t0 = std::chrono::steady_clock::now();
  SolveReport rep;
  auto finish = [&](SolveStatus st, std::string msg) {
    rep.status = st;
    rep.message = std::move(msg);
    rep.y = y_;
    rep.objective = prog_.is_feasibility() ? 0.0 : prog_.objective.dot(y_);
    rep.worst_violation = worst_violation(y_);
    for (Index id = 0; id < static_cast<Index>(prog_.registry.blocks().size()); ++id) {
      Matrix v = prog_.registry.value(id, y_);
      if (v.rows() == v.cols()) v = 0.5 * (v + v.transpose());
      rep.blocks.push_back(std::move(v));
    }
    rep.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
  };

  y_ = Vector::Zero(k_);
  nu_ = lp_.dim();
  for (const auto& blk : dense_) nu_ += blk.dim;
  if (nu_ == 0) return finish(SolveStatus::kOptimal, "no constraints");

  // Initial point, following the usual infeasible-start heuristics.
  double max_a = 0.0;
  X_.clear();
  S_.clear();
  for (const auto& blk : dense_) {
    const double d = static_cast<double>(blk.dim);
    double xi = std::max(10.0, std::sqrt(d)), eta = std::max(10.0, std::sqrt(d));
    for (const auto& [i, A] : blk.A) {
      const double an = A.norm();
      max_a = std::max(max_a, an);
      xi = std::max(xi, d * (1.0 + std::abs(b_[i])) / (1.0 + an));
      eta = std::max(eta, an);
    }
    eta = std::max(eta, blk.C.norm());
    X_.push_back(xi * Matrix::Identity(blk.dim, blk.dim));
    S_.push_back(eta * Matrix::Identity(blk.dim, blk.dim));
  }
  {
    double xi = 10.0, eta = std::max(10.0, lp_.C.size() ? lp_.C.cwiseAbs().maxCoeff() : 0.0);
    for (const auto& row : lp_.rows)
      for (const auto& [i, a] : row) {
        xi = std::max(xi, (1.0 + std::abs(b_[i])) / (1.0 + std::abs(a)));
        eta = std::max(eta, std::abs(a));
        max_a = std::max(max_a, std::abs(a));
      }
    xl_ = Vector::Constant(lp_.dim(), xi);
    sl_ = Vector::Constant(lp_.dim(), eta);
  }

  Measures m = measure();
  int stalls = 0;
  std::string failure = "step length stalled";
  bool stalled = false;
  // Best point seen; late iterations can lose accuracy to roundoff.
  auto score = [&](const Measures& q) {
    return std::max({q.pinf / opt_.feas_tol, q.dinf / opt_.feas_tol, q.gap / opt_.gap_tol});
  };
  Measures best_m = m;
  Vector best_y = y_;
  int best_it = 0;
  for (int it = 0; it < opt_.max_iterations; ++it) {
    rep.iterations = it;
    rep.primal_infeasibility = m.pinf;
    rep.dual_infeasibility = m.dinf;
    rep.relative_gap = m.gap;
    if (opt_.verbose)
      std::cerr << std::setw(3) << it << " pobj " << std::setw(14) << m.pobj << " dobj "
                << std::setw(14) << m.dobj << " pinf " << m.pinf << " dinf " << m.dinf
                << " gap " << m.gap << " mu " << m.mu << "\n";

    if (m.pinf <= opt_.feas_tol && m.dinf <= opt_.feas_tol && m.gap <= opt_.gap_tol &&
        worst_violation(y_) <= opt_.feas_tol)
      return finish(prog_.is_feasibility() ? SolveStatus::kFeasible : SolveStatus::kOptimal,
                    "converged");
    if (prog_.is_feasibility() && m.dinf <= opt_.feas_tol && worst_violation(y_) <= 0.0)
      return finish(SolveStatus::kFeasible, "strictly feasible point found");

    // Certificate of LMI infeasibility: X >= 0, A(X) ~ 0, <C, X> < 0.
    if (m.pobj < 0.0) {
      const Vector ax = apply_A(X_, xl_);
      if (ax.norm() * std::max(1.0, max_a) <= 1e-8 * (-m.pobj) &&
          m.dinf > opt_.feas_tol)
        return finish(SolveStatus::kInfeasible, "primal ray certifies infeasibility");
    }

    // Schur complement M_ij = <A_i, X A_j S^-1>.
    std::vector<Eigen::LLT<Matrix>> chol_s(dense_.size());
    std::vector<Matrix> Sinv(dense_.size());
    Matrix M = Matrix::Zero(k_, k_);
    bool factor_ok = true;
    for (size_t j = 0; j < dense_.size(); ++j) {
      chol_s[j].compute(S_[j]);
      if (chol_s[j].info() != Eigen::Success) {
        factor_ok = false;
        break;
      }
      Sinv[j] = chol_s[j].solve(Matrix::Identity(dense_[j].dim, dense_[j].dim));
      Sinv[j] = 0.5 * (Sinv[j] + Sinv[j].transpose());
      const auto& A = dense_[j].A;
      for (size_t a = 0; a < A.size(); ++a) {
        const Matrix G = X_[j] * A[a].second * Sinv[j];
        for (size_t c = a; c < A.size(); ++c) {
          const double v = frob_dot(A[c].second, G.transpose());
          M(A[a].first, A[c].first) += v;
          if (c != a) M(A[c].first, A[a].first) += v;
        }
      }
    }
    if (!factor_ok) {
      failure = "dual slack lost definiteness";
      break;
    }
    const Vector ratio = xl_.cwiseQuotient(sl_);
    for (Index r = 0; r < lp_.dim(); ++r) {
      const auto& row = lp_.rows[static_cast<size_t>(r)];
      for (const auto& [i, a] : row)
        for (const auto& [c, ac] : row) M(i, c) += ratio[r] * a * ac;
    }
    Eigen::LLT<Matrix> chol_m(M);
    Eigen::LDLT<Matrix> ldlt_m;
    const bool use_llt = chol_m.info() == Eigen::Success;
    if (!use_llt) {
      Matrix Mr = M;
      Mr.diagonal().array() += 1e-14 * std::max(1.0, M.diagonal().cwiseAbs().maxCoeff());
      ldlt_m.compute(Mr);
      if (ldlt_m.info() != Eigen::Success) {
        failure = "Schur complement is singular";
        break;
      }
    }
    auto solve_m = [&](const Vector& r) -> Vector {
      auto once = [&](const Vector& v) -> Vector {
        return use_llt ? Vector(chol_m.solve(v)) : Vector(ldlt_m.solve(v));
      };
      Vector x = once(r);
      x += once(r - M * x);
      return x;
    };

    // Dual residuals.
    std::vector<Matrix> Rd;
    Vector rdl;
    dual_slack(y_, Rd, rdl);
    for (size_t j = 0; j < dense_.size(); ++j) Rd[j] -= S_[j];
    rdl -= sl_;
    const Vector rp = b_ - apply_A(X_, xl_);

    struct Direction {
      Vector dy;
      std::vector<Matrix> dX, dS;
      Vector dxl, dsl;
    };
    auto direction = [&](double sigma_mu, const Direction* corr) {
      Direction d;
      std::vector<Matrix> H(dense_.size());
      for (size_t j = 0; j < dense_.size(); ++j) {
        H[j] = sigma_mu * Sinv[j] - X_[j] - X_[j] * Rd[j] * Sinv[j];
        if (corr) H[j] -= corr->dX[j] * corr->dS[j] * Sinv[j];
      }
      Vector hl = sigma_mu * sl_.cwiseInverse() - xl_ - xl_.cwiseProduct(rdl).cwiseQuotient(sl_);
      if (corr) hl -= corr->dxl.cwiseProduct(corr->dsl).cwiseQuotient(sl_);
      Vector rhs = rp;
      for (size_t j = 0; j < dense_.size(); ++j)
        for (const auto& [i, A] : dense_[j].A) rhs[i] -= frob_dot(A, H[j]);
      for (Index r = 0; r < lp_.dim(); ++r)
        for (const auto& [i, a] : lp_.rows[static_cast<size_t>(r)]) rhs[i] -= a * hl[r];
      d.dy = solve_m(rhs);
      d.dX.resize(dense_.size());
      d.dS.resize(dense_.size());
      for (size_t j = 0; j < dense_.size(); ++j) {
        d.dS[j] = Rd[j];
        for (const auto& [i, A] : dense_[j].A) d.dS[j].noalias() -= d.dy[i] * A;
        Matrix dX = sigma_mu * Sinv[j] - X_[j] - X_[j] * d.dS[j] * Sinv[j];
        if (corr) dX -= corr->dX[j] * corr->dS[j] * Sinv[j];
        d.dX[j] = 0.5 * (dX + dX.transpose());
      }
      d.dsl = rdl;
      for (Index r = 0; r < lp_.dim(); ++r)
        for (const auto& [i, a] : lp_.rows[static_cast<size_t>(r)]) d.dsl[r] -= a * d.dy[i];
      d.dxl = sigma_mu * sl_.cwiseInverse() - xl_ - xl_.cwiseProduct(d.dsl).cwiseQuotient(sl_);
      if (corr) d.dxl -= corr->dxl.cwiseProduct(corr->dsl).cwiseQuotient(sl_);
      return d;
    };

    std::vector<Eigen::LLT<Matrix>> chol_x(dense_.size());
    for (size_t j = 0; j < dense_.size() && factor_ok; ++j) {
      chol_x[j].compute(X_[j]);
      factor_ok = chol_x[j].info() == Eigen::Success;
    }
    if (!factor_ok) {
      failure = "primal iterate lost definiteness";
      break;
    }
    auto steps = [&](const Direction& d) {
      double ap = 1e300, ad = 1e300;
      for (size_t j = 0; j < dense_.size(); ++j) {
        ap = max_step(chol_x[j], d.dX[j], ap);
        ad = max_step(chol_s[j], d.dS[j], ad);
      }
      for (Index r = 0; r < lp_.dim(); ++r) {
        if (d.dxl[r] < 0.0) ap = std::min(ap, -xl_[r] / d.dxl[r]);
        if (d.dsl[r] < 0.0) ad = std::min(ad, -sl_[r] / d.dsl[r]);
      }
      return std::pair<double, double>(ap, ad);
    };

    // Predictor.
    const Direction pred = direction(0.0, nullptr);
    auto [ap_max, ad_max] = steps(pred);
    const double ap_aff = std::min(1.0, ap_max), ad_aff = std::min(1.0, ad_max);
    double xs_aff = 0.0;
    for (size_t j = 0; j < dense_.size(); ++j)
      xs_aff += frob_dot(X_[j] + ap_aff * pred.dX[j], S_[j] + ad_aff * pred.dS[j]);
    xs_aff += (xl_ + ap_aff * pred.dxl).dot(sl_ + ad_aff * pred.dsl);
    const double mu_aff = std::max(0.0, xs_aff / static_cast<double>(nu_));
    double sigma = std::pow(mu_aff / m.mu, 3.0);
    sigma = std::clamp(sigma, 0.0, 1.0);
    // Stay closer to the central path while far from feasibility.
    if (std::max(m.pinf, m.dinf) > 1e-2) sigma = std::max(sigma, 0.1);

    // Corrector.
    const Direction dir = direction(sigma * m.mu, &pred);
    auto [ap2, ad2] = steps(dir);
    const double tau = opt_.step_fraction;
    const double ap = std::min(1.0, tau * ap2), ad = std::min(1.0, tau * ad2);

    for (size_t j = 0; j < dense_.size(); ++j) {
      X_[j] += ap * dir.dX[j];
      S_[j] += ad * dir.dS[j];
      X_[j] = 0.5 * (X_[j] + X_[j].transpose());
      S_[j] = 0.5 * (S_[j] + S_[j].transpose());
    }
    xl_ += ap * dir.dxl;
    sl_ += ad * dir.dsl;
    y_ += ad * dir.dy;

    m = measure();
    if (!std::isfinite(m.mu) || !std::isfinite(m.pobj) || !y_.allFinite())
      return finish(SolveStatus::kNumericalFailure, "iterates became non-finite");
    if (score(m) < score(best_m)) {
      best_m = m;
      best_y = y_;
      best_it = it + 1;
    }
    if (std::max(ap, ad) < 1e-10) {
      if (++stalls >= 3) {
        stalled = true;
        break;
      }
    } else {
      stalls = 0;
    }
    if (it + 1 - best_it >= 15) {
      failure = "no progress in 15 iterations";
      stalled = true;
      break;
    }
  }

  if (score(best_m) < score(m)) {
    m = best_m;
    y_ = best_y;
  }

  rep.primal_infeasibility = m.pinf;
  rep.dual_infeasibility = m.dinf;
  rep.relative_gap = m.gap;
  // Accept a slightly less accurate point when the LMIs themselves hold.
  if (m.dinf <= 1e2 * opt_.feas_tol && worst_violation(y_) <= opt_.feas_tol &&
      m.gap <= std::max(1e3 * opt_.gap_tol, opt_.fallback_gap))
    return finish(SolveStatus::kFeasible, "stopped near optimum");
  if (!stalled && failure == "step length stalled")
    return finish(SolveStatus::kIterationLimit, "iteration limit reached");
  return finish(SolveStatus::kNumericalFailure, failure);
}

}  // namespace

SolveReport solve(const LmiProgram& program, const SolverOptions& options) {
  InteriorPointSolver solver(program, options);
  return solver.run();
}

std::vector<ConstraintMargin> verify_solution(const LmiProgram& program,
                                              const Vector& y, double margin_tol) {
  std::vector<ConstraintMargin> out;
  out.reserve(program.constraints.size());
  for (const auto& c : program.constraints) {
    Matrix G = c.canonical().evaluate(y);
    G = 0.5 * (G + G.transpose());
    ConstraintMargin cm;
    cm.label = c.label;
    cm.min_eigenvalue =
        G.size() ? Eigen::SelfAdjointEigenSolver<Matrix>(G, Eigen::EigenvaluesOnly)
                       .eigenvalues()
                       .minCoeff()
                 : 0.0;
    cm.flagged = cm.min_eigenvalue < -margin_tol;
    out.push_back(std::move(cm));
  }
  return out;
}

void write_program_dump(const LmiProgram& program, std::ostream& out) {
  const Index k = program.registry.num_variables();
  out << "sofsat-lmi 1\n";
  out << "variables " << k << "\n";
  out << "blocks " << program.constraints.size() << "\n";
  out << std::setprecision(17);
  out << "objective";
  for (Index i = 0; i < k; ++i)
    out << ' ' << (program.is_feasibility() ? 0.0 : program.objective[i]);
  out << "\n";
  for (size_t j = 0; j < program.constraints.size(); ++j) {
    const auto& c = program.constraints[j];
    const LinearTerm g = c.canonical();
    out << "block " << j << ' ' << g.rows() << ' ' << c.label << "\n";
    auto emit = [&](Index var, const Matrix& m) {
      for (Index col = 0; col < m.cols(); ++col)
        for (Index row = col; row < m.rows(); ++row)
          if (m(row, col) != 0.0)
            out << var << ' ' << row << ' ' << col << ' ' << m(row, col) << "\n";
    };
    emit(0, g.constant_part());
    for (const auto& [i, f] : g.coefficients()) emit(i + 1, f);
  }
}

}  // namespace sofsat
