#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "vhj/domain.hpp"
#include "vhj/numerics.hpp"
#include "vhj/scheme.hpp"

namespace vhj::detail {

struct NewtonOptions {
  int max_iterations = 60;
  /// Stop when ‖δu‖∞ ≤ step_tol·(1 + ‖u‖∞).
  double step_tol = 1e-13;
  /// Or when the max residual falls below this value.
  double residual_tol = 1e-11;
};

struct NewtonReport {
  bool converged = false;
  int iterations = 0;
  double residual = std::numeric_limits<double>::infinity();
};

/// The monotone discrete system
///   interior: inv_dt·(u − u_prev) − Δ_h u + H_h(u) + λu − f − c_shift = 0
///   boundary: u_b − closure(u) = 0
/// solved by Newton. Every equation is convex in u and the Jacobian is an
/// M-matrix, so the iteration converges from any start when it is nonsingular
/// (inv_dt > 0 or λ > 0).
class MonotoneSystem {
 public:
  MonotoneSystem(const ProblemSpec& p, BoundaryKind kind)
      : p_(&p), grid_(p.grid().get()), kind_(kind), power_(p.m), dim_(grid_->dimension()) {
    if (kind == BoundaryKind::StateConstraint && p.m <= 2.0) throw InvalidArgument("state constraint requires m > 2");
    const std::size_t n = grid_->size();
    for (int a = 0; a < dim_; ++a) {
      stride_[a] = grid_->stride(a);
      inv_h_[a] = 1.0 / grid_->spacing(a);
    }
    jump_.assign(n, 0.0);
    for (std::size_t k : grid_->boundary()) jump_[k] = layer_jump(p.m, grid_->inward_spacing(k));
    // Fixed sparsity pattern: full stencil on interior rows, (self, inward) on boundary rows.
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t k : grid_->interior()) {
      trip.emplace_back(k, k, 1.0);
      for (int a = 0; a < dim_; ++a) {
        trip.emplace_back(k, k - stride_[a], 1.0);
        trip.emplace_back(k, k + stride_[a], 1.0);
      }
    }
    for (std::size_t k : grid_->boundary()) {
      trip.emplace_back(k, k, 1.0);
      trip.emplace_back(k, grid_->inward_neighbor(k), 1.0);
    }
    jac_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    jac_.setFromTriplets(trip.begin(), trip.end());
    jac_.makeCompressed();
    lu_.analyzePattern(jac_);
  }

  /// Residual of the system at u (boundary rows included); returns max |F|.
  double residual(const Field& u, const Field* prev, double inv_dt, std::vector<double>& F) const {
    F.assign(u.size(), 0.0);
    double worst = 0.0;
    for (std::size_t k : grid_->interior()) {
      double lap = 0.0, s2 = 0.0;
      for (int a = 0; a < dim_; ++a) {
        const double um = u[k - stride_[a]], up = u[k + stride_[a]];
        lap += (um - 2.0 * u[k] + up) * inv_h_[a] * inv_h_[a];
        const double s = std::max({(u[k] - um) * inv_h_[a], (u[k] - up) * inv_h_[a], 0.0});
        s2 += s * s;
      }
      double r = -lap + power_(std::sqrt(s2)) + p_->lambda * u[k] - p_->f[k] - p_->c_shift;
      if (prev) r += inv_dt * (u[k] - (*prev)[k]);
      F[k] = r;
      worst = std::max(worst, std::abs(r));
    }
    for (std::size_t k : grid_->boundary()) {
      F[k] = u[k] - closure(u, k);
      worst = std::max(worst, std::abs(F[k]));
    }
    return worst;
  }

  /// Newton iteration in place. `prev` may be null for a steady solve.
  NewtonReport solve(Field& u, const Field* prev, double inv_dt, const NewtonOptions& opt = {}) {
    NewtonReport rep;
    std::vector<double> F;
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(u.size()));
    for (int it = 0; it < opt.max_iterations; ++it) {
      rep.residual = residual(u, prev, inv_dt, F);
      rep.iterations = it;
      if (!std::isfinite(rep.residual)) return rep;
      if (rep.residual <= opt.residual_tol) {
        rep.converged = true;
        return rep;
      }
      assemble(u, inv_dt);
      lu_.factorize(jac_);
      if (lu_.info() != Eigen::Success) return rep;
      for (std::size_t k = 0; k < u.size(); ++k) rhs[static_cast<Eigen::Index>(k)] = -F[k];
      const Eigen::VectorXd du = lu_.solve(rhs);
      double step = 0.0;
      for (std::size_t k = 0; k < u.size(); ++k) {
        const double d = du[static_cast<Eigen::Index>(k)];
        u[k] += d;
        step = std::max(step, std::abs(d));
      }
      if (!std::isfinite(step)) return rep;
      if (step <= opt.step_tol * (1.0 + u.max_abs())) {
        rep.residual = residual(u, prev, inv_dt, F);
        rep.iterations = it + 1;
        rep.converged = std::isfinite(rep.residual);
        return rep;
      }
    }
    rep.residual = residual(u, prev, inv_dt, F);
    rep.iterations = opt.max_iterations;
    return rep;
  }

  /// Max |pde_residual| over interior nodes (no time term).
  double max_interior_residual(const Field& u) const {
    std::vector<double> F;
    residual(u, nullptr, 0.0, F);
    double worst = 0.0;
    for (std::size_t k : grid_->interior()) worst = std::max(worst, std::abs(F[k]));
    return worst;
  }

 private:
  double closure(const Field& u, std::size_t k) const {
    const double sc = u[grid_->inward_neighbor(k)] + jump_[k];
    if (kind_ == BoundaryKind::StateConstraint) return sc;
    return std::min(p_->g[k], sc);
  }

  void assemble(const Field& u, double inv_dt) {
    double* val = jac_.valuePtr();
    std::fill(val, val + jac_.nonZeros(), 0.0);
    auto coeff = [&](std::size_t r, std::size_t c) -> double& {
      return jac_.coeffRef(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    };
    for (std::size_t k : grid_->interior()) {
      double s[2]{0.0, 0.0};
      int dir[2]{0, 0};  // -1: backward difference active, +1: forward, 0: none
      double s2 = 0.0;
      double diag = inv_dt + p_->lambda;
      for (int a = 0; a < dim_; ++a) {
        const double ih2 = inv_h_[a] * inv_h_[a];
        diag += 2.0 * ih2;
        coeff(k, k - stride_[a]) -= ih2;
        coeff(k, k + stride_[a]) -= ih2;
        const double dm = (u[k] - u[k - stride_[a]]) * inv_h_[a];
        const double mp = (u[k] - u[k + stride_[a]]) * inv_h_[a];
        if (dm >= mp && dm > 0.0) {
          s[a] = dm;
          dir[a] = -1;
        } else if (mp > 0.0) {
          s[a] = mp;
          dir[a] = 1;
        }
        s2 += s[a] * s[a];
      }
      if (s2 > 0.0) {
        const double norm = std::sqrt(s2);
        // ∂/∂s_a (Σ s²)^{m/2} = m |s|^{m−2} s_a
        const double scale = power_.derivative(norm) / norm;
        for (int a = 0; a < dim_; ++a) {
          if (dir[a] == 0) continue;
          const double d = scale * s[a] * inv_h_[a];
          diag += d;
          const std::size_t nb = dir[a] < 0 ? k - stride_[a] : k + stride_[a];
          coeff(k, nb) -= d;
        }
      }
      coeff(k, k) += diag;
    }
    for (std::size_t k : grid_->boundary()) {
      coeff(k, k) = 1.0;
      const std::size_t in = grid_->inward_neighbor(k);
      const bool follows_closure = kind_ == BoundaryKind::StateConstraint || u[in] + jump_[k] < p_->g[k];
      if (follows_closure) coeff(k, in) = -1.0;
    }
  }

  const ProblemSpec* p_;
  const Grid* grid_;
  BoundaryKind kind_;
  PowerLaw power_;
  int dim_;
  std::size_t stride_[2]{1, 1};
  double inv_h_[2]{1.0, 1.0};
  std::vector<double> jump_;
  Eigen::SparseMatrix<double> jac_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

}  // namespace vhj::detail
