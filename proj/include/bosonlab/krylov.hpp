#pragma once
// Sparse Hermitian operators and a Lanczos propagator y = exp(-i*tau*A) x.
//
// The propagator takes adaptive substeps; per-substep error is controlled by
// the standard residual estimate beta_m * |expm(-i*T*dt)_{m,1}| so the total
// accumulated estimate stays below tol * |x|.  Below a size threshold the
// Lanczos basis is fully reorthogonalized; above it the three-term recurrence
// is used as is, which is standard practice for short-step exponential
// integration.

#include "bosonlab/lattice.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <utility>

namespace bosonlab {

// CSR matrix, Hermitian by contract of the assembling code (not re-checked
// here; tests check assembled operators against dense references).
class SparseHermitian {
 public:
  explicit SparseHermitian(std::int64_t dim) : dim_(dim), indptr_(1, 0) {}

  std::int64_t dim() const { return dim_; }
  std::int64_t nnz() const { return static_cast<std::int64_t>(values_.size()); }

  // rows must be appended in order; duplicate columns within a row are merged
  void append_row(std::vector<std::pair<std::int32_t, cplx>>& entries) {
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::int32_t last = -1;
    for (const auto& [col, val] : entries) {
      if (col == last) {
        values_.back() += val;
      } else {
        indices_.push_back(col);
        values_.push_back(val);
        last = col;
      }
    }
    indptr_.push_back(static_cast<std::int64_t>(values_.size()));
  }

  void finalize() {
    if (static_cast<std::int64_t>(indptr_.size()) != dim_ + 1)
      throw numeric_error("SparseHermitian: row count mismatch at finalize");
  }

  template <class XDerived>
  void apply(const Eigen::MatrixBase<XDerived>& x, Vec& y) const {
    const auto& xd = x.derived();
    for (std::int64_t r = 0; r < dim_; ++r) {
      cplx acc = 0.0;
      for (std::int64_t p = indptr_[r]; p < indptr_[r + 1]; ++p)
        acc += values_[p] * xd(indices_[p]);
      y[r] = acc;
    }
  }

  // max_i sum_j |a_ij|; upper bound on the spectral radius
  double gershgorin_bound() const {
    double best = 0.0;
    for (std::int64_t r = 0; r < dim_; ++r) {
      double s = 0.0;
      for (std::int64_t p = indptr_[r]; p < indptr_[r + 1]; ++p) s += std::abs(values_[p]);
      best = std::max(best, s);
    }
    return best;
  }

  Mat dense() const {
    Mat out = Mat::Zero(dim_, dim_);
    for (std::int64_t r = 0; r < dim_; ++r)
      for (std::int64_t p = indptr_[r]; p < indptr_[r + 1]; ++p) out(r, indices_[p]) += values_[p];
    return out;
  }

 private:
  std::int64_t dim_;
  std::vector<std::int64_t> indptr_;
  std::vector<std::int32_t> indices_;
  std::vector<cplx> values_;
};

struct KrylovOptions {
  double tol = 1e-10;  // total propagation error budget, relative to |x|
  int max_dim = 40;    // Krylov subspace dimension per substep
};

struct KrylovStats {
  int substeps = 0;
  int matvecs = 0;
  double est_error = 0.0;
};

namespace detail {

// expm(-i * T * dt) e1 for the real symmetric tridiagonal T given by its
// eigendecomposition
inline Eigen::VectorXcd tridiag_expm_e1(const Eigen::SelfAdjointEigenSolver<RMat>& es,
                                        double dt) {
  const RVec& lam = es.eigenvalues();
  const RMat& Q = es.eigenvectors();
  Eigen::VectorXcd phase(lam.size());
  for (int i = 0; i < lam.size(); ++i) phase[i] = std::exp(cplx(0.0, -lam[i] * dt));
  return Q * (phase.array() * Q.row(0).transpose().array().cast<cplx>()).matrix();
}

}  // namespace detail

// y = exp(-i * tau * A) x, A Hermitian.  tau may be negative.
template <class Op>
Vec expm_multiply(const Op& A, double tau, const Vec& x, const KrylovOptions& opt = {},
                  KrylovStats* stats = nullptr) {
  const std::int64_t n = A.dim();
  require(x.size() == n, "expm_multiply: dimension mismatch");
  require(opt.max_dim >= 2, "expm_multiply: max_dim >= 2 required");
  const double beta0 = x.norm();
  if (tau == 0.0 || beta0 == 0.0) return x;

  const bool reorth = n <= 20000;
  const int mmax = static_cast<int>(std::min<std::int64_t>(opt.max_dim, n));
  const double sign = tau > 0.0 ? 1.0 : -1.0;
  const double total = std::abs(tau);

  Mat V(n, mmax + 1);
  RVec alpha(mmax), beta(mmax);
  Vec w(n), y(n);

  double done = 0.0;
  double dt_guess = total;
  KrylovStats st;
  double gersh = -1.0;

  Vec v = x;
  double vnorm = beta0;
  while (done < total) {
    V.col(0) = v / vnorm;
    int m = 0;
    bool breakdown = false;
    for (int j = 0; j < mmax; ++j) {
      A.apply(V.col(j), w);
      ++st.matvecs;
      if (j > 0) w -= beta[j - 1] * V.col(j - 1);
      alpha[j] = V.col(j).dot(w).real();
      w -= alpha[j] * V.col(j);
      if (reorth)
        for (int i = 0; i <= j; ++i) w -= V.col(i).dot(w) * V.col(i);
      beta[j] = w.norm();
      m = j + 1;
      if (beta[j] <= 1e-14 * vnorm) {  // invariant subspace: step is exact
        breakdown = true;
        break;
      }
      V.col(j + 1) = w / beta[j];
    }

    Eigen::SelfAdjointEigenSolver<RMat> es;
    es.computeFromTridiagonal(alpha.head(m), beta.head(std::max(0, m - 1)),
                              Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success)
      throw numeric_error("expm_multiply: tridiagonal eigensolve failed");

    if (gersh < 0.0) gersh = A.gershgorin_bound();
    double dt = std::min(dt_guess, total - done);
    if (st.substeps == 0 && !breakdown)
      dt = std::min(dt, std::max(1e-12, 2.0 * m / std::max(1.0, gersh)));

    for (;;) {
      Eigen::VectorXcd u = detail::tridiag_expm_e1(es, sign * dt);
      const double budget = opt.tol * (dt / total);
      // |u[m-1]| cannot be resolved below the eigensolve's rounding noise;
      // at that floor the step is already exact to machine precision
      const bool at_noise_floor =
          !breakdown && std::abs(u[m - 1]) <= 64.0 * std::numeric_limits<double>::epsilon();
      const double err = breakdown ? 0.0 : beta[m - 1] * std::abs(u[m - 1]);
      if (err <= budget || at_noise_floor) {
        y.noalias() = V.leftCols(m) * (vnorm * u);
        st.est_error += err * vnorm / beta0;
        done += dt;
        dt_guess = (err > 0.0 && !breakdown && !at_noise_floor)
                       ? dt * std::min(5.0, 0.9 * std::pow(budget / err, 1.0 / m))
                       : total;
        break;
      }
      if (dt <= 1e-13 * total)
        throw numeric_error("expm_multiply: error budget unreachable at minimal step");
      dt *= std::max(0.25, 0.7 * std::pow(budget / err, 1.0 / m));
    }

    std::swap(v, y);
    vnorm = v.norm();
    if (!std::isfinite(vnorm) || vnorm == 0.0)
      throw numeric_error("expm_multiply: propagation lost finiteness");
    ++st.substeps;
    if (st.substeps > 100000) throw numeric_error("expm_multiply: too many substeps");
  }

  if (stats) *stats = st;
  return v;
}

// Dense Hermitian adapter for small cross-checks and time-dependent steppers.
class DenseHermitian {
 public:
  explicit DenseHermitian(Mat m) : m_(std::move(m)) {
    require(m_.rows() == m_.cols(), "DenseHermitian: square matrix required");
  }
  std::int64_t dim() const { return m_.rows(); }
  template <class XDerived>
  void apply(const Eigen::MatrixBase<XDerived>& x, Vec& y) const {
    y.noalias() = m_ * x;
  }
  double gershgorin_bound() const { return m_.cwiseAbs().rowwise().sum().maxCoeff(); }
  const Mat& matrix() const { return m_; }

 private:
  Mat m_;
};

}  // namespace bosonlab
