#pragma once
// Truncated bosonic Fock space over M lattice modes.
//
// Basis: occupation vectors n = (n_1..n_M) with sum n_i <= N_max, ordered
// graded-lexicographically (by total, then ascending lex).  Index 0 is the
// vacuum.  Truncation semantics: a_i^dag annihilates the top sector; the
// canonical commutation relations hold exactly on states supported strictly
// below the cutoff.
//
// Smeared operators absorb the grid weight: a(f) = sqrt(h) sum_i conj(f_i) a_i
// and a*(f) = sqrt(h) sum_i f_i a_i^dag, so [a(f), a*(g)] = <f,g> in the
// h-weighted inner product.

#include "bosonlab/krylov.hpp"
#include "bosonlab/lattice.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <numeric>
#include <span>

namespace bosonlab {

using index_t = std::int64_t;

class FockBasis {
 public:
  FockBasis(int modes, int cutoff, index_t size_cap = 8000000) : M_(modes), nmax_(cutoff) {
    require(modes >= 1 && modes <= 64, "FockBasis: 1 <= modes <= 64 required");
    require(cutoff >= 0 && cutoff <= 200, "FockBasis: 0 <= cutoff <= 200 required");
    build_binomials();
    index_t dim = 0;
    sector_offset_.assign(nmax_ + 2, 0);
    for (int s = 0; s <= nmax_; ++s) {
      sector_offset_[s] = dim;
      dim += static_cast<index_t>(binom(s + M_ - 1, M_ - 1));
      if (dim > size_cap)
        throw numeric_error("FockBasis: basis size exceeds cap (" + std::to_string(size_cap) + ")");
    }
    sector_offset_[nmax_ + 1] = dim;
    dim_ = dim;
    occ_.resize(static_cast<std::size_t>(dim) * M_);
    std::vector<std::uint8_t> n(M_, 0);
    index_t idx = 0;
    for (int s = 0; s <= nmax_; ++s) {
      first_composition(s, n);
      do {
        std::copy(n.begin(), n.end(), occ_.begin() + idx * M_);
        ++idx;
      } while (next_composition(n));
    }
  }

  int modes() const { return M_; }
  int cutoff() const { return nmax_; }
  index_t dim() const { return dim_; }
  index_t sector_begin(int s) const { return sector_offset_[s]; }
  index_t sector_end(int s) const { return sector_offset_[s + 1]; }

  const std::uint8_t* occ(index_t idx) const { return occ_.data() + idx * M_; }
  int occ(index_t idx, int mode) const { return occ_[idx * M_ + mode]; }
  int total(index_t idx) const {
    const std::uint8_t* n = occ(idx);
    return std::accumulate(n, n + M_, 0);
  }

  // graded-lex rank; occupation must satisfy sum <= cutoff
  index_t index_of(std::span<const std::uint8_t> n) const {
    require(static_cast<int>(n.size()) == M_, "FockBasis::index_of: wrong length");
    int s = std::accumulate(n.begin(), n.end(), 0);
    require(s <= nmax_, "FockBasis::index_of: total occupation above cutoff");
    index_t r = 0;
    int rem = s;
    for (int i = 0; i < M_ - 1; ++i) {
      const int p = M_ - 1 - i;  // parts remaining after slot i
      // compositions of rem into p+1 parts with first part < n_i
      r += static_cast<index_t>(binom(rem + p, p) - binom(rem - n[i] + p, p));
      rem -= n[i];
    }
    return sector_offset_[s] + r;
  }

  // index after n_mode += delta (delta = +1/-1); -1 if the result leaves the
  // truncated space (raise out of the top sector) or occupation underflows
  index_t shifted_index(index_t idx, int mode, int delta) const {
    const int s = total(idx);
    if (delta > 0 && s + delta > nmax_) return -1;
    if (delta < 0 && occ(idx, mode) < -delta) return -1;
    std::array<std::uint8_t, 64> n;
    std::copy(occ(idx), occ(idx) + M_, n.begin());
    n[mode] = static_cast<std::uint8_t>(n[mode] + delta);
    return index_of(std::span<const std::uint8_t>(n.data(), M_));
  }

  static index_t dimension(int modes, int cutoff) {
    // sum_{s<=cutoff} C(s+M-1, M-1) = C(cutoff+M, M)
    long double r = 1.0L;
    for (int i = 1; i <= modes; ++i) r = r * (cutoff + i) / i;
    return static_cast<index_t>(r + 0.5L);
  }

 private:
  int M_, nmax_;
  index_t dim_ = 0;
  std::vector<index_t> sector_offset_;
  std::vector<std::uint8_t> occ_;
  std::vector<std::uint64_t> binom_;  // (nmax+M+1) x (M+1), row-major
  int bcols_ = 0;

  std::uint64_t binom(int n, int k) const {
    if (k < 0 || k > n) return 0;
    if (k > M_) k = M_;  // only needed up to M
    return binom_[static_cast<std::size_t>(n) * bcols_ + k];
  }

  void build_binomials() {
    const int rows = nmax_ + M_ + 1;
    bcols_ = M_ + 1;
    binom_.assign(static_cast<std::size_t>(rows) * bcols_, 0);
    for (int n = 0; n < rows; ++n) {
      binom_[static_cast<std::size_t>(n) * bcols_] = 1;
      for (int k = 1; k <= std::min(n, M_); ++k) {
        const std::uint64_t a = binom_[static_cast<std::size_t>(n - 1) * bcols_ + k - 1];
        const std::uint64_t b = (k <= n - 1) ? binom_[static_cast<std::size_t>(n - 1) * bcols_ + k] : 0;
        binom_[static_cast<std::size_t>(n) * bcols_ + k] = a + b;
      }
    }
  }

  void first_composition(int s, std::vector<std::uint8_t>& n) const {
    std::fill(n.begin(), n.end(), 0);
    n[M_ - 1] = static_cast<std::uint8_t>(s);  // lex-smallest puts everything last
  }

  // next composition in ascending lex order; false when exhausted
  bool next_composition(std::vector<std::uint8_t>& n) const {
    // find rightmost slot (except the last) that can donate to the left of a
    // nonzero tail: standard colex successor on reversed weak compositions
    int tail = n[M_ - 1];
    for (int i = M_ - 2; i >= 0; --i) {
      if (tail > 0) {
        n[i] = static_cast<std::uint8_t>(n[i] + 1);
        int carry = tail - 1;
        for (int j = i + 1; j < M_ - 1; ++j) n[j] = 0;
        n[M_ - 1] = static_cast<std::uint8_t>(carry);
        return true;
      }
      tail += n[i];
    }
    return false;
  }
};

using BasisPtr = std::shared_ptr<const FockBasis>;

struct FockVector {
  BasisPtr basis;
  Vec amp;

  FockVector(BasisPtr b, Vec a) : basis(std::move(b)), amp(std::move(a)) {
    require(amp.size() == basis->dim(), "FockVector: amplitude size mismatch");
  }
  static FockVector zero(BasisPtr b) {
    Vec a = Vec::Zero(b->dim());
    return FockVector(std::move(b), std::move(a));
  }
  static FockVector vacuum(BasisPtr b) {
    FockVector v = zero(std::move(b));
    v.amp[0] = 1.0;
    return v;
  }
  double norm() const { return amp.norm(); }
};

inline cplx inner(const FockVector& a, const FockVector& b) {
  require(a.basis == b.basis, "inner: different bases");
  return a.amp.dot(b.amp);
}

// a_i: sqrt(n_i) |n - e_i>
inline FockVector apply_lower(const FockVector& v, int mode) {
  FockVector out = FockVector::zero(v.basis);
  const FockBasis& B = *v.basis;
  for (index_t idx = 0; idx < B.dim(); ++idx) {
    const int n = B.occ(idx, mode);
    if (n == 0 || v.amp[idx] == cplx(0.0)) continue;
    out.amp[B.shifted_index(idx, mode, -1)] += std::sqrt(double(n)) * v.amp[idx];
  }
  return out;
}

// a_i^dag: sqrt(n_i + 1) |n + e_i>, top sector annihilated
inline FockVector apply_raise(const FockVector& v, int mode) {
  FockVector out = FockVector::zero(v.basis);
  const FockBasis& B = *v.basis;
  for (index_t idx = 0; idx < B.dim(); ++idx) {
    if (v.amp[idx] == cplx(0.0)) continue;
    const index_t up = B.shifted_index(idx, mode, +1);
    if (up < 0) continue;
    out.amp[up] += std::sqrt(double(B.occ(idx, mode) + 1)) * v.amp[idx];
  }
  return out;
}

// a(f) = sqrt(h) sum_i conj(f_i) a_i
inline FockVector apply_smeared_lower(const FockVector& v, const Orbital& f) {
  const FockBasis& B = *v.basis;
  require(f.grid.M == B.modes(), "apply_smeared_lower: mode count mismatch");
  FockVector out = FockVector::zero(v.basis);
  const double sh = std::sqrt(f.grid.h);
  for (index_t idx = 0; idx < B.dim(); ++idx) {
    if (v.amp[idx] == cplx(0.0)) continue;
    for (int i = 0; i < B.modes(); ++i) {
      const int n = B.occ(idx, i);
      if (n == 0) continue;
      out.amp[B.shifted_index(idx, i, -1)] +=
          sh * std::conj(f.c[i]) * std::sqrt(double(n)) * v.amp[idx];
    }
  }
  return out;
}

// a*(f) = sqrt(h) sum_i f_i a_i^dag
inline FockVector apply_smeared_raise(const FockVector& v, const Orbital& f) {
  const FockBasis& B = *v.basis;
  require(f.grid.M == B.modes(), "apply_smeared_raise: mode count mismatch");
  FockVector out = FockVector::zero(v.basis);
  const double sh = std::sqrt(f.grid.h);
  for (index_t idx = 0; idx < B.dim(); ++idx) {
    if (v.amp[idx] == cplx(0.0)) continue;
    for (int i = 0; i < B.modes(); ++i) {
      const index_t up = B.shifted_index(idx, i, +1);
      if (up < 0) continue;
      out.amp[up] += sh * f.c[i] * std::sqrt(double(B.occ(idx, i) + 1)) * v.amp[idx];
    }
  }
  return out;
}

inline FockVector apply_number(const FockVector& v) {
  FockVector out = v;
  for (index_t idx = 0; idx < v.basis->dim(); ++idx) out.amp[idx] *= double(v.basis->total(idx));
  return out;
}

inline FockVector apply_number_sqrt(const FockVector& v, double shift = 0.0) {
  FockVector out = v;
  for (index_t idx = 0; idx < v.basis->dim(); ++idx)
    out.amp[idx] *= std::sqrt(double(v.basis->total(idx)) + shift);
  return out;
}

inline double number_expectation(const FockVector& v) {
  double acc = 0.0;
  for (index_t idx = 0; idx < v.basis->dim(); ++idx)
    acc += double(v.basis->total(idx)) * std::norm(v.amp[idx]);
  return acc;
}

inline FockVector sector_project(const FockVector& v, int sector) {
  require(sector >= 0 && sector <= v.basis->cutoff(), "sector_project: sector out of range");
  FockVector out = FockVector::zero(v.basis);
  const index_t b = v.basis->sector_begin(sector), e = v.basis->sector_end(sector);
  out.amp.segment(b, e - b) = v.amp.segment(b, e - b);
  return out;
}

struct NumberStatistics {
  RVec prob;  // P(total = n), n = 0..cutoff
  double mean = 0.0;
  double variance = 0.0;
};

// requires |norm(v) - 1| <= 1e-10
inline NumberStatistics number_statistics(const FockVector& v) {
  const double nrm = v.norm();
  if (std::abs(nrm - 1.0) > 1e-10)
    throw numeric_error("number_statistics: state not normalized (|norm-1| = " +
                        std::to_string(std::abs(nrm - 1.0)) + ")");
  NumberStatistics st;
  st.prob = RVec::Zero(v.basis->cutoff() + 1);
  for (int s = 0; s <= v.basis->cutoff(); ++s) {
    const index_t b = v.basis->sector_begin(s), e = v.basis->sector_end(s);
    st.prob[s] = v.amp.segment(b, e - b).squaredNorm();
  }
  double m1 = 0.0, m2 = 0.0;
  for (int s = 0; s <= v.basis->cutoff(); ++s) {
    m1 += s * st.prob[s];
    m2 += double(s) * s * st.prob[s];
  }
  st.mean = m1;
  st.variance = m2 - m1 * m1;
  return st;
}

// cutoff adequate for coherent mean lambda
inline int adequate_cutoff(double lambda) {
  return static_cast<int>(std::ceil(lambda + 8.0 * std::sqrt(lambda) + 10.0));
}

// Poisson tail mass above the cutoff, P(X > nmax), X ~ Poisson(lambda)
inline double coherent_tail_mass(double lambda, int nmax) {
  double logp = -lambda;  // log P(X = 0)
  double cdf = std::exp(logp);
  for (int n = 1; n <= nmax; ++n) {
    logp += std::log(lambda) - std::log(double(n));
    cdf += std::exp(logp);
  }
  return std::max(0.0, 1.0 - cdf);
}

// W(phi) Omega expanded in the occupation basis:
//   amp(n) = e^{-|phi|^2/2} prod_i z_i^{n_i} / sqrt(n_i!),  z = sqrt(h) phi.
// The norm defect equals the Poisson tail above the cutoff; it must be within
// budget and is reported through defect_out.
inline FockVector coherent_state(BasisPtr basis, const Orbital& phi, double* defect_out = nullptr,
                                 double tail_budget = 1e-12) {
  const FockBasis& B = *basis;
  require(phi.grid.M == B.modes(), "coherent_state: mode count mismatch");
  const double lambda = l2_norm(phi) * l2_norm(phi);
  const double tail = coherent_tail_mass(lambda, B.cutoff());
  if (tail > tail_budget)
    throw numeric_error("coherent_state: truncation tail " + std::to_string(tail) +
                        " above budget; raise the cutoff");
  const double sh = std::sqrt(phi.grid.h);
  // per-mode table: t(i, n) = z_i^n / sqrt(n!)
  Mat table(B.modes(), B.cutoff() + 1);
  for (int i = 0; i < B.modes(); ++i) {
    table(i, 0) = 1.0;
    const cplx z = sh * phi.c[i];
    for (int n = 1; n <= B.cutoff(); ++n) table(i, n) = table(i, n - 1) * z / std::sqrt(double(n));
  }
  FockVector out = FockVector::zero(std::move(basis));
  const double pref = std::exp(-lambda / 2.0);
  for (index_t idx = 0; idx < B.dim(); ++idx) {
    const std::uint8_t* n = B.occ(idx);
    cplx a = pref;
    for (int i = 0; i < B.modes(); ++i) a *= table(i, n[i]);
    out.amp[idx] = a;
  }
  if (defect_out) *defect_out = std::abs(1.0 - out.amp.squaredNorm());
  return out;
}

// normalized N-particle product state phi^{tensor N} (phi normalized)
inline FockVector product_state(BasisPtr basis, const Orbital& phi, int N) {
  const FockBasis& B = *basis;
  require(phi.grid.M == B.modes(), "product_state: mode count mismatch");
  require(N >= 0 && N <= B.cutoff(), "product_state: N above basis cutoff");
  const double sh = std::sqrt(phi.grid.h);
  Mat table(B.modes(), N + 1);
  for (int i = 0; i < B.modes(); ++i) {
    table(i, 0) = 1.0;
    const cplx z = sh * phi.c[i];
    for (int n = 1; n <= N; ++n) table(i, n) = table(i, n - 1) * z / std::sqrt(double(n));
  }
  FockVector out = FockVector::zero(std::move(basis));
  for (index_t idx = B.sector_begin(N); idx < B.sector_end(N); ++idx) {
    const std::uint8_t* n = B.occ(idx);
    cplx a = 1.0;
    for (int i = 0; i < B.modes(); ++i) a *= table(i, n[i]);
    out.amp[idx] = a;
  }
  const double nrm = out.norm();
  if (nrm == 0.0) throw numeric_error("product_state: zero norm (orbital vanishes?)");
  out.amp /= nrm;
  return out;
}

// Hermitian generator i*(a*(phi) - a(phi)); exp(-i * this) = W(phi)
inline SparseHermitian build_weyl_generator(const FockBasis& B, const Orbital& phi) {
  require(phi.grid.M == B.modes(), "build_weyl_generator: mode count mismatch");
  const double sh = std::sqrt(phi.grid.h);
  SparseHermitian A(B.dim());
  std::vector<std::pair<std::int32_t, cplx>> row;
  for (index_t idx = 0; idx < B.dim(); ++idx) {
    row.clear();
    for (int i = 0; i < B.modes(); ++i) {
      // entries of i*(a*(phi) - a(phi)) in row idx: contributions where
      // column state maps INTO idx
      const int n = B.occ(idx, i);
      if (n > 0) {  // a_i^dag |idx - e_i> -> idx
        const index_t src = B.shifted_index(idx, i, -1);
        row.emplace_back(static_cast<std::int32_t>(src),
                         cplx(0, 1) * sh * phi.c[i] * std::sqrt(double(n)));
      }
      const index_t up = B.shifted_index(idx, i, +1);
      if (up >= 0) {  // a_i |idx + e_i> -> idx
        row.emplace_back(static_cast<std::int32_t>(up),
                         cplx(0, -1) * sh * std::conj(phi.c[i]) * std::sqrt(double(n + 1)));
      }
    }
    A.append_row(row);
  }
  A.finalize();
  return A;
}

// W(phi) Psi = exp(a*(phi) - a(phi)) Psi via Krylov
inline FockVector weyl_apply(const FockVector& v, const Orbital& phi, const KrylovOptions& opt = {}) {
  SparseHermitian A = build_weyl_generator(*v.basis, phi);
  return FockVector(v.basis, expm_multiply(A, 1.0, v.amp, opt));
}

// Complex symmetric squeeze kernel with the grid weight carried alongside;
// the exponent convention (factor h^2) lives in build_squeeze_generator.
struct SqueezeKernel {
  Mat k;
  double h = 1.0;

  SqueezeKernel(Mat kernel, double weight) : k(std::move(kernel)), h(weight) {
    require(k.rows() == k.cols(), "SqueezeKernel: square matrix required");
    require(h > 0.0, "SqueezeKernel: positive grid weight required");
    const double scale = 1.0 + k.cwiseAbs().maxCoeff();
    require((k - k.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
            "SqueezeKernel: matrix must be symmetric");
  }
};

// Hermitian generator i*G with G = h^2 sum_xy (k_xy a_x^dag a_y^dag - conj(k_xy) a_x a_y).
// Convention factor: for a single mode with real k = r the effective squeeze
// parameter is 2*h^2*r, i.e. <N> on exp(G) Omega equals sinh^2(2*h^2*r).
inline SparseHermitian build_squeeze_generator(const FockBasis& B, const SqueezeKernel& kern) {
  require(kern.k.rows() == B.modes(), "build_squeeze_generator: mode count mismatch");
  const double w = kern.h * kern.h;
  SparseHermitian A(B.dim());
  std::vector<std::pair<std::int32_t, cplx>> row;
  for (index_t idx = 0; idx < B.dim(); ++idx) {
    row.clear();
    for (int x = 0; x < B.modes(); ++x) {
      for (int y = 0; y < B.modes(); ++y) {
        // a_x^dag a_y^dag |src> -> idx requires src = idx - e_x - e_y
        {
          const index_t mid = B.shifted_index(idx, x, -1);
          if (mid >= 0) {
            const index_t src = B.shifted_index(mid, y, -1);
            if (src >= 0) {
              const double amp =
                  std::sqrt(double(B.occ(idx, x))) * std::sqrt(double(B.occ(mid, y)));
              row.emplace_back(static_cast<std::int32_t>(src), cplx(0, 1) * w * kern.k(x, y) * amp);
            }
          }
        }
        // a_x a_y |src> -> idx requires src = idx + e_y + e_x within cutoff
        {
          const index_t mid = B.shifted_index(idx, y, +1);
          if (mid >= 0) {
            const index_t src = B.shifted_index(mid, x, +1);
            if (src >= 0) {
              const double amp =
                  std::sqrt(double(B.occ(mid, x) + 1)) * std::sqrt(double(B.occ(idx, y) + 1));
              row.emplace_back(static_cast<std::int32_t>(src),
                               cplx(0, -1) * w * std::conj(kern.k(x, y)) * amp);
            }
          }
        }
      }
    }
    A.append_row(row);
  }
  A.finalize();
  return A;
}

// T Psi = exp(G) Psi with the generator above
inline FockVector squeeze_apply(const FockVector& v, const SqueezeKernel& kern,
                                const KrylovOptions& opt = {}) {
  SparseHermitian A = build_squeeze_generator(*v.basis, kern);
  return FockVector(v.basis, expm_multiply(A, 1.0, v.amp, opt));
}

}  // namespace bosonlab
