// Copyright 2026 The jacprop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dense linear algebra kernels shared by every other module: the matrix
// exponential, the unsymmetric eigenvalue problem and a block-tridiagonal
// Cholesky solver. All of them are header-only templates over the Eigen
// scalar type; the rest of the library instantiates them with double.

#ifndef JACPROP_LINALG_H_
#define JACPROP_LINALG_H_

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jacprop/errors.h"

namespace jacprop {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

namespace internal {

template <typename Derived>
void require_square(const Eigen::MatrixBase<Derived>& m, const char* op) {
  if (m.rows() != m.cols()) {
    throw DimensionError(std::string(op) + ": matrix is " +
                         std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected square");
  }
}

}  // namespace internal

/// Matrix exponential by scaling and squaring around a diagonal [6/6] Pade
/// approximant. The argument is scaled by 2^-s so that its 1-norm is at most
/// 1/2, exponentiated, then squared s times.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> mat_exp(
    const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  using Mat = DenseMatrix<Scalar>;
  internal::require_square(m, "mat_exp");
  const Eigen::Index n = m.rows();
  if (n == 0) return Mat(0, 0);

  // c_k = (2p-k)! p! / ((2p)! k! (p-k)!), p = 6
  static constexpr Scalar kPade[] = {
      Scalar(1),          Scalar(1) / 2,     Scalar(5) / 44,
      Scalar(1) / 66,     Scalar(1) / 792,   Scalar(1) / 15840,
      Scalar(1) / 665280};

  const Scalar norm = m.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > Scalar(0.5)) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / Scalar(0.5))));
  }
  const Mat a = m.derived() * std::ldexp(Scalar(1), -squarings);
  const Mat ident = Mat::Identity(n, n);
  const Mat a2 = a * a;
  const Mat a4 = a2 * a2;
  const Mat a6 = a4 * a2;
  const Mat even = kPade[0] * ident + kPade[2] * a2 + kPade[4] * a4 +
                   kPade[6] * a6;
  const Mat odd =
      a * (kPade[1] * ident + kPade[3] * a2 + kPade[5] * a4);
  Mat result = (even - odd).partialPivLu().solve(even + odd);
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

namespace internal {

// Diagonal similarity by powers of two so that row and column norms are
// comparable. Eigenvalues are unchanged.
template <typename Scalar>
void balance(DenseMatrix<Scalar>& a) {
  constexpr Scalar kRadix = 2;
  constexpr Scalar kRadixSq = kRadix * kRadix;
  const Eigen::Index n = a.rows();
  bool done = false;
  while (!done) {
    done = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      Scalar r = 0, c = 0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(a(j, i));
        r += std::abs(a(i, j));
      }
      if (c == 0 || r == 0) continue;
      Scalar g = r / kRadix;
      Scalar f = 1;
      const Scalar s = c + r;
      while (c < g) {
        f *= kRadix;
        c *= kRadixSq;
      }
      g = r * kRadix;
      while (c > g) {
        f /= kRadix;
        c /= kRadixSq;
      }
      if ((c + r) / f < Scalar(0.95) * s) {
        done = false;
        a.row(i) /= f;
        a.col(i) *= f;
      }
    }
  }
}

// Householder reduction to upper Hessenberg form, in place.
template <typename Scalar>
void to_hessenberg(DenseMatrix<Scalar>& h) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = h.rows();
  for (Eigen::Index k = 0; k + 2 < n; ++k) {
    const Eigen::Index len = n - k - 1;
    Vec v = h.col(k).tail(len);
    const Scalar xnorm = v.norm();
    if (xnorm == 0) continue;
    const Scalar alpha = v(0) >= 0 ? -xnorm : xnorm;
    v(0) -= alpha;
    const Scalar vnorm = v.norm();
    if (vnorm == 0) continue;
    v /= vnorm;
    auto rows = h.bottomRows(len);
    rows -= Scalar(2) * v * (v.transpose() * rows);
    auto cols = h.rightCols(len);
    cols -= Scalar(2) * (cols * v) * v.transpose();
    h(k + 1, k) = alpha;
    h.col(k).tail(len - 1).setZero();
  }
}

template <typename Scalar>
Scalar sign_of(Scalar magnitude, Scalar sign) {
  return sign >= 0 ? std::abs(magnitude) : -std::abs(magnitude);
}

}  // namespace internal

/// Relative subdiagonal size below which the QR iteration deflates.
inline constexpr double kDeflationTolerance = 1e-12;

/// All eigenvalues of a real square matrix, with multiplicity.
///
/// The matrix is balanced, reduced to Hessenberg form and then driven to
/// quasi-triangular form by Francis double-shift QR sweeps. Eigenvalues are
/// returned in the order they deflate (bottom of the matrix first), so the
/// order is deterministic for a given input. Throws ConvergenceError after
/// 100 n sweeps; the error carries the eigenvalues found so far.
template <typename Derived>
std::vector<std::complex<typename Derived::Scalar>> eigenvalues(
    const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  using Cplx = std::complex<Scalar>;
  internal::require_square(m, "eigenvalues");
  const int n = static_cast<int>(m.rows());
  std::vector<Cplx> found;
  found.reserve(n);
  if (n == 0) return found;
  if (!m.allFinite()) throw DomainError("eigenvalues: non-finite entry");

  DenseMatrix<Scalar> a = m;
  internal::balance(a);
  internal::to_hessenberg(a);

  Scalar anorm = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(a(i, j));
  }
  const Scalar tol = Scalar(kDeflationTolerance);
  const long max_sweeps = 100L * n;
  long sweeps = 0;

  int nn = n - 1;
  Scalar shift = 0;
  while (nn >= 0) {
    int its = 0;
    int l = 0;
    do {
      for (l = nn; l > 0; --l) {
        Scalar s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
        if (s == 0) s = anorm;
        if (std::abs(a(l, l - 1)) <= tol * s) {
          a(l, l - 1) = 0;
          break;
        }
      }
      Scalar x = a(nn, nn);
      if (l == nn) {
        found.emplace_back(x + shift, 0);
        --nn;
      } else {
        Scalar y = a(nn - 1, nn - 1);
        Scalar w = a(nn, nn - 1) * a(nn - 1, nn);
        if (l == nn - 1) {
          // Trailing 2x2 block.
          const Scalar p = Scalar(0.5) * (y - x);
          const Scalar q = p * p + w;
          Scalar z = std::sqrt(std::abs(q));
          x += shift;
          if (q >= 0) {
            z = p + internal::sign_of(z, p);
            const Scalar hi = x + z;
            const Scalar lo = z != 0 ? x - w / z : hi;
            found.emplace_back(lo, 0);
            found.emplace_back(hi, 0);
          } else {
            found.emplace_back(x + p, z);
            found.emplace_back(x + p, -z);
          }
          nn -= 2;
        } else {
          if (++sweeps > max_sweeps) {
            std::vector<Complex> partial;
            for (const auto& e : found) {
              partial.emplace_back(static_cast<double>(e.real()),
                                   static_cast<double>(e.imag()));
            }
            throw ConvergenceError(
                "eigenvalues: QR iteration did not converge within " +
                    std::to_string(max_sweeps) + " sweeps",
                std::move(partial));
          }
          if (its > 0 && its % 10 == 0) {
            // Exceptional shift.
            shift += x;
            for (int i = 0; i <= nn; ++i) a(i, i) -= x;
            const Scalar s =
                std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
            y = x = Scalar(0.75) * s;
            w = Scalar(-0.4375) * s * s;
          }
          ++its;
          int mm = nn - 2;
          Scalar p = 0, q = 0, r = 0, z = 0;
          for (; mm >= l; --mm) {
            z = a(mm, mm);
            r = x - z;
            Scalar s = y - z;
            p = (r * s - w) / a(mm + 1, mm) + a(mm, mm + 1);
            q = a(mm + 1, mm + 1) - z - r - s;
            r = a(mm + 2, mm + 1);
            s = std::abs(p) + std::abs(q) + std::abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (mm == l) break;
            const Scalar u = std::abs(a(mm, mm - 1)) * (std::abs(q) + std::abs(r));
            const Scalar v = std::abs(p) * (std::abs(a(mm - 1, mm - 1)) +
                                            std::abs(z) +
                                            std::abs(a(mm + 1, mm + 1)));
            if (u <= std::numeric_limits<Scalar>::epsilon() * v) break;
          }
          for (int i = mm; i < nn - 1; ++i) {
            a(i + 2, i) = 0;
            if (i != mm) a(i + 2, i - 1) = 0;
          }
          for (int k = mm; k < nn; ++k) {
            if (k != mm) {
              p = a(k, k - 1);
              q = a(k + 1, k - 1);
              r = 0;
              if (k + 1 != nn) r = a(k + 2, k - 1);
              x = std::abs(p) + std::abs(q) + std::abs(r);
              if (x != 0) {
                p /= x;
                q /= x;
                r /= x;
              }
            }
            const Scalar s =
                internal::sign_of(std::sqrt(p * p + q * q + r * r), p);
            if (s == 0) continue;
            if (k == mm) {
              if (l != mm) a(k, k - 1) = -a(k, k - 1);
            } else {
              a(k, k - 1) = -s * x;
            }
            p += s;
            x = p / s;
            y = q / s;
            z = r / s;
            q /= p;
            r /= p;
            for (int j = k; j <= nn; ++j) {
              p = a(k, j) + q * a(k + 1, j);
              if (k + 1 != nn) {
                p += r * a(k + 2, j);
                a(k + 2, j) -= p * z;
              }
              a(k + 1, j) -= p * y;
              a(k, j) -= p * x;
            }
            const int imax = nn < k + 3 ? nn : k + 3;
            for (int i = l; i <= imax; ++i) {
              p = x * a(i, k) + y * a(i, k + 1);
              if (k + 1 != nn) {
                p += z * a(i, k + 2);
                a(i, k + 2) -= p * r;
              }
              a(i, k + 1) -= p * q;
              a(i, k) -= p;
            }
          }
        }
      }
    } while (l + 1 < nn);
  }
  return found;
}

/// Symmetric block-tridiagonal matrix. `diagonal[i]` is block (i, i) and
/// `lower[i]` is block (i + 1, i); the upper blocks are their transposes.
template <typename Scalar>
struct BlockTridiagonal {
  std::vector<DenseMatrix<Scalar>> diagonal;
  std::vector<DenseMatrix<Scalar>> lower;

  Eigen::Index num_blocks() const {
    return static_cast<Eigen::Index>(diagonal.size());
  }
  Eigen::Index block_size() const {
    return diagonal.empty() ? 0 : diagonal.front().rows();
  }
  Eigen::Index size() const { return num_blocks() * block_size(); }

  void validate() const {
    const Eigen::Index k = block_size();
    if (lower.size() + 1 != diagonal.size() && !diagonal.empty()) {
      throw DimensionError("BlockTridiagonal: expected " +
                           std::to_string(diagonal.size() - 1) +
                           " off-diagonal blocks, got " +
                           std::to_string(lower.size()));
    }
    for (const auto& d : diagonal) {
      if (d.rows() != k || d.cols() != k) {
        throw DimensionError("BlockTridiagonal: inconsistent diagonal block");
      }
    }
    for (const auto& b : lower) {
      if (b.rows() != k || b.cols() != k) {
        throw DimensionError("BlockTridiagonal: inconsistent off-diagonal block");
      }
    }
  }

  DenseMatrix<Scalar> dense() const {
    const Eigen::Index k = block_size();
    DenseMatrix<Scalar> out = DenseMatrix<Scalar>::Zero(size(), size());
    for (Eigen::Index i = 0; i < num_blocks(); ++i) {
      out.block(i * k, i * k, k, k) = diagonal[i];
      if (i + 1 < num_blocks()) {
        out.block((i + 1) * k, i * k, k, k) = lower[i];
        out.block(i * k, (i + 1) * k, k, k) = lower[i].transpose();
      }
    }
    return out;
  }
};

namespace internal {

// In-place lower Cholesky factor of a small dense block. Pivots at or below
// `floor` are rejected.
template <typename Scalar>
void cholesky_block(DenseMatrix<Scalar>& a, Scalar floor, Eigen::Index block) {
  const Eigen::Index k = a.rows();
  for (Eigen::Index j = 0; j < k; ++j) {
    Scalar d = a(j, j) - a.row(j).head(j).squaredNorm();
    if (!(d > floor)) {
      throw NotSpdError("solve_banded_spd: non-positive pivot " +
                            std::to_string(static_cast<double>(d)) +
                            " at block " + std::to_string(block) + ", row " +
                            std::to_string(j),
                        block, j);
    }
    d = std::sqrt(d);
    a(j, j) = d;
    for (Eigen::Index i = j + 1; i < k; ++i) {
      a(i, j) = (a(i, j) - a.row(i).head(j).dot(a.row(j).head(j))) / d;
    }
    a.col(j).head(j).setZero();
  }
}

}  // namespace internal

/// Block Cholesky factorization L L^T of a BlockTridiagonal SPD matrix.
/// L is block lower bidiagonal: `diag_[i]` are lower-triangular diagonal
/// factors and `sub_[i]` is block (i + 1, i).
template <typename Scalar>
class BlockTridiagonalCholesky {
 public:
  using Mat = DenseMatrix<Scalar>;

  explicit BlockTridiagonalCholesky(const BlockTridiagonal<Scalar>& system) {
    system.validate();
    const Eigen::Index nb = system.num_blocks();
    Scalar scale = 0;
    for (const auto& d : system.diagonal) {
      if (d.size() > 0) scale = std::max(scale, d.diagonal().cwiseAbs().maxCoeff());
    }
    const Scalar floor = std::numeric_limits<Scalar>::epsilon() * scale;
    diag_.reserve(nb);
    sub_.reserve(nb > 0 ? nb - 1 : 0);
    for (Eigen::Index i = 0; i < nb; ++i) {
      Mat s = system.diagonal[i];
      if (i > 0) {
        // C = B L^-T, i.e. solve L C^T = B^T.
        Mat c = diag_.back()
                    .template triangularView<Eigen::Lower>()
                    .solve(system.lower[i - 1].transpose())
                    .transpose();
        s.noalias() -= c * c.transpose();
        sub_.push_back(std::move(c));
      }
      internal::cholesky_block(s, floor, i);
      diag_.push_back(std::move(s));
    }
  }

  /// Solves for every column of `rhs` (size() rows).
  template <typename Derived>
  Mat solve(const Eigen::MatrixBase<Derived>& rhs) const {
    const Eigen::Index nb = static_cast<Eigen::Index>(diag_.size());
    const Eigen::Index k = nb == 0 ? 0 : diag_.front().rows();
    if (rhs.rows() != nb * k) {
      throw DimensionError("solve_banded_spd: rhs has " +
                           std::to_string(rhs.rows()) + " rows, expected " +
                           std::to_string(nb * k));
    }
    Mat y = rhs;
    for (Eigen::Index i = 0; i < nb; ++i) {
      auto yi = y.middleRows(i * k, k);
      if (i > 0) yi.noalias() -= sub_[i - 1] * y.middleRows((i - 1) * k, k);
      diag_[i].template triangularView<Eigen::Lower>().solveInPlace(yi);
    }
    for (Eigen::Index i = nb - 1; i >= 0; --i) {
      auto yi = y.middleRows(i * k, k);
      if (i + 1 < nb) {
        yi.noalias() -= sub_[i].transpose() * y.middleRows((i + 1) * k, k);
      }
      diag_[i].transpose().template triangularView<Eigen::Upper>().solveInPlace(yi);
    }
    return y;
  }

 private:
  std::vector<Mat> diag_;
  std::vector<Mat> sub_;
};

/// Solves system * X = rhs for a symmetric positive-definite block-tridiagonal
/// system. Throws NotSpdError when a pivot is non-positive.
template <typename Scalar, typename Derived>
DenseMatrix<Scalar> solve_banded_spd(const BlockTridiagonal<Scalar>& system,
                                     const Eigen::MatrixBase<Derived>& rhs) {
  return BlockTridiagonalCholesky<Scalar>(system).solve(rhs);
}

}  // namespace jacprop

#endif  // JACPROP_LINALG_H_
