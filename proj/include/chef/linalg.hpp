#pragma once

// Dense kernels shared by every module: row softmax, the cross-entropy
// gradient with respect to logits, a cyclic Jacobi symmetric eigensolver and
// the symmetric PSD square root built on it.
//
// Everything here is a free function template over Eigen expressions; the
// scalar type follows the argument. Feature matrices are row-major, one
// sample per row.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include <fmt/format.h>

#include "chef/errors.hpp"

namespace chef {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

template <typename DerivedA, typename DerivedB>
void require_same_shape(const Eigen::DenseBase<DerivedA>& a, const Eigen::DenseBase<DerivedB>& b,
                        const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(fmt::format("{}: shape {}x{} does not match {}x{}", what, a.rows(),
                                     a.cols(), b.rows(), b.cols()));
  }
}

/// Row-wise softmax. Each row is shifted by its maximum before
/// exponentiation, so finite logits of any magnitude are safe.
template <typename Derived>
MatrixX<typename Derived::Scalar> softmax_rows(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  MatrixX<Scalar> out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const Scalar peak = logits.row(r).maxCoeff();
    out.row(r) = (logits.row(r).array() - peak).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

/// Cross-entropy summed over rows: sum_i -log softmax(logits_i)[y_i], written
/// for general (not necessarily one-hot) target rows.
template <typename DerivedY, typename DerivedL>
typename DerivedL::Scalar summed_cross_entropy(const Eigen::MatrixBase<DerivedY>& labels_onehot,
                                               const Eigen::MatrixBase<DerivedL>& logits) {
  using Scalar = typename DerivedL::Scalar;
  require_same_shape(labels_onehot, logits, "summed_cross_entropy");
  Scalar loss = 0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const Scalar peak = logits.row(r).maxCoeff();
    const Scalar lse = peak + std::log((logits.row(r).array() - peak).exp().sum());
    loss += labels_onehot.row(r).sum() * lse - labels_onehot.row(r).dot(logits.row(r));
  }
  return loss;
}

/// Gradient of the summed cross-entropy with respect to the logits:
/// softmax(logits) - labels. No 1/rows factor.
template <typename DerivedY, typename DerivedL>
MatrixX<typename DerivedL::Scalar> ce_grad_wrt_logits(const Eigen::MatrixBase<DerivedY>& labels_onehot,
                                                      const Eigen::MatrixBase<DerivedL>& logits) {
  require_same_shape(labels_onehot, logits, "ce_grad_wrt_logits");
  return softmax_rows(logits) - labels_onehot;
}

/// Per-row argmax; ties go to the lowest column index.
template <typename Derived>
std::vector<int> argmax_rows(const Eigen::MatrixBase<Derived>& m) {
  std::vector<int> out(static_cast<std::size_t>(m.rows()), 0);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < m.cols(); ++c) {
      if (m(r, c) > m(r, best)) best = c;
    }
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

/// One-hot encoding of class indices into a rows x classes matrix.
template <typename Scalar = double>
MatrixX<Scalar> one_hot(const std::vector<int>& labels, int classes) {
  MatrixX<Scalar> y = MatrixX<Scalar>::Zero(static_cast<Eigen::Index>(labels.size()), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes) {
      throw DataError(fmt::format("label {} at row {} outside [0, {})", labels[i], i, classes));
    }
    y(static_cast<Eigen::Index>(i), labels[i]) = Scalar(1);
  }
  return y;
}

template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& a, typename Derived::Scalar rel_tol) {
  using Scalar = typename Derived::Scalar;
  if (a.rows() != a.cols()) return false;
  if (a.size() == 0) return true;
  const Scalar scale = std::max(Scalar(1), a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

template <typename Scalar>
struct SymEigen {
  VectorX<Scalar> eigenvalues;   // ascending
  MatrixX<Scalar> eigenvectors;  // column j pairs with eigenvalues(j)
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Sweeps until the
/// off-diagonal Frobenius norm drops below off_tol times the matrix norm.
template <typename Derived>
SymEigen<typename Derived::Scalar> sym_eigen(const Eigen::MatrixBase<Derived>& input,
                                             typename Derived::Scalar off_tol = 1e-12,
                                             int max_sweeps = 100) {
  using Scalar = typename Derived::Scalar;
  if (input.rows() != input.cols()) {
    throw DimensionError(fmt::format("sym_eigen: matrix is {}x{}, not square", input.rows(), input.cols()));
  }
  if (!input.allFinite()) throw NumericalError("sym_eigen: non-finite entry");
  if (!is_symmetric(input, Scalar(1e-8))) throw NumericalError("sym_eigen: matrix is not symmetric");

  const Eigen::Index n = input.rows();
  MatrixX<Scalar> a = (input + input.transpose()) / Scalar(2);
  MatrixX<Scalar> v = MatrixX<Scalar>::Identity(n, n);
  const Scalar scale = a.norm();

  auto off_norm = [&] {
    Scalar s = 0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = 0; q < n; ++q)
        if (p != q) s += a(p, q) * a(p, q);
    return std::sqrt(s);
  };

  bool converged = scale == Scalar(0);
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    if (off_norm() <= off_tol * scale) {
      converged = true;
      break;
    }
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Scalar apq = a(p, q);
        if (apq == Scalar(0)) continue;
        const Scalar tau = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
        const Scalar t = (tau >= 0 ? Scalar(1) : Scalar(-1)) / (std::abs(tau) + std::sqrt(Scalar(1) + tau * tau));
        const Scalar c = Scalar(1) / std::sqrt(Scalar(1) + t * t);
        const Scalar s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = Scalar(0);
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged && off_norm() > off_tol * scale) {
    throw NumericalError(fmt::format("sym_eigen: no convergence after {} sweeps", max_sweeps));
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });

  SymEigen<Scalar> out{VectorX<Scalar>(n), MatrixX<Scalar>(n, n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    out.eigenvalues(j) = a(order[static_cast<std::size_t>(j)], order[static_cast<std::size_t>(j)]);
    out.eigenvectors.col(j) = v.col(order[static_cast<std::size_t>(j)]);
  }
  return out;
}

/// Square root of a symmetric positive semidefinite matrix.
///
/// Eigenvalues with magnitude at most clamp_tol are treated as zero; anything
/// below -clamp_tol means the input is not PSD and raises NumericalError.
/// The default tolerance is 1e-10 times the largest eigenvalue magnitude.
template <typename Derived>
MatrixX<typename Derived::Scalar> sym_sqrt(const Eigen::MatrixBase<Derived>& a,
                                           std::optional<typename Derived::Scalar> clamp_tol = std::nullopt) {
  using Scalar = typename Derived::Scalar;
  const SymEigen<Scalar> eig = sym_eigen(a);
  const Eigen::Index n = eig.eigenvalues.size();
  if (n == 0) return MatrixX<Scalar>(0, 0);

  const Scalar peak = eig.eigenvalues.cwiseAbs().maxCoeff();
  const Scalar tol = clamp_tol.value_or(Scalar(1e-10) * peak);
  if (eig.eigenvalues(0) < -tol) {
    throw NumericalError(fmt::format("sym_sqrt: eigenvalue {:.6g} below -{:.3g}; matrix is not PSD",
                                     eig.eigenvalues(0), tol));
  }
  VectorX<Scalar> roots(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar lambda = eig.eigenvalues(i);
    roots(i) = lambda <= tol ? Scalar(0) : std::sqrt(lambda);
  }
  const MatrixX<Scalar> s = eig.eigenvectors * roots.asDiagonal() * eig.eigenvectors.transpose();
  return (s + s.transpose()) / Scalar(2);
}

}  // namespace chef
