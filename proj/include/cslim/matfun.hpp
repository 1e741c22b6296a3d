#pragma once

#include <cmath>
#include <complex>
#include <sstream>
#include <string>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "cslim/errors.hpp"

namespace cslim {

template <class Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatX<double>;
using Vector = VecX<double>;

template <class Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

template <class Derived>
MatX<typename Derived::Scalar> symmetrize(const Eigen::MatrixBase<Derived>& m) {
  return ((m + m.transpose()) / 2).eval();
}

namespace detail {

inline void require_square(Eigen::Index rows, Eigen::Index cols, const char* op) {
  if (rows != cols || rows == 0) {
    std::ostringstream os;
    os << op << ": expected a nonempty square matrix, got " << rows << "x" << cols;
    throw Error(os.str());
  }
}

template <class Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* op) {
  if (!m.allFinite()) {
    throw Error(std::string(op) + ": input has non-finite entries");
  }
}

// Relative symmetry check used by the SPD-facing operations.
template <class Scalar>
void require_symmetric(const MatX<Scalar>& m, const char* op) {
  const Scalar scale = m.template lpNorm<Eigen::Infinity>();
  const Scalar asym = (m - MatX<Scalar>(m.transpose())).template lpNorm<Eigen::Infinity>();
  if (asym > Scalar(1e-10) * std::max(scale, Scalar(1))) {
    throw NotPSD(std::string(op) + ": input is not symmetric");
  }
}

}  // namespace detail

// True when every eigenvalue of a has strictly negative real part.
template <class Scalar>
bool is_stable(const MatX<Scalar>& a) {
  detail::require_square(a.rows(), a.cols(), "is_stable");
  detail::require_finite(a, "is_stable");
  Eigen::EigenSolver<MatX<Scalar>> es(a, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw Error("is_stable: eigenvalue iteration failed");
  }
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (es.eigenvalues()[i].real() >= Scalar(0)) return false;
  }
  return true;
}

// exp(a*s) by scaling and squaring with Pade approximants.
template <class Scalar>
MatX<Scalar> mat_exp(const MatX<Scalar>& a, Scalar s = Scalar(1)) {
  detail::require_square(a.rows(), a.cols(), "mat_exp");
  detail::require_finite(a, "mat_exp");
  if (!std::isfinite(static_cast<double>(s))) {
    throw Error("mat_exp: scale factor is not finite");
  }
  MatX<Scalar> result = (a * s).exp();
  if (!result.allFinite()) {
    throw Error("mat_exp: result overflowed");
  }
  return result;
}

// Principal logarithm of a real matrix via inverse scaling and squaring on the
// real Schur form.  The principal branch exists only when no eigenvalue lies on
// the closed negative real axis; near-singular input is rejected first.
template <class Scalar>
MatX<Scalar> mat_log(const MatX<Scalar>& m) {
  detail::require_square(m.rows(), m.cols(), "mat_log");
  detail::require_finite(m, "mat_log");

  Eigen::EigenSolver<MatX<Scalar>> es(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw Error("mat_log: eigenvalue iteration failed");
  }
  Scalar top = Scalar(0);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    top = std::max(top, std::abs(es.eigenvalues()[i]));
  }
  if (top == Scalar(0)) {
    throw SingularMatrix("mat_log: matrix is zero");
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const std::complex<Scalar> ev = es.eigenvalues()[i];
    const Scalar mag = std::abs(ev);
    if (mag <= Scalar(1e-14) * top) {
      std::ostringstream os;
      os << "mat_log: eigenvalue " << ev.real() << "+" << ev.imag()
         << "i is numerically zero";
      throw SingularMatrix(os.str());
    }
    if (ev.real() < Scalar(0) && std::abs(ev.imag()) <= Scalar(1e-12) * mag) {
      std::ostringstream os;
      os << "mat_log: eigenvalue " << ev.real()
         << " lies on the negative real axis";
      throw EigenvalueOnBranchCut(os.str());
    }
  }

  MatX<Scalar> result = m.log();
  if (!result.allFinite()) {
    throw Error("mat_log: result has non-finite entries");
  }
  return result;
}

// Symmetric PSD square root through the spectral decomposition.  Eigenvalues
// inside the tolerated negative band [-1e-10*norm, 0) are clamped to zero.
template <class Scalar>
MatX<Scalar> spd_sqrt(const MatX<Scalar>& q) {
  detail::require_square(q.rows(), q.cols(), "spd_sqrt");
  detail::require_finite(q, "spd_sqrt");
  detail::require_symmetric<Scalar>(q, "spd_sqrt");

  const MatX<Scalar> qs = symmetrize(q);
  Eigen::SelfAdjointEigenSolver<MatX<Scalar>> es(qs);
  if (es.info() != Eigen::Success) {
    throw Error("spd_sqrt: eigenvalue iteration failed");
  }
  const Scalar norm = qs.norm();
  VecX<Scalar> lam = es.eigenvalues();
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam[i] < -Scalar(1e-10) * std::max(norm, Scalar(1))) {
      std::ostringstream os;
      os << "spd_sqrt: eigenvalue " << lam[i] << " below PSD tolerance";
      throw NotPSD(os.str());
    }
    lam[i] = lam[i] > Scalar(0) ? std::sqrt(lam[i]) : Scalar(0);
  }
  return symmetrize(MatX<Scalar>(es.eigenvectors() * lam.asDiagonal() *
                                 es.eigenvectors().transpose()));
}

// Solves a*c + c*a^T + 2*q = 0 for the stationary covariance c of a stable
// linear system.  Complex Schur reduction of a turns the equation into a
// triangular solve (Bartels-Stewart); stability guarantees every pivot
// t_ii + conj(t_jj) has negative real part.
template <class Scalar>
MatX<Scalar> solve_lyapunov(const MatX<Scalar>& a, const MatX<Scalar>& q) {
  detail::require_square(a.rows(), a.cols(), "solve_lyapunov");
  if (q.rows() != a.rows() || q.cols() != a.cols()) {
    throw Error("solve_lyapunov: dimension mismatch between a and q");
  }
  detail::require_finite(a, "solve_lyapunov");
  detail::require_finite(q, "solve_lyapunov");
  detail::require_symmetric<Scalar>(q, "solve_lyapunov");
  if (!is_stable(a)) {
    throw UnstableDynamics("solve_lyapunov: dynamics matrix is not stable");
  }

  using CMat = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = a.rows();
  Eigen::ComplexSchur<CMat> schur(a.template cast<std::complex<Scalar>>());
  if (schur.info() != Eigen::Success) {
    throw Error("solve_lyapunov: Schur decomposition failed");
  }
  const CMat t = schur.matrixT();
  const CMat u = schur.matrixU();
  const CMat w = -Scalar(2) *
                 (u.adjoint() * symmetrize(q).template cast<std::complex<Scalar>>() * u);

  // t*y + y*t^H = w, solved entrywise with i and j descending: entry (i, j)
  // references y(k, j) for k > i and y(i, k) for k > j, both already known.
  CMat y = CMat::Zero(n, n);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    for (Eigen::Index j = n - 1; j >= 0; --j) {
      std::complex<Scalar> rhs = w(i, j);
      for (Eigen::Index k = i + 1; k < n; ++k) rhs -= t(i, k) * y(k, j);
      for (Eigen::Index k = j + 1; k < n; ++k) rhs -= y(i, k) * std::conj(t(j, k));
      y(i, j) = rhs / (t(i, i) + std::conj(t(j, j)));
    }
  }

  const CMat c = u * y * u.adjoint();
  return symmetrize(MatX<Scalar>(c.real()));
}

// Nearest symmetric matrix with eigenvalues >= eps, by spectral clipping.
template <class Scalar>
MatX<Scalar> nearest_psd(const MatX<Scalar>& m, Scalar eps = Scalar(0)) {
  detail::require_square(m.rows(), m.cols(), "nearest_psd");
  detail::require_finite(m, "nearest_psd");
  if (eps < Scalar(0)) {
    throw Error("nearest_psd: eps must be nonnegative");
  }
  Eigen::SelfAdjointEigenSolver<MatX<Scalar>> es(symmetrize(m));
  if (es.info() != Eigen::Success) {
    throw Error("nearest_psd: eigenvalue iteration failed");
  }
  VecX<Scalar> lam = es.eigenvalues().cwiseMax(eps);
  return symmetrize(MatX<Scalar>(es.eigenvectors() * lam.asDiagonal() *
                                 es.eigenvectors().transpose()));
}

}  // namespace cslim
