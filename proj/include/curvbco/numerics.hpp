#pragma once

#include <Eigen/Dense>

#include <functional>

namespace curvbco {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dense symmetric matrix. Symmetry is checked on construction (relative to
/// the largest entry) and the stored value is the exact symmetric part.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m, double tol = 1e-12);

  static SymMatrix identity(Eigen::Index n);
  static SymMatrix diagonal(const Vector& d);

  Eigen::Index order() const { return m_.rows(); }
  const Matrix& mat() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  Vector operator*(const Vector& v) const { return m_ * v; }
  SymMatrix operator+(const SymMatrix& o) const;
  SymMatrix shifted(double c) const;  // M + c I
  SymMatrix scaled(double c) const;

 private:
  Matrix m_;
};

struct EigenDecomposition {
  Vector values;   // ascending
  Matrix vectors;  // columns, orthonormal
};

/// Cyclic Jacobi; sweeps until the off-diagonal Frobenius norm is below
/// 1e-13 of ||M||_F.
EigenDecomposition sym_eig(const SymMatrix& m);

/// Q diag(lambda^p) Q^T for SPD M. Throws ConditioningError when
/// min eigenvalue <= 1e-14 * max eigenvalue.
SymMatrix mat_pow(const SymMatrix& m, double p);

struct SqrtPair {
  SymMatrix sqrt;
  SymMatrix inv_sqrt;
};
/// M^{1/2} and M^{-1/2} from a single decomposition.
SqrtPair sqrt_and_inv_sqrt(const SymMatrix& m);

enum class NormKind { kPrimal, kDual };

/// sqrt(v^T M v), or sqrt(v^T M^{-1} v) for the dual norm.
double local_norm(const Vector& v, const SymMatrix& m, NormKind kind = NormKind::kPrimal);

struct BisectResult {
  double root;
  int iterations;
};

/// Bisection for a continuous monotone f with a sign change on [lo, hi].
BisectResult bisect(const std::function<double(double)>& f, double lo, double hi, double tol);
inline double bisect_root(const std::function<double(double)>& f, double lo, double hi,
                          double tol) {
  return bisect(f, lo, hi, tol).root;
}

using ScalarField = std::function<double(const Vector&)>;

/// Central differences. Exceptions thrown by f (e.g. DomainViolation when the
/// stencil leaves a barrier's domain) propagate.
Vector fd_gradient(const ScalarField& f, const Vector& x, double h);
SymMatrix fd_hessian(const ScalarField& f, const Vector& x, double h);

}  // namespace curvbco
