#include "curvbco/numerics.hpp"

#include "curvbco/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace curvbco {

SymMatrix::SymMatrix(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) {
    throw Error("SymMatrix: matrix is not square");
  }
  const double scale = m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
  const double asym = m.size() == 0 ? 0.0 : (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol * std::max(scale, 1e-300) && asym > 0.0) {
    throw Error("SymMatrix: asymmetry " + std::to_string(asym) + " exceeds tolerance");
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(Eigen::Index n) { return SymMatrix(Matrix::Identity(n, n)); }

SymMatrix SymMatrix::diagonal(const Vector& d) { return SymMatrix(Matrix(d.asDiagonal())); }

SymMatrix SymMatrix::operator+(const SymMatrix& o) const {
  SymMatrix r;
  r.m_ = m_ + o.m_;
  return r;
}

SymMatrix SymMatrix::shifted(double c) const {
  SymMatrix r = *this;
  r.m_.diagonal().array() += c;
  return r;
}

SymMatrix SymMatrix::scaled(double c) const {
  SymMatrix r;
  r.m_ = c * m_;
  return r;
}

EigenDecomposition sym_eig(const SymMatrix& sm) {
  const Eigen::Index n = sm.order();
  Matrix a = sm.mat();
  Matrix v = Matrix::Identity(n, n);
  const double fro = a.norm();
  const double target = 1e-13 * fro;

  auto off_norm = [&]() {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < 100 && fro > 0.0 && off_norm() > target; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation zeroing a(p,q); see Golub & Van Loan, sym.schur2.
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });
  EigenDecomposition out{Vector(n), Matrix(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = a(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

namespace {

void require_spd(const EigenDecomposition& e) {
  const Eigen::Index n = e.values.size();
  if (n == 0) return;
  const double lo = e.values(0);
  const double hi = e.values(n - 1);
  if (!(lo > 1e-14 * hi) || !(hi > 0.0)) {
    throw ConditioningError("matrix is not numerically SPD", lo);
  }
}

SymMatrix compose(const EigenDecomposition& e, const Vector& mapped) {
  return SymMatrix(Matrix(e.vectors * mapped.asDiagonal() * e.vectors.transpose()), 1e-9);
}

}  // namespace

SymMatrix mat_pow(const SymMatrix& m, double p) {
  const EigenDecomposition e = sym_eig(m);
  require_spd(e);
  return compose(e, e.values.array().pow(p).matrix());
}

SqrtPair sqrt_and_inv_sqrt(const SymMatrix& m) {
  const EigenDecomposition e = sym_eig(m);
  require_spd(e);
  const Vector root = e.values.array().sqrt().matrix();
  return {compose(e, root), compose(e, root.cwiseInverse())};
}

double local_norm(const Vector& v, const SymMatrix& m, NormKind kind) {
  if (v.size() != m.order()) {
    throw Error("local_norm: dimension mismatch");
  }
  if (kind == NormKind::kPrimal) {
    const EigenDecomposition e = sym_eig(m);
    require_spd(e);
    return std::sqrt(std::max(0.0, v.dot(m * v)));
  }
  const SymMatrix inv = mat_pow(m, -1.0);
  return std::sqrt(std::max(0.0, v.dot(inv * v)));
}

BisectResult bisect(const std::function<double(double)>& f, double lo, double hi, double tol) {
  if (!(lo <= hi)) {
    throw BracketingError("bisect: lo > hi");
  }
  double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return {lo, 0};
  if (fhi == 0.0) return {hi, 0};
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw BracketingError("bisect: f(lo)=" + std::to_string(flo) + " and f(hi)=" +
                          std::to_string(fhi) + " have the same sign");
  }
  int it = 0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    ++it;
    const double fm = f(mid);
    if (fm == 0.0) return {mid, it};
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return {0.5 * (lo + hi), it};
}

Vector fd_gradient(const ScalarField& f, const Vector& x, double h) {
  Vector g(x.size());
  Vector p = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    p(i) = x(i) + h;
    const double fp = f(p);
    p(i) = x(i) - h;
    const double fm = f(p);
    p(i) = x(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

SymMatrix fd_hessian(const ScalarField& f, const Vector& x, double h) {
  const Eigen::Index n = x.size();
  Matrix hess(n, n);
  Vector p = x;
  const double f0 = f(x);
  for (Eigen::Index i = 0; i < n; ++i) {
    p(i) = x(i) + h;
    const double fp = f(p);
    p(i) = x(i) - h;
    const double fm = f(p);
    p(i) = x(i);
    hess(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double acc = 0.0;
      for (int si : {1, -1}) {
        for (int sj : {1, -1}) {
          p(i) = x(i) + si * h;
          p(j) = x(j) + sj * h;
          acc += si * sj * f(p);
        }
      }
      p(i) = x(i);
      p(j) = x(j);
      hess(i, j) = hess(j, i) = acc / (4.0 * h * h);
    }
  }
  return SymMatrix(hess);
}

}  // namespace curvbco
