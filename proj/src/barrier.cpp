#include "curvbco/barrier.hpp"

#include "curvbco/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace curvbco {

namespace {

constexpr double kInteriorTol = 1e-12;
constexpr double kVertexTol = 1e-9;
constexpr long kMaxVertexSubsets = 2'000'000;

// Calls visit(indices) for every k-subset of {0..n-1}; stops early if visit
// returns false.
template <typename Visit>
void for_each_subset(int n, int k, Visit&& visit) {
  if (k > n) return;
  std::vector<int> idx(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) idx[i] = i;
  for (;;) {
    if (!visit(idx)) return;
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return static_cast<long>(std::llround(std::min(r, 1e18)));
}

}  // namespace

std::vector<Vector> enumerate_vertices(const Matrix& a, const Vector& b) {
  const int m = static_cast<int>(a.rows());
  const int d = static_cast<int>(a.cols());
  if (binomial(m, d) > kMaxVertexSubsets) {
    throw ConfigError("polytope has too many constraints for vertex enumeration", "domain.A");
  }
  std::vector<Vector> out;
  for_each_subset(m, d, [&](const std::vector<int>& rows) {
    Matrix sub(d, d);
    Vector rhs(d);
    for (int i = 0; i < d; ++i) {
      sub.row(i) = a.row(rows[i]);
      rhs(i) = b(rows[i]);
    }
    Eigen::FullPivLU<Matrix> lu(sub);
    if (lu.rank() < d) return true;
    const Vector x = lu.solve(rhs);
    const Vector slack = b - a * x;
    for (int i = 0; i < m; ++i) {
      if (slack(i) < -kVertexTol * (1.0 + std::abs(b(i)))) return true;
    }
    for (const Vector& v : out) {
      if ((v - x).norm() <= kVertexTol * (1.0 + x.norm())) return true;
    }
    out.push_back(x);
    return true;
  });
  return out;
}

Domain Domain::ball(Eigen::Index dim, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw ConfigError("ball radius must be positive", "domain.radius");
  }
  if (dim < 1) {
    throw ConfigError("dimension must be at least 1", "domain.dim");
  }
  Domain dom;
  dom.kind_ = DomainKind::kBall;
  dom.dim_ = dim;
  dom.radius_ = radius;
  dom.diameter_ = 2.0 * radius;
  dom.max_norm_ = radius;
  return dom;
}

Domain Domain::polytope(Matrix a, Vector b) {
  if (a.rows() != b.size() || a.rows() == 0 || a.cols() == 0) {
    throw ConfigError("A must be m x d with m = len(b) > 0", "domain.A");
  }
  const Eigen::Index d = a.cols();
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    if (!(b(i) > kInteriorTol * (1.0 + std::abs(b(i))))) {
      throw ConfigError("origin is not strictly interior (b_" + std::to_string(i) + " <= 0)",
                        "domain.b");
    }
  }
  // Every axis direction needs a constraint bounding it.
  for (Eigen::Index j = 0; j < d; ++j) {
    const bool pos = (a.col(j).array() > 0.0).any();
    const bool neg = (a.col(j).array() < 0.0).any();
    if (!pos || !neg) {
      throw ConfigError("polytope is unbounded along axis " + std::to_string(j), "domain.A");
    }
  }
  // Exact test: the recession cone {v : Av <= 0} is trivial iff the cone cut
  // by the box [-1, 1]^d has no vertex other than the origin.
  {
    Matrix aug(a.rows() + 2 * d, d);
    aug << a, Matrix::Identity(d, d), -Matrix::Identity(d, d);
    Vector rhs(a.rows() + 2 * d);
    rhs << Vector::Zero(a.rows()), Vector::Ones(2 * d);
    for (const Vector& v : enumerate_vertices(aug, rhs)) {
      if (v.norm() > 1e-9) {
        throw ConfigError("polytope is unbounded", "domain.A");
      }
    }
  }

  Domain dom;
  dom.kind_ = DomainKind::kPolytope;
  dom.dim_ = d;
  dom.a_ = std::move(a);
  dom.b_ = std::move(b);
  dom.vertices_ = enumerate_vertices(dom.a_, dom.b_);
  if (dom.vertices_.size() < static_cast<size_t>(d + 1)) {
    throw ConfigError("polytope is degenerate", "domain.A");
  }
  dom.box_lo_ = dom.vertices_.front();
  dom.box_hi_ = dom.vertices_.front();
  for (const Vector& v : dom.vertices_) {
    dom.box_lo_ = dom.box_lo_.cwiseMin(v);
    dom.box_hi_ = dom.box_hi_.cwiseMax(v);
    dom.max_norm_ = std::max(dom.max_norm_, v.norm());
    for (const Vector& w : dom.vertices_) {
      dom.diameter_ = std::max(dom.diameter_, (v - w).norm());
    }
  }
  return dom;
}

Membership Domain::contains(const Vector& x) const {
  if (x.size() != dim_) {
    throw Error("contains: dimension mismatch");
  }
  if (kind_ == DomainKind::kBall) {
    const double r2 = radius_ * radius_;
    const double slack = r2 - x.squaredNorm();
    return {slack >= 0.0, slack > kInteriorTol * (1.0 + r2), slack};
  }
  const Vector slack = b_ - a_ * x;
  bool interior = true;
  for (Eigen::Index i = 0; i < slack.size(); ++i) {
    if (!(slack(i) > kInteriorTol * (1.0 + std::abs(b_(i))))) interior = false;
  }
  const double s = slack.minCoeff();
  return {s >= 0.0, interior, s};
}

Vector Domain::sample(Rng& rng) const {
  if (kind_ == DomainKind::kBall) {
    return rng.in_ball(dim_, radius_);
  }
  for (int attempt = 0; attempt < 1'000'000; ++attempt) {
    Vector x(dim_);
    for (Eigen::Index i = 0; i < dim_; ++i) x(i) = rng.uniform(box_lo_(i), box_hi_(i));
    if (contains(x).feasible) return x;
  }
  throw Error("Domain::sample: rejection sampling failed");
}

Vector Domain::project(const Vector& x) const {
  if (kind_ == DomainKind::kBall) {
    const double n = x.norm();
    return n <= radius_ ? x : Vector(x * (radius_ / n));
  }
  if (contains(x).feasible) return x;
  // Dykstra's alternating projections over the half-spaces.
  const Eigen::Index m = a_.rows();
  Vector y = x;
  Matrix corr = Matrix::Zero(dim_, m);
  for (int sweep = 0; sweep < 100'000; ++sweep) {
    const Vector before = y;
    for (Eigen::Index i = 0; i < m; ++i) {
      const Vector z = y + corr.col(i);
      const Vector ai = a_.row(i).transpose();
      const double viol = ai.dot(z) - b_(i);
      const Vector p = viol > 0.0 ? Vector(z - (viol / ai.squaredNorm()) * ai) : z;
      corr.col(i) = z - p;
      y = p;
    }
    if ((y - before).norm() <= 1e-14 * (1.0 + y.norm()) && contains(y).slack >= -1e-12) break;
  }
  return y;
}

Barrier Barrier::ball(Eigen::Index dim, double radius) {
  return Barrier(Domain::ball(dim, radius), 1.0);
}

Barrier Barrier::polytope(Matrix a, Vector b) {
  Domain dom = Domain::polytope(std::move(a), std::move(b));
  const double nu = static_cast<double>(dom.a().rows());
  return Barrier(std::move(dom), nu);
}

Barrier Barrier::for_domain(const Domain& domain) {
  if (domain.kind() == DomainKind::kBall) return Barrier(domain, 1.0);
  return Barrier(domain, static_cast<double>(domain.a().rows()));
}

Barrier Barrier::with_declared_nu(double nu) const { return Barrier(domain_, nu); }

void Barrier::require_interior(const Vector& x) const {
  const Membership m = domain_.contains(x);
  if (!m.strictly_interior) {
    throw DomainViolation("barrier evaluated outside the open domain", m.slack);
  }
}

BarrierEval Barrier::eval(const Vector& x) const {
  require_interior(x);
  const Eigen::Index d = dim();
  if (domain_.kind() == DomainKind::kBall) {
    const double s = domain_.radius() * domain_.radius() - x.squaredNorm();
    Matrix h = (2.0 / s) * Matrix::Identity(d, d) + (4.0 / (s * s)) * x * x.transpose();
    return {-std::log(s), (2.0 / s) * x, SymMatrix(h)};
  }
  const Vector slack = domain_.b() - domain_.a() * x;
  const Vector inv = slack.cwiseInverse();
  const Matrix& a = domain_.a();
  Matrix h = a.transpose() * inv.cwiseAbs2().asDiagonal() * a;
  return {-slack.array().log().sum(), a.transpose() * inv, SymMatrix(h)};
}

double Barrier::value(const Vector& x) const {
  require_interior(x);
  if (domain_.kind() == DomainKind::kBall) {
    return -std::log(domain_.radius() * domain_.radius() - x.squaredNorm());
  }
  return -(domain_.b() - domain_.a() * x).array().log().sum();
}

Vector Barrier::gradient(const Vector& x) const { return eval(x).gradient; }

SymMatrix Barrier::hessian(const Vector& x) const { return eval(x).hessian; }

NormalBarrier::NormalBarrier(Barrier base) : base_(std::move(base)) {}

namespace {

// Splits z = (w, b), checks b > 0 and returns w / b.
Vector dehomogenize(const Vector& z, Eigen::Index d) {
  if (z.size() != d + 1) {
    throw Error("normal barrier: expected a lifted point of dimension d+1");
  }
  const double b = z(d);
  if (!(b > 0.0)) {
    throw DomainViolation("normal barrier evaluated with b <= 0", b);
  }
  return z.head(d) / b;
}

}  // namespace

// With x = w/b, g = grad psi(x), H = hess psi(x):
//   dPsi/dw = 400 g / b
//   dPsi/db = -400 (g.x + 2 nu) / b
//   d2Psi/dw2  = 400 H / b^2
//   d2Psi/dwdb = -400 (H x + g) / b^2
//   d2Psi/db2  = 400 (x^T H x + 2 g.x + 2 nu) / b^2
BarrierEval NormalBarrier::eval(const Vector& z) const {
  const Eigen::Index d = base_.dim();
  const Vector x = dehomogenize(z, d);
  const double b = z(d);
  const double nu = base_.nu();
  const BarrierEval in = base_.eval(x);
  const Matrix& h = in.hessian.mat();
  const Vector hx = h * x;
  const double gx = in.gradient.dot(x);

  Vector grad(d + 1);
  grad.head(d) = (kLiftWeight / b) * in.gradient;
  grad(d) = -kLiftWeight * (gx + 2.0 * nu) / b;

  const double c = kLiftWeight / (b * b);
  Matrix hess(d + 1, d + 1);
  hess.topLeftCorner(d, d) = c * h;
  const Vector cross = -c * (hx + in.gradient);
  hess.topRightCorner(d, 1) = cross;
  hess.bottomLeftCorner(1, d) = cross.transpose();
  hess(d, d) = c * (x.dot(hx) + 2.0 * gx + 2.0 * nu);

  const double value = kLiftWeight * (in.value - 2.0 * nu * std::log(b));
  return {value, grad, SymMatrix(hess)};
}

double NormalBarrier::value(const Vector& z) const {
  const Eigen::Index d = base_.dim();
  const Vector x = dehomogenize(z, d);
  return kLiftWeight * (base_.value(x) - 2.0 * base_.nu() * std::log(z(d)));
}

Vector NormalBarrier::gradient(const Vector& z) const { return eval(z).gradient; }

SymMatrix NormalBarrier::hessian(const Vector& z) const { return eval(z).hessian; }

Vector lift_point(const Vector& x) {
  Vector z(x.size() + 1);
  z.head(x.size()) = x;
  z(x.size()) = 1.0;
  return z;
}

double minkowski(const Domain& domain, const Vector& pole, const Vector& y) {
  const Membership pm = domain.contains(pole);
  if (!pm.strictly_interior) {
    throw DomainViolation("minkowski: pole is not strictly interior", pm.slack);
  }
  const Vector dir = y - pole;
  if (dir.norm() == 0.0) return 0.0;
  // Membership of pole + dir / t is monotone in t; bisect on its sign.
  auto sign = [&](double t) { return domain.contains(pole + dir / t).feasible ? 1.0 : -1.0; };
  if (sign(1.0) < 0.0) {
    // y outside X; the gauge exceeds one. Expand the bracket.
    double hi = 2.0;
    while (sign(hi) < 0.0) hi *= 2.0;
    return bisect_root(sign, 1e-300, hi, 1e-10);
  }
  return bisect_root(sign, 0.0 + 1e-300, 1.0, 1e-10);
}

}  // namespace curvbco
