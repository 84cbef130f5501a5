#pragma once

#include "curvbco/numerics.hpp"
#include "curvbco/rng.hpp"

#include <vector>

namespace curvbco {

enum class DomainKind { kBall, kPolytope };

struct Membership {
  bool feasible;           // slack >= 0
  bool strictly_interior;  // slack above the interior tolerance
  double slack;            // r^2 - |x|^2, or min_i (b_i - a_i^T x)
};

/// Compact convex feasible set containing the origin in its interior: a
/// Euclidean ball or a bounded polytope {x : Ax <= b}.
class Domain {
 public:
  static Domain ball(Eigen::Index dim, double radius);
  /// Throws ConfigError if the origin is not interior or the set is unbounded.
  static Domain polytope(Matrix a, Vector b);

  DomainKind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }
  double radius() const { return radius_; }
  const Matrix& a() const { return a_; }
  const Vector& b() const { return b_; }
  /// Polytope vertices (empty for a ball).
  const std::vector<Vector>& vertices() const { return vertices_; }

  double diameter() const { return diameter_; }
  /// max_{x in X} |x|_2.
  double max_norm() const { return max_norm_; }

  Membership contains(const Vector& x) const;

  /// Uniform draw from the domain.
  Vector sample(Rng& rng) const;
  /// Euclidean projection onto the domain.
  Vector project(const Vector& x) const;

 private:
  Domain() = default;

  DomainKind kind_ = DomainKind::kBall;
  Eigen::Index dim_ = 0;
  double radius_ = 0.0;
  Matrix a_;
  Vector b_;
  std::vector<Vector> vertices_;
  Vector box_lo_, box_hi_;
  double diameter_ = 0.0;
  double max_norm_ = 0.0;
};

/// Vertices of {x : Ax <= b} by enumerating d-subsets of active rows.
std::vector<Vector> enumerate_vertices(const Matrix& a, const Vector& b);

struct BarrierEval {
  double value;
  Vector gradient;
  SymMatrix hessian;
};

/// nu-self-concordant barrier psi on a Domain:
///   ball:     psi(x) = -ln(r^2 - |x|^2),       nu = 1
///   polytope: psi(x) = -sum_i ln(b_i - a_i^T x), nu = m
class Barrier {
 public:
  static Barrier ball(Eigen::Index dim, double radius);
  static Barrier polytope(Matrix a, Vector b);
  static Barrier for_domain(const Domain& domain);

  const Domain& domain() const { return domain_; }
  double nu() const { return nu_; }
  Eigen::Index dim() const { return domain_.dim(); }

  /// Exact value, gradient and Hessian. Throws DomainViolation (carrying the
  /// slack) unless x is strictly interior.
  BarrierEval eval(const Vector& x) const;
  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  SymMatrix hessian(const Vector& x) const;

  /// Copy with a different declared parameter. Only meant for falsification
  /// controls; nothing else changes.
  Barrier with_declared_nu(double nu) const;

 private:
  Barrier(Domain domain, double nu) : domain_(std::move(domain)), nu_(nu) {}
  void require_interior(const Vector& x) const;

  Domain domain_;
  double nu_;
};

/// Weight of the lift: Psi(x, b) = 400 (psi(x/b) - 2 nu ln b).
inline constexpr double kLiftWeight = 400.0;

/// Logarithmically homogeneous barrier on the conic hull
/// K = {(x, b) : b > 0, x/b in X}, with parameter nu_bar = 800 nu.
class NormalBarrier {
 public:
  explicit NormalBarrier(Barrier base);

  const Barrier& base() const { return base_; }
  double nu() const { return base_.nu(); }
  double nu_bar() const { return 2.0 * kLiftWeight * base_.nu(); }
  /// Lifted dimension d + 1.
  Eigen::Index dim() const { return base_.dim() + 1; }

  /// Throws DomainViolation when b <= 0 or x/b is not strictly interior.
  BarrierEval eval(const Vector& z) const;
  double value(const Vector& z) const;
  Vector gradient(const Vector& z) const;
  SymMatrix hessian(const Vector& z) const;

 private:
  Barrier base_;
};

inline NormalBarrier lift_normal(Barrier barrier) { return NormalBarrier(std::move(barrier)); }

/// (x, 1).
Vector lift_point(const Vector& x);

/// Minkowski gauge pi_pole(y) = inf{t >= 0 : pole + (y - pole)/t in X},
/// found by bisection on t to width 1e-10. Throws DomainViolation if the
/// pole is not strictly interior.
double minkowski(const Domain& domain, const Vector& pole, const Vector& y);

}  // namespace curvbco
