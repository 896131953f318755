#pragma once

#include <cmath>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ikfom/errors.hpp"
#include "ikfom/so3.hpp"
#include "ikfom/sphere.hpp"

namespace ikfom {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class Kind { Euclidean, SO3, Sphere2, Compound };

/// One primitive factor of a (possibly compound) manifold, with its slice
/// offsets into the tangent, control and representation vectors.
struct Leaf {
  Kind kind;
  double radius;
  int n, l, rep;
  int t_off, c_off, r_off;
};

/// An element of a manifold, stored in its embedded representation
/// (R^n: n values, SO(3): 9 values row-major, S^2(r): 3 values).
struct StatePoint {
  Vec rep;

  StatePoint() = default;
  explicit StatePoint(Vec v) : rep(std::move(v)) {}
  Eigen::Index size() const { return rep.size(); }
  bool operator==(const StatePoint&) const = default;
};

inline Mat3 rot_from_rep(const Eigen::Ref<const Vec>& r) {
  Mat3 R;
  R << r(0), r(1), r(2), r(3), r(4), r(5), r(6), r(7), r(8);
  return R;
}

inline void rot_to_rep(const Mat3& R, Eigen::Ref<Vec> r) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(3 * i + j) = R(i, j);
}

class Manifold {
 public:
  static Manifold euclidean(int n) {
    if (n <= 0) throw ContractViolation("euclidean: dimension must be positive");
    return Manifold(Kind::Euclidean, {Leaf{Kind::Euclidean, 0.0, n, n, n, 0, 0, 0}}, {});
  }
  static Manifold so3() { return Manifold(Kind::SO3, {Leaf{Kind::SO3, 0.0, 3, 3, 9, 0, 0, 0}}, {}); }
  static Manifold sphere2(double r) {
    if (!(r > 0.0) || !std::isfinite(r)) throw ContractViolation("sphere2: radius must be positive");
    return Manifold(Kind::Sphere2, {Leaf{Kind::Sphere2, r, 2, 3, 3, 0, 0, 0}}, {});
  }
  static Manifold compound(std::vector<Manifold> children) {
    if (children.empty()) throw ContractViolation("compound: empty child list");
    std::vector<Leaf> leaves;
    int t = 0, c = 0, r = 0;
    for (const auto& ch : children) {
      for (Leaf lf : ch.leaves_) {
        lf.t_off += t;
        lf.c_off += c;
        lf.r_off += r;
        leaves.push_back(lf);
      }
      t += ch.n_;
      c += ch.l_;
      r += ch.rep_;
    }
    return Manifold(Kind::Compound, std::move(leaves), std::move(children));
  }
  static Manifold compound(std::initializer_list<Manifold> children) {
    return compound(std::vector<Manifold>(children));
  }

  Kind kind() const { return kind_; }
  int tangent_dim() const { return n_; }
  int control_dim() const { return l_; }
  int rep_dim() const { return rep_; }
  double radius() const { return kind_ == Kind::Sphere2 ? leaves_.front().radius : 0.0; }
  const std::vector<Leaf>& leaves() const { return leaves_; }
  const std::vector<Manifold>& children() const { return children_; }

  /// Whether x lies on the manifold within tol (orthonormality / radius).
  bool contains(const StatePoint& x, double tol = 1e-9) const {
    if (x.size() != rep_ || !x.rep.allFinite()) return false;
    for (const auto& lf : leaves_) {
      const auto seg = x.rep.segment(lf.r_off, lf.rep);
      if (lf.kind == Kind::SO3) {
        const Mat3 R = rot_from_rep(seg);
        if (rotation_error(R) > tol || std::abs(R.determinant() - 1.0) > tol) return false;
      } else if (lf.kind == Kind::Sphere2) {
        if (std::abs(seg.norm() - lf.radius) > tol * lf.radius) return false;
      }
    }
    return true;
  }

  void require(const StatePoint& x, const char* op, double tol = 1e-6) const {
    if (!contains(x, tol)) throw ContractViolation(std::string(op) + ": point not on manifold");
  }
  void require_tangent(const Vec& u, const char* op) const {
    if (u.size() != n_ || !u.allFinite())
      throw ContractViolation(std::string(op) + ": tangent vector has wrong size or is not finite");
  }
  void require_control(const Vec& v, const char* op) const {
    if (v.size() != l_ || !v.allFinite())
      throw ContractViolation(std::string(op) + ": control vector has wrong size or is not finite");
  }

 private:
  Manifold(Kind k, std::vector<Leaf> leaves, std::vector<Manifold> children)
      : kind_(k), leaves_(std::move(leaves)), children_(std::move(children)) {
    for (const auto& lf : leaves_) {
      n_ += lf.n;
      l_ += lf.l;
      rep_ += lf.rep;
    }
  }

  Kind kind_;
  std::vector<Leaf> leaves_;
  std::vector<Manifold> children_;
  int n_ = 0, l_ = 0, rep_ = 0;
};

inline StatePoint boxplus(const Manifold& m, const StatePoint& x, const Vec& u) {
  m.require(x, "boxplus");
  m.require_tangent(u, "boxplus");
  StatePoint y = x;
  for (const auto& lf : m.leaves()) {
    auto out = y.rep.segment(lf.r_off, lf.rep);
    const auto du = u.segment(lf.t_off, lf.n);
    switch (lf.kind) {
      case Kind::Euclidean: out += du; break;
      case Kind::SO3:
        if (!du.isZero(0.0)) rot_to_rep(so3_normalize(rot_from_rep(out) * so3_exp(du)), out);
        break;
      case Kind::Sphere2:
        if (!du.isZero(0.0)) out = sphere_boxplus(Vec3(out), Vec2(du));
        break;
      case Kind::Compound: break;
    }
  }
  return y;
}

inline StatePoint oplus(const Manifold& m, const StatePoint& x, const Vec& v) {
  m.require(x, "oplus");
  m.require_control(v, "oplus");
  StatePoint y = x;
  for (const auto& lf : m.leaves()) {
    auto out = y.rep.segment(lf.r_off, lf.rep);
    const auto dv = v.segment(lf.c_off, lf.l);
    switch (lf.kind) {
      case Kind::Euclidean: out += dv; break;
      case Kind::SO3:
        if (!dv.isZero(0.0)) rot_to_rep(so3_normalize(rot_from_rep(out) * so3_exp(dv)), out);
        break;
      case Kind::Sphere2:
        if (!dv.isZero(0.0)) out = sphere_oplus(Vec3(out), Vec3(dv));
        break;
      case Kind::Compound: break;
    }
  }
  return y;
}

/// y [-] x, expressed in the chart at x.
inline Vec boxminus(const Manifold& m, const StatePoint& y, const StatePoint& x) {
  m.require(x, "boxminus");
  m.require(y, "boxminus");
  Vec d(m.tangent_dim());
  for (const auto& lf : m.leaves()) {
    const auto xs = x.rep.segment(lf.r_off, lf.rep);
    const auto ys = y.rep.segment(lf.r_off, lf.rep);
    auto out = d.segment(lf.t_off, lf.n);
    switch (lf.kind) {
      case Kind::Euclidean: out = ys - xs; break;
      case Kind::SO3: out = so3_log(rot_from_rep(xs).transpose() * rot_from_rep(ys)); break;
      case Kind::Sphere2: out = sphere_boxminus(Vec3(ys), Vec3(xs)); break;
      case Kind::Compound: break;
    }
  }
  return d;
}

namespace detail {

// Both differentials of ((x [+] u) [+] v) [-] y with y = (x [+] u) [+] v, one leaf at a time.
template <bool WantU>
Mat operator_differential(const Manifold& m, const StatePoint& x, const Vec& u, const Vec& v) {
  m.require(x, WantU ? "diff_u" : "diff_v");
  m.require_tangent(u, WantU ? "diff_u" : "diff_v");
  m.require_control(v, WantU ? "diff_u" : "diff_v");
  const int cols = WantU ? m.tangent_dim() : m.control_dim();
  Mat D = Mat::Zero(m.tangent_dim(), cols);
  for (const auto& lf : m.leaves()) {
    const int col_off = WantU ? lf.t_off : lf.c_off;
    const int ncols = WantU ? lf.n : lf.l;
    auto blk = D.block(lf.t_off, col_off, lf.n, ncols);
    const auto us = u.segment(lf.t_off, lf.n);
    const auto vs = v.segment(lf.c_off, lf.l);
    if (lf.kind == Kind::Euclidean) {
      blk.setIdentity();
      continue;
    }
    if (lf.kind == Kind::SO3) {
      const Vec3 uu(us), vv(vs);
      if (WantU)
        blk = so3_exp(-vv) * mat_A(uu).transpose();
      else
        blk = mat_A(vv).transpose();
      continue;
    }
    if (lf.kind == Kind::Sphere2) {
      const Vec3 xs(x.rep.segment(lf.r_off, 3));
      const Vec2 uu(us);
      const Vec3 vv(vs);
      if (WantU && uu.isZero(0.0) && vv.isZero(0.0)) {
        blk.setIdentity();
        continue;
      }
      const Vec3 z = sphere_boxplus(xs, uu);
      const Mat3 Rv = so3_exp(vv);
      const Vec3 y = sphere_oplus(z, vv);
      const Mat23 N = sphere_N(y, y);
      if (WantU)
        blk = N * Rv * sphere_M(xs, uu);
      else
        blk = -N * Rv * skew(z) * mat_A(vv).transpose();
    }
  }
  return D;
}

}  // namespace detail

/// d(((x [+] u) [+] v) [-] y)/du evaluated at y = (x [+] u) [+] v. Block-diagonal.
inline Mat diff_u(const Manifold& m, const StatePoint& x, const Vec& u, const Vec& v) {
  return detail::operator_differential<true>(m, x, u, v);
}

/// d(((x [+] u) [+] v) [-] y)/dv evaluated at y = (x [+] u) [+] v. Block-diagonal.
inline Mat diff_v(const Manifold& m, const StatePoint& x, const Vec& u, const Vec& v) {
  return detail::operator_differential<false>(m, x, u, v);
}

inline Vec zero_tangent(const Manifold& m) { return Vec::Zero(m.tangent_dim()); }
inline Vec zero_control(const Manifold& m) { return Vec::Zero(m.control_dim()); }

/// Identity-like reference point: zeros, identity rotations, r * e3 on spheres.
inline StatePoint origin(const Manifold& m) {
  StatePoint x(Vec::Zero(m.rep_dim()));
  for (const auto& lf : m.leaves()) {
    if (lf.kind == Kind::SO3) rot_to_rep(Mat3::Identity(), x.rep.segment(lf.r_off, 9));
    if (lf.kind == Kind::Sphere2) x.rep(lf.r_off + 2) = lf.radius;
  }
  return x;
}

}  // namespace ikfom
