#pragma once

#include <functional>

#include "ikfom/manifold.hpp"

namespace ikfom {

/// Empty measurement context for models whose measurement does not vary.
struct NoContext {};

/// A system in canonical form
///   x_{k+1} = x_k [+] (dt f(x_k, u_k, w_k)),   z = h(x, v),
/// together with its four system-specific partial differentials.
/// Measurements live in R^m; the per-update `Context` carries whatever the
/// measurement depends on (e.g. the features seen in one scan).
template <class Context = NoContext>
struct SystemModel {
  Manifold state = Manifold::euclidean(1);
  double dt = 0.0;

  std::function<Vec(const StatePoint& x, const Vec& u, const Vec& w)> f;
  std::function<Mat(const StatePoint& x, const Vec& u)> df_dx;  // l x n
  std::function<Mat(const StatePoint& x, const Vec& u)> df_dw;  // l x q
  Mat Q;                                                         // q x q

  std::function<Vec(const StatePoint& x, const Vec& v, const Context& ctx)> h;
  std::function<Mat(const StatePoint& x, const Context& ctx)> dh_dx;  // m x n
  std::function<Mat(const StatePoint& x, const Context& ctx)> dh_dv;  // m x p
  std::function<Mat(const Context& ctx)> R;                           // p x p

  int noise_dim() const { return static_cast<int>(Q.rows()); }
};

}  // namespace ikfom
