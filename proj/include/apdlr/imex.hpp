#pragma once

// Double Butcher tableaux and a generic IMEX Runge-Kutta advance.

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "apdlr/mesh.hpp"

namespace apdlr {

enum class Stepper { backward_euler, ars222 };

struct ImexTableau {
  Matrix explicit_a;  // strictly lower triangular
  Matrix implicit_a;  // lower triangular
  Vector explicit_w, implicit_w;

  int stages() const { return int(explicit_w.size()); }

  Vector explicit_c() const { return explicit_a.rowwise().sum(); }
  Vector implicit_c() const { return implicit_a.rowwise().sum(); }

  /// Both weight vectors equal the last tableau rows: the update is the last stage.
  bool stiffly_accurate() const {
    const int s = stages();
    return explicit_w == explicit_a.row(s - 1).transpose() && implicit_w == implicit_a.row(s - 1).transpose();
  }

  /// Forward-backward Euler written as a two-stage IMEX pair.
  static ImexTableau forward_backward_euler() {
    ImexTableau t;
    t.explicit_a = Matrix::Zero(2, 2);
    t.explicit_a(1, 0) = 1.0;
    t.implicit_a = Matrix::Zero(2, 2);
    t.implicit_a(1, 1) = 1.0;
    t.explicit_w = Vector::Zero(2);
    t.explicit_w[0] = 1.0;
    t.implicit_w = Vector::Zero(2);
    t.implicit_w[1] = 1.0;
    return t;
  }

  /// ARS(2,2,2): gamma = 1 - sqrt(2)/2, delta = 1 - 1/(2 gamma).
  static ImexTableau ars222() {
    const double g = 1.0 - std::sqrt(2.0) / 2.0;
    const double d = 1.0 - 1.0 / (2.0 * g);
    ImexTableau t;
    t.explicit_a = Matrix::Zero(3, 3);
    t.explicit_a(1, 0) = g;
    t.explicit_a(2, 0) = d;
    t.explicit_a(2, 1) = 1.0 - d;
    t.implicit_a = Matrix::Zero(3, 3);
    t.implicit_a(1, 1) = g;
    t.implicit_a(2, 1) = 1.0 - g;
    t.implicit_a(2, 2) = g;
    t.explicit_w = t.explicit_a.row(2).transpose();
    t.implicit_w = t.implicit_a.row(2).transpose();
    return t;
  }

  static const ImexTableau& get(Stepper s) {
    static const ImexTableau fbe = forward_backward_euler();
    static const ImexTableau ars = ars222();
    return s == Stepper::ars222 ? ars : fbe;
  }
};

/// Advances y' = E(y, t) - I(y) over [t0, t0 + h].
///
/// explicit_rhs(y, t) returns E(y, t); solve(alpha, rhs) returns the y with
/// y + alpha * I(y) = rhs. Implicit stage values h*I(Y_p) are recovered from the
/// stage equation instead of applying the stiff operator directly, so no product
/// with 1/eps^2 is ever formed.
template <class State, class ExplicitFn, class SolveFn>
State imex_advance(const State& y0, double t0, double h, const ImexTableau& tab, ExplicitFn&& explicit_rhs,
                   SolveFn&& solve) {
  const int s = tab.stages();
  const Vector ce = tab.explicit_c();
  const bool last_stage = tab.stiffly_accurate();
  std::vector<State> e(s), z(s);  // h*E(Y_p), h*I(Y_p)
  State y = y0;
  for (int p = 0; p < s; ++p) {
    State rhs = y0;
    for (int q = 0; q < p; ++q) {
      if (tab.explicit_a(p, q) != 0.0) rhs += tab.explicit_a(p, q) * e[q];
      if (tab.implicit_a(p, q) != 0.0) rhs -= tab.implicit_a(p, q) * z[q];
    }
    const double app = tab.implicit_a(p, p);
    if (app != 0.0) {
      y = solve(h * app, rhs);
      z[p] = (rhs - y) / app;
    } else {
      y = std::move(rhs);
    }
    bool need_e = !last_stage ? tab.explicit_w[p] != 0.0 : false;
    for (int q = p + 1; q < s; ++q) need_e = need_e || tab.explicit_a(q, p) != 0.0;
    if (need_e) {
      e[p] = h * explicit_rhs(y, t0 + ce[p] * h);
    }
  }
  if (last_stage) return y;
  State out = y0;
  for (int p = 0; p < s; ++p) {
    if (tab.explicit_w[p] != 0.0) out += tab.explicit_w[p] * e[p];
    if (tab.implicit_w[p] != 0.0) out -= tab.implicit_w[p] * z[p];
  }
  return out;
}

}  // namespace apdlr
