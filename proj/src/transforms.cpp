#include "alphait/transforms.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include "alphait/optimize.hpp"

namespace alphait {

TransformBasis::TransformBasis(int dimension) {
  if (dimension < 2) {
    throw std::invalid_argument("TransformBasis: dimension must be >= 2");
  }
  helmert_ = Eigen::MatrixXd::Zero(dimension - 1, dimension);
  for (int i = 1; i < dimension; ++i) {
    const double norm = 1.0 / std::sqrt(static_cast<double>(i) * (i + 1));
    for (int j = 0; j < i; ++j) helmert_(i - 1, j) = norm;
    helmert_(i - 1, i) = -static_cast<double>(i) * norm;
  }
  centering_ =
      Eigen::MatrixXd::Identity(dimension, dimension) -
      Eigen::MatrixXd::Constant(dimension, dimension, 1.0 / dimension);
}

const TransformBasis& transform_basis(int dimension) {
  thread_local std::map<int, TransformBasis> cache;
  auto it = cache.find(dimension);
  if (it == cache.end()) {
    it = cache.emplace(dimension, TransformBasis(dimension)).first;
  }
  return it->second;
}

namespace {

Eigen::VectorXd logs_or_throw(const Composition& x, const char* who) {
  Eigen::VectorXd l(x.dimension());
  for (int i = 0; i < x.dimension(); ++i) {
    if (x[i] == 0.0) {
      throw std::domain_error(std::string(who) + ": part " + std::to_string(i) +
                              " is zero, transform undefined on the border");
    }
    l[i] = std::log(x[i]);
  }
  return l;
}

Eigen::VectorXd power_parts(const Composition& x, double alpha) {
  Eigen::VectorXd p(x.dimension());
  for (int i = 0; i < x.dimension(); ++i) p[i] = std::pow(x[i], alpha);
  return p;
}

void check_alpha(double alpha, const char* who) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument(std::string(who) +
                                ": alpha must be positive and finite");
  }
}

}  // namespace

Eigen::VectorXd clr(const Composition& x) {
  Eigen::VectorXd l = logs_or_throw(x, "clr");
  l.array() -= l.mean();
  return l;
}

Eigen::VectorXd ilr(const Composition& x) {
  return transform_basis(x.dimension()).helmert() * clr(x);
}

Composition ilr_inverse(const Eigen::VectorXd& z) {
  const int d = static_cast<int>(z.size()) + 1;
  Eigen::VectorXd l = transform_basis(d).helmert().transpose() * z;
  const Eigen::VectorXd e = (l.array() - l.maxCoeff()).exp();
  return Composition(e / e.sum());
}

EuclideanScores alpha_ct(const Composition& x, double alpha) {
  check_alpha(alpha, "alpha_ct");
  if (alpha < kIlrSwitchAlpha) {
    if (!x.strictly_positive()) {
      throw std::domain_error(
          "alpha_ct: alpha below the CLR switch threshold with a zero part; "
          "the limit is undefined on the border");
    }
    return {alpha, clr(x)};
  }
  Eigen::VectorXd u = power_parts(x, alpha);
  u.array() -= u.mean();
  return {alpha, u / alpha};
}

EuclideanScores alpha_it(const Composition& x, double alpha) {
  check_alpha(alpha, "alpha_it");
  if (alpha < kIlrSwitchAlpha) {
    if (!x.strictly_positive()) {
      throw std::domain_error(
          "alpha_it: alpha below the ILR switch threshold with a zero part; "
          "the limit is undefined on the border");
    }
    return {alpha, ilr(x)};
  }
  const auto& basis = transform_basis(x.dimension());
  return {alpha, basis.helmert() * power_parts(x, alpha) / alpha};
}

namespace {

// (y^alpha - mean(y^alpha)) / alpha, via expm1 so that small alpha stays
// exact; zero parts contribute -1/alpha before centering.
Eigen::VectorXd boxcox_centered(const Eigen::VectorXd& parts, double alpha) {
  Eigen::VectorXd b(parts.size());
  for (Eigen::Index i = 0; i < parts.size(); ++i) {
    b[i] = parts[i] > 0.0 ? std::expm1(alpha * std::log(parts[i])) / alpha
                          : -1.0 / alpha;
  }
  b.array() -= b.mean();
  return b;
}

double inverse_objective(const Eigen::VectorXd& v, const Eigen::VectorXd& parts,
                         double alpha) {
  return (v - boxcox_centered(parts, alpha)).norm();
}

// Softmax over the free logits with the last logit pinned to 0.
Eigen::VectorXd softmax_embed(const Eigen::VectorXd& w) {
  const int d = static_cast<int>(w.size()) + 1;
  Eigen::VectorXd e(d);
  const double m = std::max(0.0, w.maxCoeff());
  for (int i = 0; i < d - 1; ++i) e[i] = std::exp(w[i] - m);
  e[d - 1] = std::exp(-m);
  return e / e.sum();
}

// Exact inverse when the target lies inside the codomain: the parts are
// (alpha*v_i + m)^(1/alpha) for the unique m making them sum to one. If even
// the smallest admissible m oversaturates the sum there is no interior
// solution and the minimum sits on the border.
struct InteriorSolve {
  bool feasible = false;
  Eigen::VectorXd parts;
};

InteriorSolve solve_interior(const Eigen::VectorXd& v, double alpha) {
  const int d = static_cast<int>(v.size());
  const double mlo = -(alpha * v.minCoeff());
  auto total = [&](double m) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
      const double base = alpha * v[i] + m;
      if (base > 0.0) s += std::exp(std::log(base) / alpha);
    }
    return s;
  };

  InteriorSolve out;
  if (total(mlo) >= 1.0) {
    Eigen::VectorXd parts(d);
    for (int i = 0; i < d; ++i) {
      const double base = alpha * v[i] + mlo;
      parts[i] = base > 0.0 ? std::exp(std::log(base) / alpha) : 0.0;
    }
    out.parts = parts / parts.sum();
    return out;
  }

  double step = std::max(std::pow(static_cast<double>(d), -alpha), 1e-12);
  double hi = mlo + step;
  for (int k = 0; k < 300 && total(hi) < 1.0; ++k) {
    step *= 2.0;
    hi = mlo + step;
  }
  double lo = mlo;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (total(mid) < 1.0 ? lo : hi) = mid;
  }
  const double m = 0.5 * (lo + hi);
  Eigen::VectorXd parts(d);
  for (int i = 0; i < d; ++i) {
    const double base = alpha * v[i] + m;
    parts[i] = base > 0.0 ? std::exp(std::log(base) / alpha) : 0.0;
  }
  out.feasible = true;
  out.parts = parts / parts.sum();
  return out;
}

Eigen::VectorXd logits_of(const Eigen::VectorXd& parts) {
  const int d = static_cast<int>(parts.size());
  Eigen::VectorXd w(d - 1);
  const double ref = std::log(std::max(parts[d - 1], 1e-60));
  for (int i = 0; i < d - 1; ++i) {
    w[i] = std::log(std::max(parts[i], 1e-60)) - ref;
  }
  return w.cwiseMax(-40.0).cwiseMin(40.0);
}

}  // namespace

InverseResult alpha_it_inverse(const Eigen::VectorXd& z, double alpha,
                               std::mt19937_64& rng) {
  check_alpha(alpha, "alpha_it_inverse");
  if (z.size() < 1 || !z.allFinite()) {
    throw std::invalid_argument(
        "alpha_it_inverse: coordinates must be finite and non-empty");
  }
  const int d = static_cast<int>(z.size()) + 1;
  const auto& basis = transform_basis(d);
  const Eigen::VectorXd v = basis.helmert().transpose() * z;

  Eigen::VectorXd best_parts;
  double best_q = std::numeric_limits<double>::infinity();
  bool best_converged = false;
  auto consider = [&](const Eigen::VectorXd& parts, bool converged) {
    const double q = inverse_objective(v, parts, alpha);
    if (q < best_q) {
      best_q = q;
      best_parts = parts;
      best_converged = converged;
      return true;
    }
    return false;
  };

  const InteriorSolve interior = solve_interior(v, alpha);
  consider(interior.parts, interior.feasible);

  const double q_tol = 1e-12;
  const int max_iter = 10 * (d - 1) * (d - 1);
  auto objective_w = [&](const Eigen::VectorXd& w) {
    return inverse_objective(v, softmax_embed(w), alpha);
  };
  if (best_q > q_tol) {
    const NelderMeadResult nm = nelder_mead(objective_w, logits_of(best_parts),
                                            0.5, q_tol, max_iter);
    consider(softmax_embed(nm.x), nm.converged);
    if (best_q > q_tol) {
      std::normal_distribution<double> normal(0.0, 2.0);
      for (int r = 0; r < 3; ++r) {
        Eigen::VectorXd w0(d - 1);
        for (int i = 0; i < d - 1; ++i) w0[i] = normal(rng);
        const NelderMeadResult again =
            nelder_mead(objective_w, w0, 0.5, q_tol, max_iter);
        consider(softmax_embed(again.x), again.converged);
      }
    }
  }

  // Border refinement: softmax never reaches an exact zero, so snap
  // near-zero parts and re-minimize over the remaining face.
  for (int round = 0; round < d; ++round) {
    if (best_q <= 1e-10) break;
    Eigen::VectorXd snapped = best_parts;
    bool any_new = false;
    for (int i = 0; i < d; ++i) {
      if (snapped[i] > 0.0 && snapped[i] < 1e-7) {
        snapped[i] = 0.0;
        any_new = true;
      }
    }
    if (!any_new) break;
    std::vector<int> pos;
    for (int i = 0; i < d; ++i)
      if (snapped[i] > 0.0) pos.push_back(i);
    if (pos.empty()) break;
    if (pos.size() == 1) {
      Eigen::VectorXd vertex = Eigen::VectorXd::Zero(d);
      vertex[pos[0]] = 1.0;
      consider(vertex, true);
      break;
    }
    const int sub_d = static_cast<int>(pos.size());
    Eigen::VectorXd sub(sub_d);
    for (int k = 0; k < sub_d; ++k) sub[k] = snapped[pos[k]];
    sub /= sub.sum();
    auto face_objective = [&](const Eigen::VectorXd& w) {
      const Eigen::VectorXd y = softmax_embed(w);
      Eigen::VectorXd full = Eigen::VectorXd::Zero(d);
      for (int k = 0; k < sub_d; ++k) full[pos[k]] = y[k];
      return inverse_objective(v, full, alpha);
    };
    const NelderMeadResult face = nelder_mead(
        face_objective, logits_of(sub), 0.5, q_tol, 10 * (sub_d - 1) * (sub_d - 1) + 10);
    const Eigen::VectorXd y = softmax_embed(face.x);
    Eigen::VectorXd full = Eigen::VectorXd::Zero(d);
    for (int k = 0; k < sub_d; ++k) full[pos[k]] = y[k];
    if (!consider(full, face.converged)) break;
  }

  // Final snap of optimizer dust so border solutions carry exact zeros.
  Eigen::VectorXd final_parts = best_parts;
  if (best_q > 1e-10) {
    for (int i = 0; i < d; ++i) {
      if (final_parts[i] < 1e-9) final_parts[i] = 0.0;
    }
    const double s = final_parts.sum();
    if (s > 0.0) {
      final_parts /= s;
      const double q = inverse_objective(v, final_parts, alpha);
      if (q <= best_q + 1e-12) {
        best_q = q;
      } else {
        final_parts = best_parts;
      }
    } else {
      final_parts = best_parts;
    }
  }

  return {Composition(final_parts), best_q, best_converged};
}

InverseResult alpha_it_inverse(const Eigen::VectorXd& z, double alpha) {
  std::mt19937_64 rng(0x5eedf00dULL);
  return alpha_it_inverse(z, alpha, rng);
}

double alpha_it_jacobian_logdet(const Composition& x, double alpha) {
  check_alpha(alpha, "alpha_it_jacobian_logdet");
  const int d = x.dimension();
  if (alpha < 1.0 && !x.strictly_positive()) {
    throw std::domain_error(
        "alpha_it_jacobian_logdet: zero part with alpha < 1, Jacobian "
        "undefined on the border");
  }
  const auto& h = transform_basis(d).helmert();
  Eigen::VectorXd xp(d);
  for (int i = 0; i < d; ++i) xp[i] = std::pow(x[i], alpha - 1.0);
  Eigen::MatrixXd jac(d - 1, d - 1);
  for (int i = 0; i < d - 1; ++i) {
    for (int j = 0; j < d - 1; ++j) {
      jac(i, j) = h(i, j) * xp[j] - h(i, d - 1) * xp[d - 1];
    }
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
  double logdet = 0.0;
  for (int i = 0; i < d - 1; ++i) {
    const double u = std::abs(lu.matrixLU()(i, i));
    if (u == 0.0 || !std::isfinite(u)) {
      return -std::numeric_limits<double>::infinity();
    }
    logdet += std::log(u);
  }
  return logdet;
}

Eigen::VectorXd tsagris_alpha(const Composition& x, double alpha) {
  if (alpha == 0.0) {
    throw std::invalid_argument("tsagris_alpha: alpha 0 is the ILR limit");
  }
  if (alpha < 0.0) {
    throw std::invalid_argument("tsagris_alpha: negative alpha not supported");
  }
  const int d = x.dimension();
  const Composition u = closure(power_parts(x, alpha));
  return (static_cast<double>(d) / alpha) *
         (transform_basis(d).helmert() * u.parts());
}

Eigen::VectorXd alr_boxcox(const Composition& x, double alpha) {
  if (alpha < 0.0 || !std::isfinite(alpha)) {
    throw std::invalid_argument("alr_boxcox: alpha must be >= 0 and finite");
  }
  const int d = x.dimension();
  if (x[d - 1] == 0.0) {
    throw std::domain_error("alr_boxcox: denominator part is zero");
  }
  const double log_ref = std::log(x[d - 1]);
  Eigen::VectorXd z(d - 1);
  for (int i = 0; i < d - 1; ++i) {
    if (x[i] == 0.0) {
      if (alpha == 0.0) {
        throw std::domain_error("alr_boxcox: part " + std::to_string(i) +
                                " is zero, log-ratio undefined");
      }
      z[i] = -1.0 / alpha;
    } else {
      const double log_ratio = std::log(x[i]) - log_ref;
      z[i] = alpha == 0.0 ? log_ratio : std::expm1(alpha * log_ratio) / alpha;
    }
  }
  return z;
}

}  // namespace alphait
