#include "asmr/optimize.hpp"

#include <cmath>
#include <limits>

namespace asmr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kArmijoC1 = 1e-4;
constexpr double kMinStep = 1e-16;

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void set_identity(std::vector<double>& h, std::size_t n) {
  std::fill(h.begin(), h.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) h[i * n + i] = 1.0;
}

}  // namespace

std::vector<double> fd_gradient(const Objective& f, std::span<const double> x,
                                double step, long* eval_count) {
  std::vector<double> grad(x.size());
  std::vector<double> probe(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double h = step * std::max(1.0, std::fabs(x[i]));
    double orig = probe[i];
    probe[i] = orig + h;
    double fp = f(probe);
    probe[i] = orig - h;
    double fm = f(probe);
    probe[i] = orig;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  if (eval_count) *eval_count += 2 * static_cast<long>(x.size());
  return grad;
}

MinimizeResult minimize_bfgs(const Objective& f, std::vector<double> x0,
                             const MinimizeOptions& options) {
  const std::size_t n = x0.size();
  MinimizeResult res;
  res.x = std::move(x0);

  double fx = f(res.x);
  res.function_evals = 1;
  if (!std::isfinite(fx)) {
    res.value = kInf;
    return res;
  }

  if (n == 0) {
    res.value = fx;
    res.converged = true;
    return res;
  }

  std::vector<double> hess_inv(n * n);
  set_identity(hess_inv, n);
  std::vector<double> grad =
      fd_gradient(f, res.x, options.fd_step, &res.function_evals);
  std::vector<double> dir(n), x_new(n), grad_new(n), s(n), y(n), hy(n);

  bool identity = true;
  for (; res.iterations < options.max_iterations; ++res.iterations) {
    if (norm2(grad) <= options.grad_tol) {
      res.converged = true;
      break;
    }

    // Search direction d = -H g; fall back to steepest descent when the
    // quasi-Newton direction is not a descent direction.
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc -= hess_inv[i * n + j] * grad[j];
      dir[i] = acc;
    }
    double slope = dot(grad, dir);
    if (!(slope < 0.0)) {
      set_identity(hess_inv, n);
      identity = true;
      for (std::size_t i = 0; i < n; ++i) dir[i] = -grad[i];
      slope = -dot(grad, grad);
      if (!(slope < 0.0)) {
        res.converged = true;
        break;
      }
    }

    // Backtracking Armijo line search.
    double alpha = 1.0;
    double f_new = kInf;
    bool accepted = false;
    while (alpha >= kMinStep) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = res.x[i] + alpha * dir[i];
      f_new = f(x_new);
      ++res.function_evals;
      if (std::isfinite(f_new) && f_new <= fx + kArmijoC1 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (identity) break;  // no progress possible along steepest descent
      set_identity(hess_inv, n);
      identity = true;
      continue;
    }

    grad_new = fd_gradient(f, x_new, options.fd_step, &res.function_evals);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - res.x[i];
      y[i] = grad_new[i] - grad[i];
    }
    double sy = dot(s, y);
    if (std::isfinite(sy) && sy > 1e-12 * norm2(s) * norm2(y)) {
      // Inverse BFGS update: H <- (I - r s y')H(I - r y s') + r s s'.
      double rho = 1.0 / sy;
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += hess_inv[i * n + j] * y[j];
        hy[i] = acc;
      }
      double yhy = dot(y, hy);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          hess_inv[i * n + j] += -rho * (s[i] * hy[j] + hy[i] * s[j]) +
                                 (rho * rho * yhy + rho) * s[i] * s[j];
      identity = false;
    }

    res.x = x_new;
    grad = grad_new;
    fx = f_new;
  }

  res.value = fx;
  return res;
}

}  // namespace asmr
