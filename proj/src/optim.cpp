#include "optim.hpp"

#include <gsl/gsl_multimin.h>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

namespace geoforge::optim {

namespace {

struct Functor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  const Residuals* r = nullptr;
  int n = 0;
  int m = 0;
  int inputs() const { return n; }
  int values() const { return m; }
  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& fvec) const {
    fvec = (*r)(x);
    return 0;
  }
};

double gsl_trampoline(const gsl_vector* v, void* params) {
  const auto* f = static_cast<const Objective*>(params);
  Eigen::VectorXd x(v->size);
  for (std::size_t i = 0; i < v->size; ++i) x(i) = gsl_vector_get(v, i);
  return (*f)(x);
}

}  // namespace

LsqResult least_squares(const Residuals& r, int values, const Eigen::VectorXd& x0,
                        int max_evals, double ftol) {
  Functor fn;
  fn.r = &r;
  fn.n = static_cast<int>(x0.size());
  fn.m = values;
  Eigen::NumericalDiff<Functor, Eigen::Central> diff(fn);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<Functor, Eigen::Central>> lm(diff);
  lm.parameters.maxfev = max_evals;
  lm.parameters.xtol = 1e-14;
  lm.parameters.ftol = ftol;
  Eigen::VectorXd x = x0;
  const auto status = lm.minimize(x);
  LsqResult out;
  out.x = x;
  out.cost = 0.5 * r(x).squaredNorm();
  out.converged = status != Eigen::LevenbergMarquardtSpace::ImproperInputParameters &&
                  status != Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation;
  return out;
}

MinResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                      int max_iters, double size_tol) {
  const std::size_t n = static_cast<std::size_t>(x0.size());
  gsl_multimin_function fn{&gsl_trampoline, n, const_cast<Objective*>(&f)};
  gsl_vector* x = gsl_vector_alloc(n);
  gsl_vector* ss = gsl_vector_alloc(n);
  for (std::size_t i = 0; i < n; ++i) {
    gsl_vector_set(x, i, x0(i));
    gsl_vector_set(ss, i, step(i));
  }
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
  gsl_multimin_fminimizer_set(s, &fn, x, ss);
  MinResult out;
  for (int it = 0; it < max_iters; ++it) {
    if (gsl_multimin_fminimizer_iterate(s)) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), size_tol) == GSL_SUCCESS) {
      out.converged = true;
      break;
    }
  }
  out.x.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) out.x(i) = gsl_vector_get(s->x, i);
  out.value = s->fval;
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(ss);
  gsl_vector_free(x);
  return out;
}

}  // namespace geoforge::optim
