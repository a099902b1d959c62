#include "lscrit/oracle.hpp"

#include "lscrit/math_util.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace lscrit::oracle {

namespace {

using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;

struct SuffStats {
  double n = 0.0, sum = 0.0, sumsq = 0.0;
  double mean() const { return sum / n; }
};

SuffStats stats_of(const Dataset& data) {
  if (data.n() < 1) throw std::invalid_argument("oracle: empty dataset");
  if (data.output_dim() != 1 || data.has_inputs())
    throw std::invalid_argument("oracle: expects scalar observations without inputs");
  SuffStats s;
  s.n = data.n();
  for (int i = 0; i < data.n(); ++i) {
    s.sum += data.outputs(i, 0);
    s.sumsq += data.outputs(i, 0) * data.outputs(i, 0);
  }
  return s;
}

double total_loglik(const SuffStats& s, double theta) {
  return -0.5 * (s.sumsq - 2.0 * theta * s.sum + s.n * theta * theta) - 0.5 * s.n * kLogTwoPi;
}

double integrate(const std::function<double(double)>& f, double lo, double hi) {
  return Quad::integrate(f, lo, hi, 15, 1e-12);
}

// Posterior functional E[g(theta)] via quadrature of the raw tempered density
// exp(beta * loglik(theta)) * prior(theta); the integration window and the
// overflow shift are derived from data statistics only.
double expect_gaussian_prior(const SuffStats& s, double beta, double tau2,
                             const std::function<double(double)>& g) {
  const double tau = std::sqrt(tau2);
  const double xbar = s.mean();
  const double width = 12.0 * (tau + 1.0 / std::sqrt(beta * s.n)) + 1.0;
  const double lo = std::min(0.0, xbar) - width;
  const double hi = std::max(0.0, xbar) + width;
  const double shift = beta * total_loglik(s, xbar);
  auto weight = [&](double theta) {
    return std::exp(beta * total_loglik(s, theta) - shift + log_normal_pdf(theta, 0.0, tau2));
  };
  const double z = integrate(weight, lo, hi);
  const double num = integrate([&](double t) { return g(t) * weight(t); }, lo, hi);
  return num / z;
}

double expect_uniform_prior(const SuffStats& s, double beta,
                            const std::function<double(double)>& g) {
  const double shift = beta * total_loglik(s, std::clamp(s.mean(), -1.0, 1.0));
  auto weight = [&](double theta) { return std::exp(beta * total_loglik(s, theta) - shift); };
  const double z = integrate(weight, -1.0, 1.0);
  const double num = integrate([&](double t) { return g(t) * weight(t); }, -1.0, 1.0);
  return num / z;
}

}  // namespace

ConjugatePosterior conjugate_tempered_posterior(const Dataset& data, double beta, double tau2) {
  if (!(beta > 0.0)) throw std::invalid_argument("oracle: beta must be > 0");
  if (!(tau2 > 0.0)) throw std::invalid_argument("oracle: tau2 must be > 0");
  const SuffStats s = stats_of(data);
  ConjugatePosterior post;
  post.beta = beta;
  post.tau2 = tau2;
  post.variance = 1.0 / (1.0 / tau2 + beta * s.n);
  post.mean = beta * s.sum * post.variance;
  return post;
}

double wbic_exact(const Dataset& data, double beta, double tau2) {
  const ConjugatePosterior post = conjugate_tempered_posterior(data, beta, tau2);
  const SuffStats s = stats_of(data);
  const double ss = s.sumsq - 2.0 * post.mean * s.sum + s.n * post.mean * post.mean;
  return 0.5 * s.n * kLogTwoPi + 0.5 * ss + 0.5 * s.n * post.variance;
}

double empirical_loss_exact(const Dataset& data, double tau2) {
  const ConjugatePosterior post = conjugate_tempered_posterior(data, 1.0, tau2);
  const SuffStats s = stats_of(data);
  double acc = 0.0;
  for (int i = 0; i < data.n(); ++i)
    acc -= log_normal_pdf(data.outputs(i, 0), post.mean, 1.0 + post.variance);
  return acc / s.n;
}

double wbic_quadrature(const Dataset& data, double beta, double tau2) {
  const SuffStats s = stats_of(data);
  return expect_gaussian_prior(s, beta, tau2,
                               [&](double theta) { return -total_loglik(s, theta); });
}

double empirical_loss_quadrature(const Dataset& data, double tau2) {
  const SuffStats s = stats_of(data);
  double acc = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    const double x = data.outputs(i, 0);
    const double r = expect_gaussian_prior(
        s, 1.0, tau2, [&](double theta) { return std::exp(-0.5 * (x - theta) * (x - theta)); });
    acc -= std::log(r) - 0.5 * kLogTwoPi;
  }
  return acc / s.n;
}

double posterior_mean_quadrature(const Dataset& data, double beta, double tau2) {
  const SuffStats s = stats_of(data);
  return expect_gaussian_prior(s, beta, tau2, [](double theta) { return theta; });
}

double posterior_var_quadrature(const Dataset& data, double beta, double tau2) {
  const SuffStats s = stats_of(data);
  const double m = posterior_mean_quadrature(data, beta, tau2);
  return expect_gaussian_prior(s, beta, tau2,
                               [&](double theta) { return (theta - m) * (theta - m); });
}

double wbic_quadrature_uniform(const Dataset& data, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("oracle: beta must be > 0");
  const SuffStats s = stats_of(data);
  return expect_uniform_prior(s, beta, [&](double theta) { return -total_loglik(s, theta); });
}

double empirical_loss_quadrature_uniform(const Dataset& data) {
  const SuffStats s = stats_of(data);
  double acc = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    const double x = data.outputs(i, 0);
    const double r = expect_uniform_prior(
        s, 1.0, [&](double theta) { return std::exp(-0.5 * (x - theta) * (x - theta)); });
    acc -= std::log(r) - 0.5 * kLogTwoPi;
  }
  return acc / s.n;
}

}  // namespace lscrit::oracle
