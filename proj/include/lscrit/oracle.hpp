#pragma once

#include "lscrit/model.hpp"

namespace lscrit::oracle {

/// Exact tempered posterior for the N(theta, 1) likelihood with N(0, tau2)
/// prior: precision 1/tau2 + beta*n, mean beta*sum(x)/(1/tau2 + beta*n).
struct ConjugatePosterior {
  double mean = 0.0;
  double variance = 1.0;
  double beta = 1.0;
  double tau2 = 1.0;
};

ConjugatePosterior conjugate_tempered_posterior(const Dataset& data, double beta, double tau2);

/// Closed-form posterior mean of the total negative log-likelihood:
/// (n/2) log(2*pi) + (1/2) sum (x_i - m_beta)^2 + n * v_beta / 2.
double wbic_exact(const Dataset& data, double beta, double tau2);

/// Closed-form empirical loss with analytic predictive N(m_1, 1 + v_1).
double empirical_loss_exact(const Dataset& data, double tau2);

// Adaptive-quadrature evaluations of the defining integrals; independent of
// the closed forms above (they integrate the raw tempered posterior).
double wbic_quadrature(const Dataset& data, double beta, double tau2);
double empirical_loss_quadrature(const Dataset& data, double tau2);
double posterior_mean_quadrature(const Dataset& data, double beta, double tau2);
double posterior_var_quadrature(const Dataset& data, double beta, double tau2);

// Uniform prior on [-1, 1] (the bounded-support variant); quadrature only,
// no closed form claimed.
double wbic_quadrature_uniform(const Dataset& data, double beta);
double empirical_loss_quadrature_uniform(const Dataset& data);

}  // namespace lscrit::oracle
