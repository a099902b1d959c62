#include "lscrit/model.hpp"

#include "lscrit/math_util.hpp"
#include "lscrit/sampler.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace lscrit {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::uint64_t kSimulateStream = 0x73696d75ull;  // simulate sub-stream tag

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Per-row log-likelihood without argument validation; hot path for the
// sampler and the per-draw predictive loop.
double loglik_row_unchecked(const ModelFamily& f, const Eigen::VectorXd& theta,
                            const Dataset& data, int i, const Eigen::MatrixXd* rrr_coef) {
  switch (f.kind) {
    case FamilyKind::gmm: {
      const int H = f.components;
      const int N = f.output_dim;
      double m = kNegInf;
      double terms[64];
      std::vector<double> spill;
      double* t = H <= 64 ? terms : (spill.resize(H), spill.data());
      for (int h = 0; h < H; ++h) {
        const double w = theta[h];
        if (w <= 0.0) {
          t[h] = kNegInf;
          continue;
        }
        double q = 0.0;
        const double* mu = theta.data() + H + h * N;
        for (int j = 0; j < N; ++j) {
          const double d = data.outputs(i, j) - mu[j];
          q += d * d;
        }
        t[h] = std::log(w) - 0.5 * q;
        if (t[h] > m) m = t[h];
      }
      double acc = 0.0;
      for (int h = 0; h < H; ++h) {
        if (std::isfinite(t[h])) acc += std::exp(t[h] - m);
      }
      return m + std::log(acc) - 0.5 * N * kLogTwoPi;
    }
    case FamilyKind::rrr: {
      const int N = f.output_dim;
      double q = 0.0;
      for (int j = 0; j < N; ++j) {
        double mean = 0.0;
        for (int k = 0; k < f.input_dim; ++k) mean += (*rrr_coef)(j, k) * data.inputs(i, k);
        const double d = data.outputs(i, j) - mean;
        q += d * d;
      }
      return -0.5 * q - 0.5 * N * kLogTwoPi;
    }
    case FamilyKind::normal_mean:
    case FamilyKind::normal_mean_conj: {
      const double d = data.outputs(i, 0) - theta[0];
      return -0.5 * d * d - 0.5 * kLogTwoPi;
    }
  }
  return kNegInf;
}

}  // namespace

ModelFamily ModelFamily::gmm(int components, int output_dim) {
  if (components < 1 || output_dim < 1)
    throw std::invalid_argument("gmm: H and N must be >= 1");
  ModelFamily f;
  f.kind = FamilyKind::gmm;
  f.components = components;
  f.output_dim = output_dim;
  return f;
}

ModelFamily ModelFamily::rrr(int input_dim, int output_dim, int components) {
  if (input_dim < 1 || output_dim < 1 || components < 1)
    throw std::invalid_argument("rrr: M, N, H must be >= 1");
  ModelFamily f;
  f.kind = FamilyKind::rrr;
  f.components = components;
  f.output_dim = output_dim;
  f.input_dim = input_dim;
  return f;
}

ModelFamily ModelFamily::normal_mean() {
  return ModelFamily{};
}

ModelFamily ModelFamily::normal_mean_conjugate(double tau2) {
  if (!(tau2 > 0.0)) throw std::invalid_argument("normal_mean_conjugate: tau2 must be > 0");
  ModelFamily f;
  f.kind = FamilyKind::normal_mean_conj;
  f.prior_tau2 = tau2;
  return f;
}

int ModelFamily::param_dim() const {
  switch (kind) {
    case FamilyKind::gmm: return components + components * output_dim;
    case FamilyKind::rrr: return components * input_dim + output_dim * components;
    default: return 1;
  }
}

int ModelFamily::unconstrained_dim() const {
  if (kind == FamilyKind::gmm) return (components - 1) + components * output_dim;
  return param_dim();
}

std::vector<std::string> ModelFamily::param_names() const {
  std::vector<std::string> names;
  switch (kind) {
    case FamilyKind::gmm:
      for (int h = 0; h < components; ++h) names.push_back("w" + std::to_string(h + 1));
      for (int h = 0; h < components; ++h)
        for (int j = 0; j < output_dim; ++j)
          names.push_back("mu" + std::to_string(h + 1) + "_" + std::to_string(j + 1));
      break;
    case FamilyKind::rrr:
      for (int i = 0; i < components; ++i)
        for (int j = 0; j < input_dim; ++j)
          names.push_back("A" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
      for (int i = 0; i < output_dim; ++i)
        for (int j = 0; j < components; ++j)
          names.push_back("B" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
      break;
    default:
      names.push_back("theta");
  }
  return names;
}

std::string ModelFamily::describe() const {
  std::ostringstream out;
  switch (kind) {
    case FamilyKind::gmm:
      out << "gmm(H=" << components << ",N=" << output_dim << ")";
      break;
    case FamilyKind::rrr:
      out << "rrr(M=" << input_dim << ",N=" << output_dim << ",H=" << components << ")";
      break;
    case FamilyKind::normal_mean:
      out << "normal_mean";
      break;
    case FamilyKind::normal_mean_conj:
      out << "normal_mean_conj(tau2=" << prior_tau2 << ")";
      break;
  }
  return out.str();
}

GmmParams unpack_gmm(const ModelFamily& family, const Eigen::VectorXd& theta) {
  const int H = family.components, N = family.output_dim;
  GmmParams p;
  p.weights = theta.head(H);
  p.means.resize(H, N);
  for (int h = 0; h < H; ++h)
    for (int j = 0; j < N; ++j) p.means(h, j) = theta[H + h * N + j];
  return p;
}

Eigen::VectorXd pack_gmm(const Eigen::VectorXd& weights, const Eigen::MatrixXd& means) {
  const int H = static_cast<int>(weights.size());
  const int N = static_cast<int>(means.cols());
  if (means.rows() != H) throw std::invalid_argument("pack_gmm: weights/means size mismatch");
  Eigen::VectorXd theta(H + H * N);
  theta.head(H) = weights;
  for (int h = 0; h < H; ++h)
    for (int j = 0; j < N; ++j) theta[H + h * N + j] = means(h, j);
  return theta;
}

RrrParams unpack_rrr(const ModelFamily& family, const Eigen::VectorXd& theta) {
  const int H = family.components, M = family.input_dim, N = family.output_dim;
  RrrParams p;
  p.A.resize(H, M);
  p.B.resize(N, H);
  int k = 0;
  for (int i = 0; i < H; ++i)
    for (int j = 0; j < M; ++j) p.A(i, j) = theta[k++];
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < H; ++j) p.B(i, j) = theta[k++];
  return p;
}

Eigen::VectorXd pack_rrr(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (A.rows() != B.cols()) throw std::invalid_argument("pack_rrr: A rows must match B cols");
  Eigen::VectorXd theta(A.size() + B.size());
  int k = 0;
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j) theta[k++] = A(i, j);
  for (int i = 0; i < B.rows(); ++i)
    for (int j = 0; j < B.cols(); ++j) theta[k++] = B(i, j);
  return theta;
}

void validate_params(const ModelFamily& family, const Eigen::VectorXd& theta) {
  if (theta.size() != family.param_dim())
    throw std::invalid_argument("parameter vector has length " + std::to_string(theta.size()) +
                                ", expected " + std::to_string(family.param_dim()) + " for " +
                                family.describe());
  if (!theta.allFinite())
    throw std::invalid_argument("parameter vector has non-finite entries");
  if (family.kind == FamilyKind::gmm) {
    const int H = family.components;
    double sum = 0.0;
    for (int h = 0; h < H; ++h) {
      if (theta[h] < 0.0) throw std::invalid_argument("gmm weights must be nonnegative");
      sum += theta[h];
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("gmm weights must sum to 1 (got " + format_double(sum) + ")");
  }
}

void validate_dataset(const ModelFamily& family, const Dataset& data) {
  if (data.n() < 1) throw std::invalid_argument("dataset is empty");
  if (!data.outputs.allFinite() || (data.has_inputs() && !data.inputs.allFinite()))
    throw std::invalid_argument("dataset has non-finite entries");
  if (data.output_dim() != family.output_dim)
    throw std::invalid_argument("dataset output dimension " + std::to_string(data.output_dim()) +
                                " does not match " + family.describe());
  const bool wants_inputs = family.kind == FamilyKind::rrr;
  if (wants_inputs != data.has_inputs())
    throw std::invalid_argument(wants_inputs ? "rrr data requires inputs"
                                             : "inputs are only valid for rrr data");
  if (wants_inputs && data.input_dim() != family.input_dim)
    throw std::invalid_argument("dataset input dimension does not match family");
  if (data.has_inputs() && data.inputs.rows() != data.outputs.rows())
    throw std::invalid_argument("inputs/outputs row counts differ");
}

double log_likelihood_datum(const ModelFamily& family, const Eigen::VectorXd& theta,
                            const Eigen::VectorXd& output, const Eigen::VectorXd& input) {
  validate_params(family, theta);
  if (output.size() != family.output_dim)
    throw std::invalid_argument("observation dimension does not match family");
  const bool wants_inputs = family.kind == FamilyKind::rrr;
  if (wants_inputs && input.size() != family.input_dim)
    throw std::invalid_argument("rrr datum requires an input of dimension " +
                                std::to_string(family.input_dim));
  if (!wants_inputs && input.size() != 0)
    throw std::invalid_argument("input is only valid for rrr data");
  if (!output.allFinite() || !input.allFinite())
    throw std::invalid_argument("observation has non-finite entries");

  Dataset one;
  one.outputs = output.transpose();
  if (wants_inputs) one.inputs = input.transpose();
  if (family.kind == FamilyKind::rrr) {
    const RrrParams p = unpack_rrr(family, theta);
    const Eigen::MatrixXd coef = p.B * p.A;
    return loglik_row_unchecked(family, theta, one, 0, &coef);
  }
  return loglik_row_unchecked(family, theta, one, 0, nullptr);
}

double log_likelihood_row(const ModelFamily& family, const Eigen::VectorXd& theta,
                          const Dataset& data, int row) {
  if (row < 0 || row >= data.n()) throw std::invalid_argument("row index out of range");
  if (family.kind == FamilyKind::rrr) {
    const Eigen::VectorXd x = data.inputs.row(row);
    return log_likelihood_datum(family, theta, data.outputs.row(row), x);
  }
  return log_likelihood_datum(family, theta, data.outputs.row(row));
}

double negative_log_likelihood(const ModelFamily& family, const Eigen::VectorXd& theta,
                               const Dataset& data) {
  validate_params(family, theta);
  validate_dataset(family, data);
  Eigen::MatrixXd coef;
  const Eigen::MatrixXd* coef_ptr = nullptr;
  if (family.kind == FamilyKind::rrr) {
    const RrrParams p = unpack_rrr(family, theta);
    coef = p.B * p.A;
    coef_ptr = &coef;
  }
  double nll = 0.0;
  for (int i = 0; i < data.n(); ++i)
    nll -= loglik_row_unchecked(family, theta, data, i, coef_ptr);
  return nll;
}

double log_prior(const ModelFamily& family, const Eigen::VectorXd& theta) {
  validate_params(family, theta);
  switch (family.kind) {
    case FamilyKind::gmm: {
      const int H = family.components, N = family.output_dim;
      // Uniform simplex (Dirichlet(1,..,1) density = (H-1)!) plus N(0,1) means.
      double lp = std::lgamma(static_cast<double>(H));
      double q = 0.0;
      for (int k = H; k < theta.size(); ++k) q += theta[k] * theta[k];
      lp += -0.5 * q - 0.5 * H * N * kLogTwoPi;
      return lp;
    }
    case FamilyKind::rrr: {
      double q = theta.squaredNorm();
      return -0.5 * q - 0.5 * theta.size() * kLogTwoPi;
    }
    case FamilyKind::normal_mean:
      return std::abs(theta[0]) <= 1.0 ? std::log(0.5) : kNegInf;
    case FamilyKind::normal_mean_conj:
      return log_normal_pdf(theta[0], 0.0, family.prior_tau2);
  }
  return kNegInf;
}

Dataset simulate(const ModelFamily& family, const Eigen::VectorXd& true_params, int n,
                 std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("simulate: n must be >= 1");
  validate_params(family, true_params);
  Rng rng(derive_seed(seed, kSimulateStream, 0));
  Dataset data;
  data.outputs.resize(n, family.output_dim);
  switch (family.kind) {
    case FamilyKind::gmm: {
      const GmmParams p = unpack_gmm(family, true_params);
      for (int i = 0; i < n; ++i) {
        const int h = rng.categorical(p.weights);
        for (int j = 0; j < family.output_dim; ++j)
          data.outputs(i, j) = p.means(h, j) + rng.normal();
      }
      break;
    }
    case FamilyKind::rrr: {
      const RrrParams p = unpack_rrr(family, true_params);
      const Eigen::MatrixXd coef = p.B * p.A;
      data.inputs.resize(n, family.input_dim);
      Eigen::VectorXd x(family.input_dim);
      for (int i = 0; i < n; ++i) {
        for (int k = 0; k < family.input_dim; ++k) x[k] = rng.normal();
        data.inputs.row(i) = x;
        const Eigen::VectorXd mean = coef * x;
        for (int j = 0; j < family.output_dim; ++j)
          data.outputs(i, j) = mean[j] + rng.normal();
      }
      break;
    }
    case FamilyKind::normal_mean:
    case FamilyKind::normal_mean_conj:
      for (int i = 0; i < n; ++i) data.outputs(i, 0) = true_params[0] + rng.normal();
      break;
  }
  return data;
}

Eigen::VectorXd draw_from_prior(const ModelFamily& family, Rng& rng) {
  switch (family.kind) {
    case FamilyKind::gmm: {
      const int H = family.components, N = family.output_dim;
      Eigen::VectorXd theta(family.param_dim());
      theta.head(H) = rng.simplex(H);
      for (int k = H; k < theta.size(); ++k) theta[k] = rng.normal();
      return theta;
    }
    case FamilyKind::rrr: {
      Eigen::VectorXd theta(family.param_dim());
      for (int k = 0; k < theta.size(); ++k) theta[k] = rng.normal();
      return theta;
    }
    case FamilyKind::normal_mean: {
      Eigen::VectorXd theta(1);
      theta[0] = 2.0 * rng.uniform() - 1.0;
      return theta;
    }
    case FamilyKind::normal_mean_conj: {
      Eigen::VectorXd theta(1);
      theta[0] = std::sqrt(family.prior_tau2) * rng.normal();
      return theta;
    }
  }
  throw std::logic_error("unreachable");
}

Eigen::VectorXd to_unconstrained(const ModelFamily& family, const Eigen::VectorXd& theta) {
  validate_params(family, theta);
  if (family.kind != FamilyKind::gmm) return theta;
  const int H = family.components;
  Eigen::VectorXd u(family.unconstrained_dim());
  // Stick-breaking inverse: y_k = logit(w_k / rem_k) + log(H - 1 - k).
  double rem = 1.0;
  for (int k = 0; k < H - 1; ++k) {
    const double z = theta[k] / rem;
    u[k] = std::log(z / (1.0 - z)) + std::log(static_cast<double>(H - 1 - k));
    rem -= theta[k];
  }
  for (int j = 0; j < H * family.output_dim; ++j) u[H - 1 + j] = theta[H + j];
  return u;
}

Eigen::VectorXd from_unconstrained(const ModelFamily& family, const Eigen::VectorXd& u,
                                   double* log_jacobian) {
  if (u.size() != family.unconstrained_dim())
    throw std::invalid_argument("unconstrained vector has wrong length");
  if (log_jacobian) *log_jacobian = 0.0;
  if (family.kind != FamilyKind::gmm) return u;
  const int H = family.components;
  Eigen::VectorXd theta(family.param_dim());
  double rem = 1.0;
  double lj = 0.0;
  for (int k = 0; k < H - 1; ++k) {
    const double z = logistic(u[k] - std::log(static_cast<double>(H - 1 - k)));
    theta[k] = rem * z;
    lj += std::log(z) + std::log1p(-z) + std::log(rem);
    rem -= theta[k];
  }
  theta[H - 1] = rem;
  for (int j = 0; j < H * family.output_dim; ++j) theta[H + j] = u[H - 1 + j];
  if (log_jacobian) *log_jacobian = lj;
  return theta;
}

std::string dataset_to_csv(const Dataset& data) {
  std::ostringstream out;
  for (int k = 0; k < data.input_dim(); ++k) {
    if (k) out << ',';
    out << 'x' << (k + 1);
  }
  for (int j = 0; j < data.output_dim(); ++j) {
    if (j || data.has_inputs()) out << ',';
    out << 'y' << (j + 1);
  }
  out << '\n';
  for (int i = 0; i < data.n(); ++i) {
    for (int k = 0; k < data.input_dim(); ++k) {
      if (k) out << ',';
      out << format_double(data.inputs(i, k));
    }
    for (int j = 0; j < data.output_dim(); ++j) {
      if (j || data.has_inputs()) out << ',';
      out << format_double(data.outputs(i, j));
    }
    out << '\n';
  }
  return out.str();
}

Dataset dataset_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("dataset csv: empty text");
  auto split = [](const std::string& s) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : s) {
      if (c == ',') {
        fields.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur.push_back(c);
      }
    }
    fields.push_back(cur);
    return fields;
  };
  const auto header = split(line);
  int m = 0, n_out = 0;
  for (const auto& name : header) {
    if (!name.empty() && name[0] == 'x')
      ++m;
    else if (!name.empty() && name[0] == 'y')
      ++n_out;
    else
      throw std::invalid_argument("dataset csv: unexpected column '" + name + "'");
  }
  if (n_out == 0) throw std::invalid_argument("dataset csv: no output columns");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split(line);
    if (static_cast<int>(fields.size()) != m + n_out)
      throw std::invalid_argument("dataset csv: row with wrong field count");
    std::vector<double> row;
    for (const auto& f : fields) {
      char* end = nullptr;
      const double v = std::strtod(f.c_str(), &end);
      if (end == f.c_str()) throw std::invalid_argument("dataset csv: bad number '" + f + "'");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("dataset csv: no data rows");
  Dataset data;
  data.outputs.resize(rows.size(), n_out);
  if (m > 0) data.inputs.resize(rows.size(), m);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int k = 0; k < m; ++k) data.inputs(i, k) = rows[i][k];
    for (int j = 0; j < n_out; ++j) data.outputs(i, j) = rows[i][m + j];
  }
  return data;
}

Eigen::VectorXd plug_in_estimate(const ModelFamily& family, const Dataset& data,
                                 const PosteriorSamples& posterior) {
  if (posterior.draws.empty()) throw std::invalid_argument("plug_in_estimate: empty posterior");
  if (!posterior.untempered)
    throw std::invalid_argument("plug_in_estimate: requires draws at beta = 1");
  if (posterior.n_data != data.n())
    throw std::invalid_argument("plug_in_estimate: posterior was drawn for different data");
  // At beta = 1 the stored tempered_logpost is exactly loglik + logprior.
  std::size_t best = 0;
  for (std::size_t k = 1; k < posterior.draws.size(); ++k) {
    if (posterior.tempered_logpost[k] > posterior.tempered_logpost[best]) best = k;
  }
  return posterior.draws[best];
}

}  // namespace lscrit
