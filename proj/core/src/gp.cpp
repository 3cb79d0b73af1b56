#include "trustbayes/gp.hpp"

#include <algorithm>
#include <numbers>
#include <sstream>
#include <vector>

#include "trustbayes/errors.hpp"

namespace trustbayes::gp {

namespace {

void require_positive_q(double q) {
  if (!(q > 0.0) || !std::isfinite(q)) throw InputError("interval multiplier q must be positive and finite");
}

// Solves L L' x = b in place for lower-triangular L.
void cholesky_solve_in_place(const Eigen::MatrixXd& lower, Eigen::Ref<Eigen::MatrixXd> b) {
  lower.triangularView<Eigen::Lower>().solveInPlace(b);
  lower.transpose().triangularView<Eigen::Upper>().solveInPlace(b);
}

void require_same_dim(Eigen::Index a, Eigen::Index b) {
  if (a != b) {
    std::ostringstream os;
    os << "input dimension mismatch: " << a << " vs " << b;
    throw InputError(os.str());
  }
}

}  // namespace

bool HyperParams::valid() const noexcept {
  return std::isfinite(theta) && std::isfinite(phi1) && std::isfinite(phi2) && phi1 > 0.0 && phi2 > 0.0;
}

void HyperParams::validate() const {
  if (!valid()) {
    std::ostringstream os;
    os.precision(17);
    os << "invalid hyperparameters: theta=" << theta << " phi1=" << phi1 << " phi2=" << phi2;
    throw InputError(os.str());
  }
}

double prior_mean(const HyperParams& hyper, InputRef /*x*/) { return hyper.theta; }

double kernel_eval(const HyperParams& hyper, InputRef x, InputRef x2) {
  require_same_dim(x.size(), x2.size());
  return hyper.phi1 * hyper.phi1 * std::exp(-(x - x2).squaredNorm() * hyper.phi2);
}

Eigen::MatrixXd kernel_matrix(const HyperParams& hyper, InputsRef a, InputsRef b) {
  require_same_dim(a.rows(), b.rows());
  const double amp = hyper.phi1 * hyper.phi1;
  Eigen::MatrixXd k(a.cols(), b.cols());
  for (Eigen::Index j = 0; j < b.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.cols(); ++i) {
      k(i, j) = amp * std::exp(-(a.col(i) - b.col(j)).squaredNorm() * hyper.phi2);
    }
  }
  return k;
}

Interval prior_interval(const HyperParams& hyper, InputRef x, double q) {
  require_positive_q(q);
  const Prediction prior{prior_mean(hyper, x), kernel_eval(hyper, x, x)};
  return prior.interval(q);
}

Interval Prediction::interval(double q) const noexcept {
  const double half = q * stddev();
  return {mean - half, mean + half};
}

CholeskyResult jittered_cholesky(const Eigen::MatrixXd& gram, double scale, const JitterSchedule& schedule) {
  std::vector<double> attempted;
  const Eigen::Index t = gram.rows();
  double level = schedule.initial;
  for (;;) {
    attempted.push_back(level);
    Eigen::MatrixXd k = gram;
    k.diagonal().array() += level * scale;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd lower = llt.matrixL();
      const auto diag = lower.diagonal().array();
      if ((diag > 0.0).all() && diag.allFinite()) return {std::move(lower), level};
    }
    // Relative slack so 1e-8 * 10^4 counts as having reached 1e-4.
    if (level <= 0.0 || level >= schedule.max * (1.0 - 1e-9) || t == 0) break;
    level = std::min(level * schedule.growth, schedule.max);
  }
  std::ostringstream os;
  os << "Cholesky factorization of " << t << "x" << t << " Gram matrix failed; jitter levels tried:";
  for (double a : attempted) os << ' ' << a;
  throw NumericalError(os.str(), std::move(attempted));
}

Posterior Posterior::fit(const HyperParams& hyper, InputsRef inputs, OutputsRef outputs,
                         const JitterSchedule& schedule) {
  hyper.validate();
  if (inputs.cols() != outputs.size()) throw InputError("number of training inputs and outputs differ");
  if (!inputs.allFinite() || !outputs.allFinite()) throw InputError("training data must be finite");

  Posterior post;
  post.hyper_ = hyper;
  post.inputs_ = inputs;
  if (inputs.cols() == 0) {
    post.lower_.resize(0, 0);
    post.weights_.resize(0);
    return post;
  }
  auto chol = jittered_cholesky(kernel_matrix(hyper, inputs, inputs), hyper.phi1 * hyper.phi1, schedule);
  post.lower_ = std::move(chol.lower);
  post.jitter_ = chol.jitter;

  Eigen::VectorXd residual = outputs.array() - hyper.theta;
  cholesky_solve_in_place(post.lower_, residual);
  post.weights_ = std::move(residual);
  return post;
}

Prediction Posterior::predict(InputRef x) const {
  if (inputs_.rows() > 0) require_same_dim(x.size(), inputs_.rows());
  const double prior_var = hyper_.phi1 * hyper_.phi1;
  if (size() == 0) return {prior_mean(hyper_, x), prior_var};

  Eigen::VectorXd k = kernel_matrix(hyper_, inputs_, x);
  const double mean = prior_mean(hyper_, x) + k.dot(weights_);
  lower_.triangularView<Eigen::Lower>().solveInPlace(k);
  return {mean, std::max(0.0, prior_var - k.squaredNorm())};
}

std::vector<Prediction> Posterior::predict_many(InputsRef queries) const {
  std::vector<Prediction> out(static_cast<std::size_t>(queries.cols()));
  const double prior_var = hyper_.phi1 * hyper_.phi1;
  if (size() == 0) {
    for (Eigen::Index j = 0; j < queries.cols(); ++j) out[j] = {prior_mean(hyper_, queries.col(j)), prior_var};
    return out;
  }
  Eigen::MatrixXd k = kernel_matrix(hyper_, inputs_, queries);
  const Eigen::VectorXd means = k.transpose() * weights_;
  lower_.triangularView<Eigen::Lower>().solveInPlace(k);
  for (Eigen::Index j = 0; j < queries.cols(); ++j) {
    out[j] = {prior_mean(hyper_, queries.col(j)) + means(j), std::max(0.0, prior_var - k.col(j).squaredNorm())};
  }
  return out;
}

Interval posterior_interval(const Posterior& post, InputRef x, double q) {
  require_positive_q(q);
  return post.predict(x).interval(q);
}

namespace {

struct MllState {
  CholeskyResult chol;
  Eigen::VectorXd residual;
  Eigen::VectorXd alpha;
  double value = 0.0;
};

MllState mll_state(const HyperParams& hyper, InputsRef inputs, OutputsRef outputs, const JitterSchedule& schedule) {
  hyper.validate();
  if (inputs.cols() == 0) throw InputError("neg_mll needs at least one data point");
  if (inputs.cols() != outputs.size()) throw InputError("number of inputs and outputs differ");

  MllState s;
  s.chol = jittered_cholesky(kernel_matrix(hyper, inputs, inputs), hyper.phi1 * hyper.phi1, schedule);
  s.residual = outputs.array() - hyper.theta;
  s.alpha = s.residual;
  s.chol.lower.triangularView<Eigen::Lower>().solveInPlace(s.alpha);
  const double quad = s.alpha.squaredNorm();  // r' K^-1 r = |L^-1 r|^2
  s.chol.lower.transpose().triangularView<Eigen::Upper>().solveInPlace(s.alpha);
  const double half_logdet = s.chol.lower.diagonal().array().log().sum();
  const double t = static_cast<double>(inputs.cols());
  s.value = 0.5 * quad + half_logdet + 0.5 * t * std::log(2.0 * std::numbers::pi);
  return s;
}

}  // namespace

double neg_mll(const HyperParams& hyper, InputsRef inputs, OutputsRef outputs, const JitterSchedule& schedule) {
  return mll_state(hyper, inputs, outputs, schedule).value;
}

MllGradient neg_mll_with_gradient(const HyperParams& hyper, InputsRef inputs, OutputsRef outputs,
                                  const JitterSchedule& schedule) {
  const MllState s = mll_state(hyper, inputs, outputs, schedule);
  const Eigen::Index t = inputs.cols();

  Eigen::MatrixXd k_inv = Eigen::MatrixXd::Identity(t, t);
  cholesky_solve_in_place(s.chol.lower, k_inv);
  const Eigen::MatrixXd w = k_inv - s.alpha * s.alpha.transpose();

  // K = phi1^2 (R + jitter I), so dK/dlog(phi1) = 2K; the jitter term has no phi2 dependence.
  double d_log_phi2 = 0.0;
  const double amp = hyper.phi1 * hyper.phi1;
  for (Eigen::Index j = 0; j < t; ++j) {
    for (Eigen::Index i = 0; i < t; ++i) {
      if (i == j) continue;
      const double d2 = (inputs.col(i) - inputs.col(j)).squaredNorm();
      const double dk = -amp * std::exp(-d2 * hyper.phi2) * d2 * hyper.phi2;
      d_log_phi2 += w(i, j) * dk;
    }
  }

  MllGradient g;
  g.value = s.value;
  g.jitter = s.chol.jitter;
  g.gradient[0] = -s.alpha.sum();
  g.gradient[1] = static_cast<double>(t) - s.residual.dot(s.alpha);
  g.gradient[2] = 0.5 * d_log_phi2;
  return g;
}

}  // namespace trustbayes::gp
