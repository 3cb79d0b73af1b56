#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace trustbayes::gp {

/// Trainable prior parameters: constant mean `theta` and squared-exponential
/// kernel k(x, x') = phi1^2 * exp(-|x - x'|^2 * phi2).
///
/// Values are held on the natural scale so that the text record round-trips
/// bit-exactly; optimizers work in (theta, log phi1, log phi2) coordinates.
struct HyperParams {
  double theta = 0.0;
  double phi1 = 1.0;  // kernel amplitude, output units
  double phi2 = 1.0;  // inverse squared lengthscale, 1 / input^2

  static HyperParams from_log(double theta, double log_phi1, double log_phi2) noexcept {
    return {theta, std::exp(log_phi1), std::exp(log_phi2)};
  }
  double log_phi1() const noexcept { return std::log(phi1); }
  double log_phi2() const noexcept { return std::log(phi2); }

  bool valid() const noexcept;
  // Throws InputError unless theta is finite and phi1, phi2 are finite and > 0.
  void validate() const;

  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const noexcept { return hi - lo; }
  // Closed on both ends.
  bool contains(double value) const noexcept { return lo <= value && value <= hi; }
  bool contains(const Interval& other) const noexcept { return lo <= other.lo && other.hi <= hi; }
};

/// Diagonal jitter added to the Gram matrix as level * phi1^2, starting at
/// `initial` and multiplied by `growth` until the factorization succeeds or
/// `max` has been tried.
struct JitterSchedule {
  double initial = 1e-8;
  double max = 1e-4;
  double growth = 10.0;

  // A single attempt with no jitter at all.
  static JitterSchedule none() noexcept { return {0.0, 0.0, 10.0}; }
};

/// Inputs are stored one point per column (n_x rows).
using InputMatrix = Eigen::MatrixXd;
using InputRef = Eigen::Ref<const Eigen::VectorXd>;
using InputsRef = Eigen::Ref<const Eigen::MatrixXd>;
using OutputsRef = Eigen::Ref<const Eigen::VectorXd>;

double prior_mean(const HyperParams& hyper, InputRef x);
double kernel_eval(const HyperParams& hyper, InputRef x, InputRef x2);

// Cross-covariance k(a_i, b_j) without jitter.
Eigen::MatrixXd kernel_matrix(const HyperParams& hyper, InputsRef a, InputsRef b);

Interval prior_interval(const HyperParams& hyper, InputRef x, double q);

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;

  double stddev() const noexcept { return std::sqrt(variance); }
  Interval interval(double q) const noexcept;
};

struct CholeskyResult {
  Eigen::MatrixXd lower;
  double jitter = 0.0;  // relative level that succeeded
};

// Factorizes gram + level * scale * I following the schedule. Throws
// NumericalError listing the attempted levels when every level fails.
CholeskyResult jittered_cholesky(const Eigen::MatrixXd& gram, double scale,
                                 const JitterSchedule& schedule = {});

/// Exact noiseless GP posterior conditioned on a training set.
///
/// Immutable after construction; safe to share between threads.
class Posterior {
 public:
  static Posterior fit(const HyperParams& hyper, InputsRef inputs, OutputsRef outputs,
                       const JitterSchedule& schedule = {});

  Prediction predict(InputRef x) const;
  // One prediction per column of `queries`, using a single triangular solve.
  std::vector<Prediction> predict_many(InputsRef queries) const;

  double mean(InputRef x) const { return predict(x).mean; }
  double variance(InputRef x) const { return predict(x).variance; }
  double stddev(InputRef x) const { return predict(x).stddev(); }

  const HyperParams& hyper() const noexcept { return hyper_; }
  const InputMatrix& train_inputs() const noexcept { return inputs_; }
  const Eigen::MatrixXd& cholesky_factor() const noexcept { return lower_; }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  double jitter() const noexcept { return jitter_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(inputs_.cols()); }

 private:
  Posterior() = default;

  HyperParams hyper_;
  InputMatrix inputs_;
  Eigen::MatrixXd lower_;
  Eigen::VectorXd weights_;
  double jitter_ = 0.0;
};

inline Posterior fit_posterior(const HyperParams& hyper, InputsRef inputs, OutputsRef outputs,
                               const JitterSchedule& schedule = {}) {
  return Posterior::fit(hyper, inputs, outputs, schedule);
}

Interval posterior_interval(const Posterior& post, InputRef x, double q);

/// Negative marginal log-likelihood of noiseless outputs under the prior.
double neg_mll(const HyperParams& hyper, InputsRef inputs, OutputsRef outputs,
               const JitterSchedule& schedule = {});

struct MllGradient {
  double value = 0.0;
  // d/d(theta, log phi1, log phi2), jitter level held fixed.
  std::array<double, 3> gradient{};
  double jitter = 0.0;
};

MllGradient neg_mll_with_gradient(const HyperParams& hyper, InputsRef inputs, OutputsRef outputs,
                                  const JitterSchedule& schedule = {});

}  // namespace trustbayes::gp
