#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "trustbayes/errors.hpp"
#include "trustbayes/gp.hpp"

namespace trustbayes::gp {
namespace {

Eigen::VectorXd pt(double x) { return Eigen::VectorXd::Constant(1, x); }

Eigen::MatrixXd row(std::initializer_list<double> xs) {
  Eigen::MatrixXd m(1, static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) m(0, i++) = x;
  return m;
}

Eigen::VectorXd vec(std::initializer_list<double> ys) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(ys.size()));
  Eigen::Index i = 0;
  for (double y : ys) v(i++) = y;
  return v;
}

Eigen::MatrixXd random_inputs(std::mt19937_64& rng, Eigen::Index dim, Eigen::Index count) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd x(dim, count);
  for (Eigen::Index j = 0; j < count; ++j)
    for (Eigen::Index i = 0; i < dim; ++i) x(i, j) = u(rng);
  return x;
}

TEST(Kernel, EqualInputsGiveAmplitudeSquared) {
  EXPECT_DOUBLE_EQ(kernel_eval({0.0, 3.0, 0.37}, pt(0.4), pt(0.4)), 9.0);
}

TEST(Kernel, UnitDistanceUnitScale) {
  EXPECT_NEAR(kernel_eval({0.0, 1.0, 1.0}, pt(0.0), pt(1.0)), 0.36787944117144233, 1e-15);
}

TEST(Kernel, FlatLimit) {
  EXPECT_NEAR(kernel_eval({0.0, 1.0, 1e-300}, pt(-7.0), pt(11.0)), 1.0, 1e-12);
}

TEST(Kernel, DimensionMismatchIsInputError) {
  EXPECT_THROW(kernel_eval({}, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(3)), InputError);
}

TEST(Kernel, SymmetricOnRandomPairs) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 500; ++i) {
    const HyperParams h = HyperParams::from_log(0.0, u(rng), u(rng));
    const auto a = random_inputs(rng, 3, 1);
    const auto b = random_inputs(rng, 3, 1);
    EXPECT_EQ(kernel_eval(h, a.col(0), b.col(0)), kernel_eval(h, b.col(0), a.col(0)));
  }
}

TEST(HyperParamsTest, RejectsNonPositiveOrNonFinite) {
  EXPECT_THROW((HyperParams{0.0, 0.0, 1.0}.validate()), InputError);
  EXPECT_THROW((HyperParams{0.0, 1.0, -1.0}.validate()), InputError);
  EXPECT_THROW((HyperParams{NAN, 1.0, 1.0}.validate()), InputError);
  EXPECT_NO_THROW((HyperParams{-4.0, 1e-200, 1e200}.validate()));
}

TEST(PriorInterval, NinetyPercentReliabilityFactor) {
  const auto iv = prior_interval({0.0, 1.0, 1.0}, pt(0.3), 1.64);
  EXPECT_DOUBLE_EQ(iv.lo, -1.64);
  EXPECT_DOUBLE_EQ(iv.hi, 1.64);
}

TEST(PriorInterval, DegenerateWidth) {
  const auto iv = prior_interval({5.0, 1e-300, 1.0}, pt(0.3), 3.0);
  EXPECT_DOUBLE_EQ(iv.lo, 5.0);
  EXPECT_DOUBLE_EQ(iv.hi, 5.0);
}

TEST(PriorInterval, ShiftedAndScaled) {
  const auto iv = prior_interval({2.0, 3.0, 1.0}, pt(0.9), 2.0);
  EXPECT_DOUBLE_EQ(iv.lo, -4.0);
  EXPECT_DOUBLE_EQ(iv.hi, 8.0);
  EXPECT_DOUBLE_EQ(iv.width(), 2.0 * 2.0 * 3.0);
}

TEST(PriorInterval, RejectsNonPositiveQ) {
  EXPECT_THROW(prior_interval({}, pt(0.0), 0.0), InputError);
}

TEST(Posterior, EmptyDataReproducesPrior) {
  const HyperParams h{1.0, 2.0, 1.0};
  const auto post = Posterior::fit(h, Eigen::MatrixXd(1, 0), Eigen::VectorXd(0));
  EXPECT_EQ(post.size(), 0u);
  std::mt19937_64 rng(3);
  const auto q = random_inputs(rng, 1, 100);
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    const auto p = post.predict(q.col(j));
    EXPECT_EQ(p.mean, prior_mean(h, q.col(j)));
    EXPECT_EQ(p.variance, kernel_eval(h, q.col(j), q.col(j)));
  }
}

TEST(Posterior, OnePointClosedForm) {
  const HyperParams h{0.0, 1.0, 1.0};
  const auto post = Posterior::fit(h, row({0.0}), vec({2.0}));
  const auto p = post.predict(pt(1.0));
  EXPECT_NEAR(p.mean, 0.73575888234288467, 1e-7);
  EXPECT_NEAR(p.variance, 0.86466471676338730, 1e-7);
  for (double x : {-1.5, -0.2, 0.3, 0.8, 2.0}) {
    const auto px = post.predict(pt(x));
    // jitter 1e-8 shifts the closed form by O(1e-8)
    EXPECT_NEAR(px.mean, 2.0 * std::exp(-x * x), 1e-7);
    EXPECT_NEAR(px.variance, 1.0 - std::exp(-2.0 * x * x), 1e-7);
  }
}

TEST(Posterior, CollapsesAtObservedInput) {
  const HyperParams h{0.0, 1.0, 1.0};
  const auto post = Posterior::fit(h, row({0.0}), vec({2.0}));
  const auto p = post.predict(pt(0.0));
  EXPECT_NEAR(p.mean, 2.0, 1e-7);
  EXPECT_LE(p.variance, 10.0 * post.jitter());
}

TEST(Posterior, CholeskyFactorIsLowerWithPositiveDiagonal) {
  std::mt19937_64 rng(5);
  const HyperParams h{0.3, 1.7, 20.0};
  const auto x = random_inputs(rng, 1, 12);
  Eigen::VectorXd y(12);
  for (Eigen::Index i = 0; i < 12; ++i) y(i) = std::sin(6.0 * x(0, i));
  const auto post = Posterior::fit(h, x, y);
  const auto& l = post.cholesky_factor();
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    EXPECT_GT(l(i, i), 0.0);
    for (Eigen::Index j = i + 1; j < l.cols(); ++j) EXPECT_EQ(l(i, j), 0.0);
  }
}

TEST(Posterior, DuplicateInputsNeedJitter) {
  const HyperParams h{0.0, 1.0, 1.0};
  const auto x = row({0.5, 0.5});
  const auto y = vec({1.0, 1.0});
  try {
    Posterior::fit(h, x, y, JitterSchedule::none());
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    ASSERT_EQ(e.attempted_jitter().size(), 1u);
    EXPECT_EQ(e.attempted_jitter()[0], 0.0);
  }
  EXPECT_NO_THROW(Posterior::fit(h, x, y));
}

TEST(Posterior, ExhaustedScheduleListsEveryLevel) {
  // A non-PSD "Gram" matrix cannot be rescued by small jitter.
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  try {
    jittered_cholesky(bad, 1.0);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    const std::vector<double> expected{1e-8, 1e-7, 1e-6, 1e-5, 1e-4};
    ASSERT_EQ(e.attempted_jitter().size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(e.attempted_jitter()[i], expected[i], 1e-12 * expected[i]);
  }
}

TEST(PosteriorInterval, EmptyDataMatchesPriorInterval) {
  const HyperParams h{0.0, 1.0, 1.0};
  const auto post = Posterior::fit(h, Eigen::MatrixXd(1, 0), Eigen::VectorXd(0));
  const auto iv = posterior_interval(post, pt(0.2), 1.64);
  EXPECT_DOUBLE_EQ(iv.lo, -1.64);
  EXPECT_DOUBLE_EQ(iv.hi, 1.64);
}

TEST(PosteriorInterval, ZeroWidthAtDatum) {
  const auto post = Posterior::fit({0.0, 1.0, 1.0}, row({0.0}), vec({2.0}));
  const auto iv = posterior_interval(post, pt(0.0), 1.64);
  EXPECT_NEAR(iv.lo, 2.0, 1e-3);
  EXPECT_NEAR(iv.hi, 2.0, 1e-3);
}

TEST(PosteriorInterval, OnePointAtUnitDistance) {
  const auto post = Posterior::fit({0.0, 1.0, 1.0}, row({0.0}), vec({2.0}));
  const auto iv = posterior_interval(post, pt(1.0), 1.0);
  EXPECT_NEAR(iv.lo, -0.194115, 1e-6);
  EXPECT_NEAR(iv.hi, 1.665633, 1e-6);
}

TEST(NegMll, ZeroResidualUnitVariance) {
  EXPECT_NEAR(neg_mll({0.0, 1.0, 1.0}, row({0.3}), vec({0.0})), 0.91893853320467274, 1e-7);
}

TEST(NegMll, ScalarGaussianDensity) {
  EXPECT_NEAR(neg_mll({0.0, 1.0, 1.0}, row({0.3}), vec({2.0})), 2.9189385332046727, 1e-7);
}

TEST(NegMll, SingularWithoutJitterFiniteWithJitter) {
  const HyperParams h{0.0, 1.0, 1.0};
  EXPECT_THROW(neg_mll(h, row({0.2, 0.2}), vec({1.0, 1.0}), JitterSchedule::none()), NumericalError);
  EXPECT_TRUE(std::isfinite(neg_mll(h, row({0.2, 0.2}), vec({1.0, 1.0}))));
}

TEST(NegMll, NeedsData) {
  EXPECT_THROW(neg_mll({}, Eigen::MatrixXd(1, 0), Eigen::VectorXd(0)), InputError);
}

TEST(NegMll, MatchesDirectDensity) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const HyperParams h{u(rng), std::exp(u(rng)), std::exp(3.0 + u(rng))};
    const auto x = random_inputs(rng, 1, 6);
    Eigen::VectorXd y(6);
    for (Eigen::Index i = 0; i < 6; ++i) y(i) = 2.0 * u(rng);
    const double expected = oracle::direct_neg_mll(h.theta, h.phi1, h.phi2, x, y, 1e-8);
    EXPECT_NEAR(neg_mll(h, x, y), expected, 1e-8 * (1.0 + std::abs(expected)));
  }
}

// Property: the jittered Gram matrix of up to 50 random inputs factors.
TEST(GpProperties, GramMatrixFactorizes) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-4.0, 6.0);
  std::uniform_int_distribution<int> count(1, 50);
  for (int trial = 0; trial < 200; ++trial) {
    const HyperParams h = HyperParams::from_log(0.0, u(rng) / 2.0, u(rng));
    const auto x = random_inputs(rng, 1 + trial % 3, count(rng));
    EXPECT_NO_THROW(jittered_cholesky(kernel_matrix(h, x, x), h.phi1 * h.phi1));
  }
}

// Property: posterior mean interpolates smooth data, variance collapses.
TEST(GpProperties, InterpolatesTrainingData) {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const HyperParams h{u(rng) - 0.5, 0.5 + 2.0 * u(rng), 10.0 + 90.0 * u(rng)};
    const Eigen::Index t = 1 + trial % 8;
    const auto x = random_inputs(rng, 1, t);
    std::mt19937_64 gp_rng(trial);
    const Eigen::VectorXd y = oracle::sample_gp(h.theta, h.phi1, h.phi2, x, gp_rng);
    const auto post = Posterior::fit(h, x, y);
    for (Eigen::Index i = 0; i < t; ++i) {
      const auto p = post.predict(x.col(i));
      // Jitter s turns exact interpolation into mean_i = y_i - s * alpha_i.
      const double shift = post.jitter() * h.phi1 * h.phi1 * std::abs(post.weights()(i));
      EXPECT_NEAR(p.mean, y(i), 1e-6 * (1.0 + std::abs(y(i))) + 1.01 * shift);
      EXPECT_LE(p.variance, 10.0 * post.jitter() * h.phi1 * h.phi1);
    }
  }
}

// Property: conditioning never increases the variance (subtraction form).
TEST(GpProperties, PosteriorVarianceBelowPrior) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const HyperParams h = HyperParams::from_log(u(rng), u(rng), 2.0 * u(rng));
    const auto x = random_inputs(rng, 1, 1 + trial % 20);
    Eigen::VectorXd y(x.cols());
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = 3.0 * u(rng);
    const auto post = Posterior::fit(h, x, y);
    const auto q = random_inputs(rng, 1, 50);
    for (const auto& p : post.predict_many(q)) {
      EXPECT_GE(p.variance, 0.0);
      EXPECT_LE(p.variance, h.phi1 * h.phi1 + 1e-8);
    }
  }
}

// Property: Cholesky path equals an explicit-inverse computation.
TEST(GpProperties, MatchesDirectInverse) {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const HyperParams h{2.0 * u(rng) - 1.0, 0.5 + u(rng), 20.0 + 80.0 * u(rng)};
    const Eigen::Index t = 1 + trial % 8;
    const auto x = random_inputs(rng, 1, t);
    Eigen::VectorXd y(t);
    for (Eigen::Index i = 0; i < t; ++i) y(i) = std::sin(5.0 * x(0, i)) + u(rng);
    const auto post = Posterior::fit(h, x, y);
    const auto q = random_inputs(rng, 1, 5);
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
      const auto got = post.predict(q.col(j));
      const auto want = oracle::direct_inverse_posterior(h.theta, h.phi1, h.phi2, x, y, q.col(j), post.jitter());
      EXPECT_LE(std::abs(got.mean - want.mean), 1e-8 * std::max(1.0, std::abs(want.mean)));
      EXPECT_LE(std::abs(got.variance - std::max(0.0, want.variance)), 1e-8 * h.phi1 * h.phi1);
    }
  }
}

// Property: analytic neg_mll gradient agrees with central differences.
TEST(GpProperties, NegMllGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  constexpr double kStep = 1e-3;
  for (int trial = 0; trial < 50; ++trial) {
    const double theta = u(rng) - 0.5;
    const double lp1 = std::log(0.5 + u(rng));
    const double lp2 = std::log(5.0 + 295.0 * u(rng));
    // Jittered grid: inputs stay at least half a cell apart.
    const Eigen::Index t = 2 + trial % 7;
    Eigen::MatrixXd x(1, t);
    for (Eigen::Index i = 0; i < t; ++i) x(0, i) = (static_cast<double>(i) + 0.3 + 0.4 * u(rng)) / static_cast<double>(t);
    Eigen::VectorXd y(x.cols());
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = std::cos(4.0 * x(0, i)) + 0.3 * u(rng);
    const auto g = neg_mll_with_gradient(HyperParams::from_log(theta, lp1, lp2), x, y);
    std::array<double, 3> z{theta, lp1, lp2};
    for (int k = 0; k < 3; ++k) {
      auto central = [&](double step) {
        auto up = z, down = z;
        up[k] += step;
        down[k] -= step;
        return (neg_mll(HyperParams::from_log(up[0], up[1], up[2]), x, y) -
                neg_mll(HyperParams::from_log(down[0], down[1], down[2]), x, y)) /
               (2.0 * step);
      };
      // Richardson-extrapolated central differences.
      const double fd = (4.0 * central(kStep / 2.0) - central(kStep)) / 3.0;
      EXPECT_LE(std::abs(fd - g.gradient[k]), 1e-4 * std::max(1.0, std::abs(g.gradient[k])))
          << "trial " << trial << " coord " << k << " jitter " << g.jitter;
    }
  }
}

// Property: intervals are nested in q.
TEST(GpProperties, IntervalsMonotoneInQ) {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const HyperParams h{0.2, 1.3, 8.0};
  const auto x = random_inputs(rng, 1, 6);
  Eigen::VectorXd y(6);
  for (Eigen::Index i = 0; i < 6; ++i) y(i) = u(rng);
  const auto post = Posterior::fit(h, x, y);
  for (int trial = 0; trial < 200; ++trial) {
    const double q = 0.01 + 3.0 * u(rng);
    const double q2 = q + 0.01 + u(rng);
    const auto at = pt(u(rng));
    EXPECT_TRUE(prior_interval(h, at, q2).contains(prior_interval(h, at, q)));
    EXPECT_TRUE(posterior_interval(post, at, q2).contains(posterior_interval(post, at, q)));
  }
}

TEST(Posterior, PredictManyMatchesPredict) {
  std::mt19937_64 rng(47);
  const HyperParams h{0.1, 1.2, 30.0};
  const auto x = random_inputs(rng, 1, 7);
  const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(7, -1.0, 1.0);
  const auto post = Posterior::fit(h, x, y);
  const auto q = random_inputs(rng, 1, 20);
  const auto many = post.predict_many(q);
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    const auto one = post.predict(q.col(j));
    EXPECT_NEAR(many[j].mean, one.mean, 1e-12);
    EXPECT_NEAR(many[j].variance, one.variance, 1e-12);
  }
}

}  // namespace
}  // namespace trustbayes::gp
