#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cppf/error.hpp"
#include "cppf/objectives.hpp"
#include "support.hpp"

namespace cppf {
namespace {

using testing::brute_force_supcon;
using testing::random_unit_rows;
using testing::Rows;
using testing::to_matrix;

struct Sst2Fixture {
  TaskSpec spec = get_task("SST-2");
  Tokenizer tok{Vocabulary::build({"It was great terrible okay"}), 32};
  int great = tok.vocab().id("great");
  int terrible = tok.vocab().id("terrible");

  Vector logits(double g, double t) const {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(tok.vocab().size()));
    v(great) = g;
    v(terrible) = t;
    return v;
  }
};

TEST(RestrictedSoftmax, SigmoidOfTheLogitGap) {
  Sst2Fixture f;
  auto v = f.logits(2.0, 0.0);
  v(f.tok.vocab().id("okay")) = 50.0;  // other vocabulary entries do not matter
  const auto dist = class_probabilities(v, f.spec, f.tok);
  EXPECT_NEAR(dist.at("positive"), 0.880797, 1e-6);
  EXPECT_NEAR(dist.at("positive"), 1.0 / (1.0 + std::exp(-2.0)), 1e-12);
  EXPECT_EQ(dist.labels[dist.argmax()], "positive");
}

TEST(RestrictedSoftmax, MatchesFullSoftmaxRenormalizedForEveryTask) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> normal(0.0, 3.0);
  for (const auto& name : builtin_task_names()) {
    const auto& spec = get_task(name);
    std::vector<std::string> words;
    for (const auto& l : spec.labels()) words.push_back(spec.verbalizer(l));
    const Tokenizer tok(Vocabulary::build({"filler words here"}, words), 16);
    const auto ids = verbalizer_ids(spec, tok);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> logits(tok.vocab().size());
      for (auto& l : logits) l = normal(gen);
      const Vector v = Eigen::Map<const Vector>(logits.data(), static_cast<Eigen::Index>(logits.size()));
      const auto dist = class_probabilities(v, spec, tok);
      const auto expected = testing::restricted_full_softmax(logits, ids);
      double total = 0.0;
      for (std::size_t i = 0; i < expected.size(); ++i) {
        EXPECT_NEAR(dist.probs[i], expected[i], 1e-9) << name;
        total += dist.probs[i];
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

TEST(MlmLoss, EqualLogitsGiveLnTwoPerExample) {
  Sst2Fixture f;
  const auto one = mlm_loss({f.logits(0.3, 0.3)}, {"negative"}, f.spec, f.tok);
  EXPECT_NEAR(one.loss, std::numbers::ln2, 1e-12);
  const auto two = mlm_loss({f.logits(0.3, 0.3), f.logits(-1.0, -1.0)}, {"negative", "positive"},
                            f.spec, f.tok);
  EXPECT_NEAR(two.loss, 2 * std::numbers::ln2, 1e-12);
}

TEST(MlmLoss, SumOfNegativeLogProbsWithSoftmaxGradient) {
  Sst2Fixture f;
  std::mt19937_64 gen(1);
  std::normal_distribution<double> normal(0.0, 2.0);
  std::vector<Vector> logits;
  std::vector<std::string> labels;
  double expected = 0.0;
  for (int i = 0; i < 6; ++i) {
    const double g = normal(gen), t = normal(gen);
    logits.push_back(f.logits(g, t));
    labels.push_back(i % 2 ? "positive" : "negative");
    const double pg = std::exp(g) / (std::exp(g) + std::exp(t));
    expected += -std::log(labels.back() == "positive" ? pg : 1.0 - pg);
  }
  const auto r = mlm_loss(logits, labels, f.spec, f.tok);
  EXPECT_NEAR(r.loss, expected, 1e-12);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double pg = class_probabilities(logits[i], f.spec, f.tok).at("positive");
    const double target = labels[i] == "positive" ? 1.0 : 0.0;
    EXPECT_NEAR(r.d_logits[i](f.great), pg - target, 1e-12);
    EXPECT_NEAR(r.d_logits[i](f.terrible), (1.0 - pg) - (1.0 - target), 1e-12);
    EXPECT_EQ(r.d_logits[i].cwiseAbs().sum(), std::abs(r.d_logits[i](f.great)) + std::abs(r.d_logits[i](f.terrible)));
  }
  // Doubling the batch doubles the loss.
  auto twice_logits = logits;
  auto twice_labels = labels;
  twice_logits.insert(twice_logits.end(), logits.begin(), logits.end());
  twice_labels.insert(twice_labels.end(), labels.begin(), labels.end());
  EXPECT_NEAR(mlm_loss(twice_logits, twice_labels, f.spec, f.tok).loss, 2 * r.loss, 1e-10);
}

TEST(SupCon, TwoViewsOfOneClassHaveZeroLoss) {
  std::mt19937_64 gen(2);
  const auto z = random_unit_rows(2, 5, gen);
  const auto r = supcon_loss({to_matrix(z), {0, 0}, 0.3});
  EXPECT_NEAR(r.loss, 0.0, 1e-12);
}

TEST(SupCon, ThreeOrthogonalSameClassRowsGiveLnTwoEach) {
  const Rows z = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  const auto r = supcon_loss({to_matrix(z), {1, 1, 1}, 0.3});
  // Every anchor sees two equal-similarity positives out of two candidates.
  EXPECT_NEAR(r.loss, 3 * std::numbers::ln2, 1e-12);
  EXPECT_NEAR(r.loss, brute_force_supcon(z, {1, 1, 1}, 0.3), 1e-12);
}

TEST(SupCon, MatchesBruteForceOracle) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto z = random_unit_rows(8, 6, gen);
    std::vector<int> labels(8);
    for (auto& l : labels) l = static_cast<int>(gen() % 3);
    labels[0] = labels[1];
    const double tau = trial % 2 ? 0.3 : 0.07;
    const auto r = supcon_loss({to_matrix(z), labels, tau});
    EXPECT_NEAR(r.loss, brute_force_supcon(z, labels, tau), 1e-9 * std::max(1.0, r.loss));
  }
}

TEST(SupCon, InvariantToRotationAndPermutation) {
  std::mt19937_64 gen(4);
  const auto z = random_unit_rows(8, 4, gen);
  const std::vector<int> labels = {0, 0, 1, 1, 2, 2, 0, 1};
  const double base = supcon_loss({to_matrix(z), labels, 0.3}).loss;

  // Random orthogonal matrix from a QR decomposition.
  Matrix g(4, 4);
  std::normal_distribution<double> normal;
  for (Eigen::Index i = 0; i < 16; ++i) g(i / 4, i % 4) = normal(gen);
  const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
  EXPECT_NEAR(supcon_loss({to_matrix(z) * q, labels, 0.3}).loss, base, 1e-8);

  const std::vector<std::size_t> perm = {3, 7, 0, 5, 1, 6, 2, 4};
  Rows zp;
  std::vector<int> lp;
  for (auto i : perm) {
    zp.push_back(z[i]);
    lp.push_back(labels[i]);
  }
  EXPECT_NEAR(supcon_loss({to_matrix(zp), lp, 0.3}).loss, base, 1e-10);
}

TEST(SupCon, AnchorsWithoutPositivesAndDegenerateBatches) {
  std::mt19937_64 gen(6);
  const auto z = random_unit_rows(4, 3, gen);
  const auto r = supcon_loss({to_matrix(z), {0, 0, 1, 2}, 0.3});
  EXPECT_EQ(r.anchors_without_positive, 2u);
  EXPECT_NEAR(r.loss, brute_force_supcon(z, {0, 0, 1, 2}, 0.3), 1e-12);
  EXPECT_GT(r.d_features.row(2).norm(), 0.0);  // still a negative for anchors 0 and 1
  EXPECT_THROW(supcon_loss({to_matrix(z), {0, 1, 2, 3}, 0.3}), Error);
  Matrix scaled = to_matrix(z) * 2.0;
  EXPECT_THROW(supcon_loss({scaled, {0, 0, 1, 1}, 0.3}), Error);
  EXPECT_THROW(supcon_loss({to_matrix(z), {0, 0, 1}, 0.3}), Error);
}

TEST(SupCon, GradientMatchesCentralDifferencesOfTheOracle) {
  std::mt19937_64 gen(7);
  const auto z = random_unit_rows(6, 4, gen);
  const std::vector<int> labels = {0, 0, 1, 1, 0, 1};
  const auto r = supcon_loss({to_matrix(z), labels, 0.3});
  const double eps = 1e-6;
  for (std::size_t i = 0; i < z.size(); ++i) {
    for (std::size_t j = 0; j < z[i].size(); ++j) {
      auto up = z, down = z;
      up[i][j] += eps;
      down[i][j] -= eps;
      const double numeric =
          (brute_force_supcon(up, labels, 0.3) - brute_force_supcon(down, labels, 0.3)) / (2 * eps);
      EXPECT_NEAR(r.d_features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), numeric, 1e-7);
    }
  }
}

TEST(NormalizeRows, UnitRowsAndBackwardMatchesDifferences) {
  Matrix h(3, 4);
  h << 1, 2, 3, 4, -1, 0.5, 0, 2, 0.1, 0.2, -0.3, 0.4;
  const Matrix z = normalize_rows(h);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(z.row(i).norm(), 1.0, 1e-15);
  Matrix up_stream(3, 4);
  up_stream << 0.3, -1, 2, 0.5, 1, 1, -1, 0, 0.2, 0.1, 0.7, -0.4;
  const Matrix g = normalize_rows_backward(h, up_stream);
  const double eps = 1e-6;
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) {
      Matrix a = h, b = h;
      a(i, j) += eps;
      b(i, j) -= eps;
      const double numeric = ((normalize_rows(a) - normalize_rows(b)).cwiseProduct(up_stream).sum()) / (2 * eps);
      EXPECT_NEAR(g(i, j), numeric, 1e-8);
    }
  }
}

TEST(TotalLoss, UnweightedSumAndFiniteness) {
  EXPECT_DOUBLE_EQ(total_loss(0.7, 0.3), 1.0);
  EXPECT_DOUBLE_EQ(total_loss(0.7, 0.3, 0.5), 0.85);
  EXPECT_THROW(total_loss(std::nan(""), 0.3), NumericError);
  EXPECT_THROW(total_loss(0.7, std::numeric_limits<double>::infinity()), NumericError);
}

}  // namespace
}  // namespace cppf
