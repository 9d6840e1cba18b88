#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "agreelearn/losses.hpp"
#include "oracles.hpp"

using namespace agreelearn;

namespace {
constexpr std::int8_t M = kMissingLabel;
}

TEST_CASE("ar loss hand-worked values") {
  CHECK(ar_loss(0.3, 0.3).value == doctest::Approx(0.0));
  CHECK(ar_loss(0.6, 0.8).value == doctest::Approx(0.04));
  CHECK(ar_loss(0.9, 0.8).value == doctest::Approx(0.08));
  // alpha = 0.5 is the symmetric pinball at the median.
  for (double y : {0.0, 0.2, 0.5, 0.7, 1.0}) {
    CHECK(ar_loss(y, 0.5).value == doctest::Approx(0.5 * std::abs(y - 0.5)));
  }
  CHECK_THROWS_AS(ar_loss(1.2, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(ar_loss(0.5, -0.1), std::invalid_argument);
}

TEST_CASE("ar loss equals the reference pinball loss with quantile alpha") {
  for (int yi = 0; yi <= 100; ++yi) {
    for (double alpha : {0.0, 0.1, 0.25, 0.5, 0.8, 0.97, 1.0}) {
      const double y = yi / 100.0;
      CHECK(ar_loss(y, alpha).value == doctest::Approx(oracle::pinball(y, alpha, alpha))
                                           .epsilon(1e-15));
    }
  }
}

TEST_CASE("ar loss convexity, sign, and subgradient") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double alpha = unif(rng);
    const double a = unif(rng), b = unif(rng), t = unif(rng);
    const double mid = t * a + (1 - t) * b;
    CHECK(ar_loss(mid, alpha).value <=
          t * ar_loss(a, alpha).value + (1 - t) * ar_loss(b, alpha).value + 1e-12);
    CHECK(ar_loss(a, alpha).value >= 0.0);
    // Zero iff at the target.
    if (std::abs(a - alpha) > 1e-9) CHECK(ar_loss(a, alpha).value > 0.0);
    // Stated subgradient.
    const ScalarLoss l = ar_loss(a, alpha);
    if (a > alpha) CHECK(l.grad == doctest::Approx(alpha));
    if (a < alpha) CHECK(l.grad == doctest::Approx(alpha - 1.0));
  }
}

TEST_CASE("rmse loss values and gradient") {
  const std::vector<double> y{0.5, 0.9}, a{0.3, 0.7};
  const VectorLoss l = rmse_loss(y, a);
  CHECK(l.value == doctest::Approx(0.2));
  CHECK(l.grad[0] == doctest::Approx(0.2 / (2 * 0.2)));

  CHECK(rmse_loss(std::vector<double>{0.4, 0.6}, std::vector<double>{0.4, 0.6}).value ==
        doctest::Approx(0.0));
  CHECK(rmse_loss(std::vector<double>{1.0, 1.0}, std::vector<double>{0.0, 0.0}).value ==
        doctest::Approx(1.0));
  // Zero gradient at a perfect fit.
  const VectorLoss zero = rmse_loss(std::vector<double>{0.2}, std::vector<double>{0.2});
  CHECK(zero.grad[0] == 0.0);
  CHECK_THROWS_AS(rmse_loss(std::vector<double>{0.1}, std::vector<double>{0.1, 0.2}),
                  std::invalid_argument);
}

TEST_CASE("rmse gradient matches finite differences") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.05, 0.95);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t b = 2 + rng() % 16;
    std::vector<double> y(b), a(b);
    for (std::size_t i = 0; i < b; ++i) {
      y[i] = unif(rng);
      a[i] = unif(rng);
    }
    const VectorLoss l = rmse_loss(y, a);
    const double h = 1e-6;
    for (std::size_t i = 0; i < b; ++i) {
      auto yp = y, ym = y;
      yp[i] += h;
      ym[i] -= h;
      const double fd = (rmse_loss(yp, a).value - rmse_loss(ym, a).value) / (2 * h);
      CHECK(l.grad[i] == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("focal loss hand-worked values") {
  CHECK(focal_loss(0.5, 1, 0.0).value == doctest::Approx(-std::log(0.5)));
  CHECK(focal_loss(0.9, 1, 2.0).value == doctest::Approx(-0.01 * std::log(0.9)));
  CHECK(focal_loss(0.9, 1, 2.0).value == doctest::Approx(0.001054).epsilon(1e-3));
  // Modulating factor vanishes as p approaches the target.
  CHECK(focal_loss(1.0 - 1e-7, 1, 2.0).value < 1e-10);
  CHECK(focal_loss(1e-7, 0, 2.0).value < 1e-10);
  CHECK_THROWS_AS(focal_loss(0.5, 1, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(focal_loss(0.5, 2, 1.0), std::invalid_argument);
}

TEST_CASE("focal loss gradient matches central finite differences on a grid") {
  const double h = 1e-5;
  for (double gamma : {0.0, 0.5, 1.0, 2.0, 5.0}) {
    for (int g : {0, 1}) {
      for (int pi = 1; pi <= 99; ++pi) {
        const double p = pi / 100.0;
        const ScalarLoss l = focal_loss(p, g, gamma);
        const double fd = (focal_loss(p + h, g, gamma).value - focal_loss(p - h, g, gamma).value)
                          / (2 * h);
        const double scale = std::max({std::abs(fd), std::abs(l.grad), 1.0});
        CHECK(std::abs(l.grad - fd) / scale < 1e-4);
      }
    }
  }
}

TEST_CASE("gamma from effective numbers") {
  CHECK(gamma_effective_number(50, 100) == 1.0);  // balanced, exactly
  CHECK(gamma_effective_number(90, 100) == doctest::Approx(6.23).epsilon(0.01));
  CHECK_THROWS_AS(gamma_effective_number(0, 100), std::invalid_argument);
  CHECK_THROWS_AS(gamma_effective_number(100, 100), std::invalid_argument);
  CHECK_THROWS_AS(gamma_effective_number(1, 1), std::invalid_argument);

  // Monotone increasing in the majority count, and >= 1 past the midpoint.
  double prev = 0.0;
  for (std::size_t n_maj = 51; n_maj <= 99; ++n_maj) {
    const double g = gamma_effective_number(n_maj, 100);
    CHECK(g > prev);
    CHECK(g >= 1.0);
    prev = g;
  }
  CHECK(gamma_effective_number(51, 100) > 1.0);
  CHECK(gamma_effective_number(51, 100) == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("wkl loss reference points") {
  // Chance-level predictions: soft kappa 0, raw log 1 = 0, sigmoid 0.5.
  const std::vector<double> half(6, 0.5);
  const std::vector<std::int8_t> labels{1, 0, 1, 0, 1, 0};
  const WklLoss chance = wkl_loss(half, labels);
  CHECK(chance.kappa == doctest::Approx(0.0));
  CHECK(chance.raw == doctest::Approx(0.0));
  CHECK(chance.value == doctest::Approx(0.5));

  // Perfect agreement: kappa clamps just below 1.
  std::vector<double> exact{1, 0, 1, 0, 1, 0};
  const WklLoss perfect = wkl_loss(exact, labels);
  CHECK(perfect.kappa == doctest::Approx(1.0 - 1e-7));
  CHECK(perfect.raw == doctest::Approx(std::log(1e-7)));

  // Anti-aligned on balanced labels: kappa -1, raw at the log 2 upper bound.
  std::vector<double> anti{0, 1, 0, 1, 0, 1};
  const WklLoss worst = wkl_loss(anti, labels);
  CHECK(worst.kappa == doctest::Approx(-1.0));
  CHECK(worst.raw == doctest::Approx(std::log(2.0)));
  CHECK(worst.value == doctest::Approx(oracle::logistic(std::log(2.0))));

  CHECK_THROWS_AS(wkl_loss(std::vector<double>{0.5}, std::vector<std::int8_t>{1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(wkl_loss(half, std::vector<std::int8_t>{1, 1, 1, 1, 1, 1}),
                  std::invalid_argument);
}

TEST_CASE("wkl raw value never exceeds log 2") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unif(0.01, 0.99);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t b = 4 + rng() % 32;
    std::vector<double> p(b);
    std::vector<std::int8_t> g(b);
    for (std::size_t i = 0; i < b; ++i) {
      p[i] = unif(rng);
      g[i] = static_cast<std::int8_t>(rng() % 2);
    }
    g[0] = 0;
    g[1] = 1;
    CHECK(wkl_loss(p, g).raw <= std::log(2.0) + 1e-12);
  }
}

TEST_CASE("wkl gradient matches finite differences") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unif(0.05, 0.95);
  const double h = 1e-6;
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t b = 4 + rng() % 61;
    std::vector<double> p(b);
    std::vector<std::int8_t> g(b);
    for (std::size_t i = 0; i < b; ++i) {
      p[i] = unif(rng);
      g[i] = static_cast<std::int8_t>(rng() % 2);
    }
    g[0] = 0;
    g[1] = 1;
    const WklLoss l = wkl_loss(p, g);
    for (std::size_t i = 0; i < b; i += 1 + b / 8) {
      auto pp = p, pm = p;
      pp[i] += h;
      pm[i] -= h;
      const double fd = (wkl_loss(pp, g).value - wkl_loss(pm, g).value) / (2 * h);
      const double scale = std::max({std::abs(fd), std::abs(l.grad[i]), 1e-3});
      CHECK(std::abs(l.grad[i] - fd) / scale < 1e-3);
    }
  }
}

TEST_CASE("multi-annotator focal aggregate") {
  SUBCASE("single annotator, all labels present: the plain batch mean") {
    const std::vector<double> p{0.7, 0.3, 0.9};
    LabelGrid grid{3, 1, {1, 0, 1}};
    const std::vector<double> gamma{0.0};
    const MultiAnnotatorLoss l = multi_annotator_loss(p, grid, gamma, InnerLoss::Focal);
    const double expected =
        (-std::log(0.7) - std::log(1 - 0.3) - std::log(0.9)) / 3.0;
    CHECK(l.value == doctest::Approx(expected));
    CHECK(l.contributing == 1);
  }

  SUBCASE("duplicate annotators average to the single-annotator value") {
    const std::vector<double> p{0.7, 0.3, 0.9, 0.2};
    LabelGrid one{4, 1, {1, 0, 1, 0}};
    LabelGrid two{4, 2, {1, 1, 0, 0, 1, 1, 0, 0}};
    const std::vector<double> g1{1.5}, g2{1.5, 1.5};
    CHECK(multi_annotator_loss(p, two, g2, InnerLoss::Focal).value ==
          doctest::Approx(multi_annotator_loss(p, one, g1, InnerLoss::Focal).value));
  }

  SUBCASE("partly labeled annotator contributes the mean over its labels only") {
    // Annotator 2 labels 3 of 10 samples.
    const std::size_t b = 10;
    std::vector<double> p(b);
    for (std::size_t i = 0; i < b; ++i) p[i] = 0.05 + 0.09 * double(i);
    LabelGrid grid{b, 2, std::vector<std::int8_t>(b * 2, M)};
    std::vector<std::vector<std::int8_t>> rows(b, std::vector<std::int8_t>(2, M));
    for (std::size_t i = 0; i < b; ++i) {
      grid.labels[i * 2] = static_cast<std::int8_t>(i % 2);
      rows[i][0] = static_cast<std::int8_t>(i % 2);
    }
    for (std::size_t i : {2, 5, 7}) {
      grid.labels[i * 2 + 1] = 1;
      rows[i][1] = 1;
    }
    const std::vector<double> gamma{2.0, 0.5};
    const MultiAnnotatorLoss l = multi_annotator_loss(p, grid, gamma, InnerLoss::Focal);
    CHECK(std::abs(l.value - oracle::multi_annotator_focal(p, rows, gamma)) < 1e-12);
  }

  SUBCASE("error when nobody labeled the batch") {
    const std::vector<double> p{0.5, 0.5};
    LabelGrid grid{2, 2, {M, M, M, M}};
    const std::vector<double> gamma{0.0, 0.0};
    CHECK_THROWS_AS(multi_annotator_loss(p, grid, gamma, InnerLoss::Focal),
                    std::invalid_argument);
  }
}

TEST_CASE("multi-annotator focal equals the brute-force double loop on random grids") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unif(0.02, 0.98);
  std::uniform_real_distribution<double> gdist(0.0, 4.0);
  std::uniform_int_distribution<int> tri(0, 3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t b = 2 + rng() % 24;
    const std::size_t j = 1 + rng() % 5;
    std::vector<double> p(b);
    for (auto& v : p) v = unif(rng);
    LabelGrid grid{b, j, std::vector<std::int8_t>(b * j)};
    std::vector<std::vector<std::int8_t>> rows(b, std::vector<std::int8_t>(j));
    bool any = false;
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t a = 0; a < j; ++a) {
        const int t = tri(rng);
        const std::int8_t v = t == 0 ? M : static_cast<std::int8_t>(t % 2);
        grid.labels[i * j + a] = v;
        rows[i][a] = v;
        any |= v != M;
      }
    }
    if (!any) {
      grid.labels[0] = 1;
      rows[0][0] = 1;
    }
    std::vector<double> gamma(j);
    for (auto& g : gamma) g = gdist(rng);
    const MultiAnnotatorLoss l = multi_annotator_loss(p, grid, gamma, InnerLoss::Focal);
    CHECK(std::abs(l.value - oracle::multi_annotator_focal(p, rows, gamma)) < 1e-12);

    // Gradient against finite differences on a few coordinates.
    const double h = 1e-6;
    for (std::size_t i = 0; i < b; i += 1 + b / 4) {
      auto pp = p, pm = p;
      pp[i] += h;
      pm[i] -= h;
      const double fd = (multi_annotator_loss(pp, grid, gamma, InnerLoss::Focal).value -
                         multi_annotator_loss(pm, grid, gamma, InnerLoss::Focal).value) /
                        (2 * h);
      CHECK(l.grad[i] == doctest::Approx(fd).epsilon(1e-4));
    }
  }
}

TEST_CASE("multi-annotator wkl skips unusable annotator batches") {
  const std::vector<double> p{0.8, 0.2, 0.7, 0.4};
  // Annotator 1 usable; annotator 2 single-class; annotator 3 one label only.
  LabelGrid grid{4, 3, {1, 1, M, 0, 1, 1, 1, 1, M, 0, 1, M}};
  const MultiAnnotatorLoss l = multi_annotator_loss(p, grid, {}, InnerLoss::Wkl);
  CHECK(l.contributing == 1);
  CHECK(l.skipped == 2);

  const WklLoss direct = wkl_loss(p, std::vector<std::int8_t>{1, 0, 1, 0});
  CHECK(l.value == doctest::Approx(direct.value));

  // All annotators unusable: zero loss, not an error.
  LabelGrid all_single{4, 1, {1, 1, 1, 1}};
  const MultiAnnotatorLoss zero = multi_annotator_loss(p, all_single, {}, InnerLoss::Wkl);
  CHECK(zero.value == 0.0);
  CHECK(zero.contributing == 0);
  CHECK(zero.skipped == 1);
}

TEST_CASE("joint batch loss composes the two streams") {
  const std::vector<double> p{0.6, 0.4, 0.8};
  const std::vector<double> y{0.5, 0.5, 0.9};
  const std::vector<double> alpha{1.0, 0.0, 1.0};
  LabelGrid grid{3, 1, {1, 0, 1}};
  const std::vector<double> gamma{0.0};

  LossConfig cfg;
  cfg.agreement_loss = AgreementLoss::Ar;
  cfg.stream_weight = 2.0;
  const JointLoss joint = joint_batch_loss(p, y, grid, alpha, cfg, gamma);

  const double cls = multi_annotator_loss(p, grid, gamma, InnerLoss::Focal).value;
  double agr = 0.0;
  for (std::size_t i = 0; i < 3; ++i) agr += ar_loss(y[i], alpha[i]).value / 3.0;
  CHECK(joint.classifier == doctest::Approx(cls));
  CHECK(joint.agreement == doctest::Approx(agr));
  CHECK(joint.total == doctest::Approx(cls + 2.0 * agr));
  // d_y_hat carries the stream weight.
  CHECK(joint.d_y_hat[0] == doctest::Approx(2.0 * ar_loss(y[0], alpha[0]).grad / 3.0));

  LossConfig no_agreement;
  const JointLoss only_cls = joint_batch_loss(p, y, grid, alpha, no_agreement, gamma);
  CHECK(only_cls.agreement == 0.0);
  CHECK(only_cls.total == doctest::Approx(cls));
}
