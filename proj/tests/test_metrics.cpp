#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "agreelearn/metrics.hpp"
#include "oracles.hpp"

using namespace agreelearn;

namespace {

constexpr std::int8_t M = kMissingLabel;

std::vector<std::int8_t> v8(std::initializer_list<int> values) {
  std::vector<std::int8_t> out;
  for (int v : values) out.push_back(static_cast<std::int8_t>(v));
  return out;
}

AnnotationSet from_columns(const std::vector<std::vector<std::int8_t>>& columns) {
  const std::size_t j = columns.size();
  const std::size_t n = columns[0].size();
  std::vector<Sample> samples;
  std::vector<std::int8_t> labels;
  for (std::size_t i = 0; i < n; ++i) {
    samples.push_back({"s" + std::to_string(i), {double(i)}});
    for (std::size_t a = 0; a < j; ++a) labels.push_back(columns[a][i]);
  }
  std::vector<std::string> ids;
  for (std::size_t a = 0; a < j; ++a) ids.push_back("a" + std::to_string(a + 1));
  return AnnotationSet(std::move(samples), std::move(ids), std::move(labels));
}

}  // namespace

TEST_CASE("cohens kappa on hand-worked cases") {
  CHECK(cohens_kappa(v8({1, 1, 0, 0}), v8({1, 1, 0, 0})) == doctest::Approx(1.0));
  // Full disagreement with balanced marginals: p_o = 0, p_e = 0.5.
  CHECK(cohens_kappa(v8({1, 1, 0, 0}), v8({0, 0, 1, 1})) == doctest::Approx(-1.0));
  // p_o = 0.5 equals chance: p_e = 0.5.
  CHECK(cohens_kappa(v8({1, 0, 1, 0}), v8({1, 0, 0, 1})) == doctest::Approx(0.0));
}

TEST_CASE("cohens kappa degenerate and error cases") {
  CHECK(cohens_kappa(v8({1, 1, 1}), v8({1, 1, 1})) == doctest::Approx(1.0));
  CHECK(cohens_kappa(v8({0, 0}), v8({0, 0})) == doctest::Approx(1.0));
  // Constant but different raters: p_e = 0, kappa = 0 via the main formula.
  CHECK(cohens_kappa(v8({1, 1}), v8({0, 0})) == doctest::Approx(0.0));
  CHECK_THROWS_AS(cohens_kappa(v8({1, M}), v8({M, 1})), std::invalid_argument);
  CHECK_THROWS_AS(cohens_kappa(v8({1, 0}), v8({1})), std::invalid_argument);
}

TEST_CASE("kappa drops pairs where either side is missing") {
  // Overlap is rows 0 and 3 only.
  const double k = cohens_kappa(v8({1, M, 1, 0}), v8({1, 0, M, 0}));
  CHECK(k == doctest::Approx(1.0));
}

TEST_CASE("linear weighted kappa reduces to cohens kappa on binary data") {
  CHECK(linear_weighted_kappa(v8({1, 1, 0, 0}), v8({1, 0, 0, 0})) ==
        doctest::Approx(cohens_kappa(v8({1, 1, 0, 0}), v8({1, 0, 0, 0}))));
  CHECK(linear_weighted_kappa(v8({1, 0, 1, 0}), v8({1, 0, 1, 0})) == doctest::Approx(1.0));
  CHECK(linear_weighted_kappa(v8({1, 1, 0, 0}), v8({0, 0, 1, 1})) == doctest::Approx(-1.0));

  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> bit(0, 1);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng() % 40;
    std::vector<std::int8_t> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = static_cast<std::int8_t>(bit(rng));
      b[i] = static_cast<std::int8_t>(bit(rng));
    }
    const double kc = cohens_kappa(a, b);
    const double kw = linear_weighted_kappa(a, b);
    CHECK(std::abs(kc - kw) < 1e-12);
    // Symmetry of both forms.
    CHECK(cohens_kappa(b, a) == doctest::Approx(kc).epsilon(1e-12));
    CHECK(linear_weighted_kappa(b, a) == doctest::Approx(kw).epsilon(1e-12));
  }
}

TEST_CASE("agreement ratio on two identical annotators") {
  const auto col = v8({1, 0, 1, 0, 1, 1});
  const AnnotationSet data = from_columns({col, col});
  const EvalReport report = agreement_ratio(col, data);
  CHECK(report.delta == doctest::Approx(1.0));
  CHECK(report.n_eval == 6);
  CHECK(report.per_annotator_kappa.size() == 2);
  CHECK(report.inter_annotator_kappa.size() == 1);
}

TEST_CASE("agreement ratio with kappa0 = 0 between annotators") {
  // R1 vs R2 gives kappa 0 (chance agreement), predictions equal R1.
  const auto r1 = v8({1, 0, 1, 0});
  const auto r2 = v8({1, 0, 0, 1});
  const AnnotationSet data = from_columns({r1, r2});
  const EvalReport report = agreement_ratio(r1, data);
  const double expected = 0.5 * (oracle::logistic(1.0) + 0.5) / 0.5;
  CHECK(report.delta == doctest::Approx(expected).epsilon(1e-12));
  CHECK(report.delta == doctest::Approx(1.2311).epsilon(1e-4));
}

TEST_CASE("delta is invariant under annotator order and global relabeling") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> tri(0, 5);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 12 + rng() % 20;
    const std::size_t j = 2 + rng() % 4;
    std::vector<std::vector<std::int8_t>> cols(j, std::vector<std::int8_t>(n));
    for (auto& col : cols) {
      for (auto& v : col) {
        const int t = tri(rng);
        v = t == 0 ? M : static_cast<std::int8_t>(t % 2);
      }
    }
    // Padding first column to keep every sample labeled.
    for (std::size_t i = 0; i < n; ++i) {
      bool any = false;
      for (auto& col : cols) any |= col[i] != M;
      if (!any) cols[0][i] = 1;
    }
    std::vector<std::int8_t> preds(n);
    for (auto& p : preds) p = static_cast<std::int8_t>(rng() % 2);

    double base;
    try {
      base = agreement_ratio(preds, from_columns(cols)).delta;
    } catch (const std::invalid_argument&) {
      continue;  // no valid pair in this draw
    }

    auto reversed = cols;
    std::reverse(reversed.begin(), reversed.end());
    CHECK(agreement_ratio(preds, from_columns(reversed)).delta ==
          doctest::Approx(base).epsilon(1e-12));

    auto flipped = cols;
    for (auto& col : flipped) {
      for (auto& v : col) {
        if (v != M) v = static_cast<std::int8_t>(1 - v);
      }
    }
    auto preds_flipped = preds;
    for (auto& v : preds_flipped) v = static_cast<std::int8_t>(1 - v);
    CHECK(agreement_ratio(preds_flipped, from_columns(flipped)).delta ==
          doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("agreement ratio matches the brute-force oracle on random instances") {
  std::mt19937_64 rng(20250810);
  std::uniform_int_distribution<int> tri(0, 5);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 10 + rng() % 60;
    const std::size_t j = 2 + rng() % 5;
    std::vector<std::vector<std::int8_t>> cols(j, std::vector<std::int8_t>(n));
    for (auto& col : cols) {
      for (auto& v : col) {
        const int t = tri(rng);
        v = t == 0 ? M : static_cast<std::int8_t>(t % 2);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      bool any = false;
      for (auto& col : cols) any |= col[i] != M;
      if (!any) cols[0][i] = 0;
    }
    std::vector<std::int8_t> preds(n);
    for (auto& p : preds) p = static_cast<std::int8_t>(rng() % 2);

    const auto expected = oracle::delta(preds, cols);
    if (!expected) {
      CHECK_THROWS_AS(agreement_ratio(preds, from_columns(cols)), std::invalid_argument);
      continue;
    }
    const EvalReport report = agreement_ratio(preds, from_columns(cols));
    CHECK(std::abs(report.delta - *expected) < 1e-12);
    ++checked;
  }
  CHECK(checked > 150);
}

TEST_CASE("annotator vs rest") {
  const auto r1 = v8({1, 0, 1, 0, 1, 0, 1, 1});
  const auto r2 = v8({1, 0, 1, 0, 1, 0, 0, 1});
  const auto r3 = v8({1, 0, 1, 1, 1, 0, 1, 0});
  const AnnotationSet data = from_columns({r1, r2, r3});

  const EvalReport report = annotator_vs_rest(data, 0);
  const auto expected = oracle::delta(r1, {r2, r3});
  REQUIRE(expected.has_value());
  CHECK(report.delta == doctest::Approx(*expected).epsilon(1e-12));
  // The pool excludes the annotator under test.
  CHECK(report.per_annotator_kappa.count("a1") == 0);
  CHECK(report.inter_annotator_kappa.size() == 1);

  CHECK_THROWS_AS(annotator_vs_rest(data, 5), std::out_of_range);

  // J = 2 leaves no pair in the rest: degenerate denominator.
  const AnnotationSet two = from_columns({r1, r2});
  CHECK_THROWS_AS(annotator_vs_rest(two, 0), std::invalid_argument);
}

TEST_CASE("annotator identical to every other annotator gives delta 1") {
  const auto col = v8({1, 0, 0, 1, 1, 0});
  const AnnotationSet data = from_columns({col, col, col, col});
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(annotator_vs_rest(data, j).delta == doctest::Approx(1.0));
  }
}

TEST_CASE("eval report serializes the documented schema") {
  const auto col = v8({1, 0, 1, 0});
  const AnnotationSet data = from_columns({col, col});
  const nlohmann::json j = agreement_ratio(col, data).to_json();
  CHECK(j.contains("delta"));
  CHECK(j.contains("per_annotator_kappa"));
  CHECK(j.contains("inter_annotator_kappa"));
  CHECK(j.contains("n_eval"));
  CHECK(j["per_annotator_kappa"]["a1"].get<double>() == doctest::Approx(1.0));
  CHECK(j["inter_annotator_kappa"]["a1|a2"].get<double>() == doctest::Approx(1.0));
}
