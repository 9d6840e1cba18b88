#include "agreelearn/metrics.hpp"

#include <array>
#include <cstdint>
#include <stdexcept>

namespace agreelearn {

namespace {

struct PairCounts {
  std::array<std::array<std::int64_t, 2>, 2> c{};  // c[a][b]
  std::int64_t n = 0;
};

PairCounts count_pairs(std::span<const std::int8_t> a, std::span<const std::int8_t> b) {
  if (a.size() != b.size()) throw std::invalid_argument("kappa: length mismatch");
  if (a.empty()) throw std::invalid_argument("kappa: empty input");
  PairCounts pc;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == kMissingLabel || b[i] == kMissingLabel) continue;
    pc.c[a[i]][b[i]] += 1;
    pc.n += 1;
  }
  if (pc.n == 0) throw std::invalid_argument("kappa: zero overlapping pairs");
  return pc;
}

}  // namespace

double cohens_kappa(std::span<const std::int8_t> a, std::span<const std::int8_t> b) {
  const PairCounts pc = count_pairs(a, b);
  const double n = static_cast<double>(pc.n);
  const std::int64_t row0 = pc.c[0][0] + pc.c[0][1];
  const std::int64_t row1 = pc.c[1][0] + pc.c[1][1];
  const std::int64_t col0 = pc.c[0][0] + pc.c[1][0];
  const std::int64_t col1 = pc.c[0][1] + pc.c[1][1];
  const std::int64_t agree = pc.c[0][0] + pc.c[1][1];
  if (row0 * col0 + row1 * col1 == pc.n * pc.n) {
    // Both raters constant: chance agreement is exactly 1.
    return agree == pc.n ? 1.0 : 0.0;
  }
  const double p_o = static_cast<double>(agree) / n;
  const double p_e = static_cast<double>(row0 * col0 + row1 * col1) / (n * n);
  return (p_o - p_e) / (1.0 - p_e);
}

double linear_weighted_kappa(std::span<const std::int8_t> a, std::span<const std::int8_t> b) {
  constexpr int kClasses = 2;
  const PairCounts pc = count_pairs(a, b);
  const double n = static_cast<double>(pc.n);
  std::array<std::int64_t, 2> row{}, col{};
  for (int i = 0; i < kClasses; ++i) {
    for (int j = 0; j < kClasses; ++j) {
      row[i] += pc.c[i][j];
      col[j] += pc.c[i][j];
    }
  }
  double weighted_obs = 0.0, weighted_exp = 0.0;
  for (int i = 0; i < kClasses; ++i) {
    for (int j = 0; j < kClasses; ++j) {
      const double w = std::abs(i - j) / static_cast<double>(kClasses - 1);
      weighted_obs += w * static_cast<double>(pc.c[i][j]) / n;
      weighted_exp += w * static_cast<double>(row[i]) * static_cast<double>(col[j]) / (n * n);
    }
  }
  if (weighted_exp == 0.0) {
    // Same degenerate case as Cohen's: both raters constant.
    return weighted_obs == 0.0 ? 1.0 : 0.0;
  }
  return 1.0 - weighted_obs / weighted_exp;
}

namespace {

EvalReport pool_agreement_ratio(std::span<const std::int8_t> predictions,
                                const AnnotationSet& data,
                                const std::vector<std::size_t>& pool) {
  if (predictions.size() != data.size()) {
    throw std::invalid_argument("agreement_ratio: predictions length != N");
  }
  EvalReport report;
  for (std::int8_t p : predictions) {
    if (p != kMissingLabel) ++report.n_eval;
  }

  double num_sum = 0.0;
  std::size_t num_count = 0;
  for (std::size_t j : pool) {
    const std::vector<std::int8_t> col = data.annotator_labels(j);
    try {
      const double k = cohens_kappa(predictions, col);
      report.per_annotator_kappa[data.annotator_ids()[j]] = k;
      num_sum += sigmoid(k);
      ++num_count;
    } catch (const std::invalid_argument&) {
      // No overlap with this annotator: excluded from the mean.
    }
  }
  if (num_count == 0) {
    throw std::invalid_argument("agreement_ratio: no annotator overlaps the predictions");
  }

  double den_sum = 0.0;
  std::size_t den_count = 0;
  for (std::size_t x = 0; x < pool.size(); ++x) {
    for (std::size_t y = x + 1; y < pool.size(); ++y) {
      const std::size_t j = pool[x], jp = pool[y];
      try {
        const double k = cohens_kappa(data.annotator_labels(j), data.annotator_labels(jp));
        auto key = std::make_pair(data.annotator_ids()[j], data.annotator_ids()[jp]);
        if (key.first > key.second) std::swap(key.first, key.second);
        report.inter_annotator_kappa[key] = k;
        den_sum += sigmoid(k);
        ++den_count;
      } catch (const std::invalid_argument&) {
      }
    }
  }
  if (den_count == 0) {
    throw std::invalid_argument("agreement_ratio: no annotator pair has overlapping labels");
  }

  report.delta = (num_sum / static_cast<double>(num_count)) /
                 (den_sum / static_cast<double>(den_count));
  return report;
}

}  // namespace

EvalReport agreement_ratio(std::span<const std::int8_t> predictions, const AnnotationSet& data) {
  std::vector<std::size_t> pool(data.annotator_count());
  for (std::size_t j = 0; j < pool.size(); ++j) pool[j] = j;
  return pool_agreement_ratio(predictions, data, pool);
}

EvalReport annotator_vs_rest(const AnnotationSet& data, std::size_t annotator) {
  if (annotator >= data.annotator_count()) {
    throw std::out_of_range("annotator index out of range");
  }
  std::vector<std::size_t> pool;
  for (std::size_t j = 0; j < data.annotator_count(); ++j) {
    if (j != annotator) pool.push_back(j);
  }
  const std::vector<std::int8_t> preds = data.annotator_labels(annotator);
  return pool_agreement_ratio(preds, data, pool);
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["delta"] = delta;
  j["n_eval"] = n_eval;
  j["per_annotator_kappa"] = nlohmann::json::object();
  for (const auto& [id, k] : per_annotator_kappa) j["per_annotator_kappa"][id] = k;
  j["inter_annotator_kappa"] = nlohmann::json::object();
  for (const auto& [pair, k] : inter_annotator_kappa) {
    j["inter_annotator_kappa"][pair.first + "|" + pair.second] = k;
  }
  return j;
}

}  // namespace agreelearn
