#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>

#include <json.hpp>

#include "agreelearn/dataset.hpp"

namespace agreelearn {

/// Agreement-ratio evaluation against an annotator pool. `delta` is the mean
/// sigmoid-kappa of the predictions against each annotator divided by the
/// mean sigmoid-kappa among annotator pairs; pairs without overlapping
/// labels are dropped from both means.
struct EvalReport {
  std::map<std::string, double> per_annotator_kappa;
  std::map<std::pair<std::string, std::string>, double> inter_annotator_kappa;
  double delta = 0.0;
  std::size_t n_eval = 0;

  nlohmann::json to_json() const;
};

/// Cohen's kappa over the pairs where both vectors carry a label. Vectors are
/// tri-state (kMissingLabel entries are skipped pairwise). Throws
/// std::invalid_argument when no pair overlaps. If chance agreement is exactly
/// 1 (both raters constant), returns 1 for identical vectors and 0 otherwise.
double cohens_kappa(std::span<const std::int8_t> a, std::span<const std::int8_t> b);

/// Weighted kappa with linear penalty |a-b|/(K-1); coincides with Cohen's
/// kappa for the binary case.
double linear_weighted_kappa(std::span<const std::int8_t> a, std::span<const std::int8_t> b);

EvalReport agreement_ratio(std::span<const std::int8_t> predictions, const AnnotationSet& data);

/// Agreement ratio of annotator j's labels against the pool of the others.
EvalReport annotator_vs_rest(const AnnotationSet& data, std::size_t annotator);

}  // namespace agreelearn
