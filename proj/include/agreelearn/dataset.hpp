#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "agreelearn/common.hpp"

namespace agreelearn {

struct Sample {
  std::string id;
  std::vector<double> features;
};

enum class TieBreak { Positive, Negative };
enum class FileFormat { Jsonl, Csv };

struct AnnotatorCounts {
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t labeled = 0;  // positives + negatives
};

/// N samples by J annotators with sparse binary labels. Immutable after
/// construction; the constructor enforces every dataset invariant (at least
/// one label per sample, fixed feature dimensionality, finite features,
/// weights in (0, 1]).
class AnnotationSet {
 public:
  AnnotationSet(std::vector<Sample> samples, std::vector<std::string> annotator_ids,
                std::vector<std::int8_t> labels, std::vector<double> weights = {});

  std::size_t size() const { return samples_.size(); }
  std::size_t annotator_count() const { return annotator_ids_.size(); }
  std::size_t feature_dim() const { return samples_.front().features.size(); }

  const Sample& sample(std::size_t i) const { return samples_[i]; }
  const std::vector<Sample>& samples() const { return samples_; }
  const std::vector<std::string>& annotator_ids() const { return annotator_ids_; }

  bool present(std::size_t i, std::size_t j) const { return label(i, j) != kMissingLabel; }
  std::int8_t label(std::size_t i, std::size_t j) const {
    return labels_[i * annotator_ids_.size() + j];
  }
  double weight(std::size_t i, std::size_t j) const {
    return weights_[i * annotator_ids_.size() + j];
  }
  std::size_t present_count(std::size_t i) const;

  /// Tri-state label column of one annotator, length N.
  std::vector<std::int8_t> annotator_labels(std::size_t j) const;

  /// New set holding the given sample rows (annotator list unchanged).
  AnnotationSet subset(std::span<const std::size_t> indices) const;

 private:
  std::vector<Sample> samples_;
  std::vector<std::string> annotator_ids_;
  std::vector<std::int8_t> labels_;  // N x J row-major
  std::vector<double> weights_;      // N x J row-major, 1.0 where defaulted
};

AnnotationSet load_annotations(const std::string& path, FileFormat format);

/// Per-sample agreement target: weighted mean of the present labels.
std::vector<double> agreement_targets(const AnnotationSet& data);

std::vector<std::int8_t> majority_vote(const AnnotationSet& data,
                                       TieBreak tie_break = TieBreak::Negative);

AnnotatorCounts annotator_class_counts(const AnnotationSet& data, std::size_t annotator);

}  // namespace agreelearn
