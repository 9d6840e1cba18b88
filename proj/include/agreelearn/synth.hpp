#pragma once

#include <cstdint>
#include <vector>

#include "agreelearn/dataset.hpp"

namespace agreelearn {

/// One simulated annotator: flips the reference labels at a calibrated rate
/// so the realized kappa against the reference hits target_kappa. flip_bias
/// skews the flips toward one class (0.5 = symmetric, 1 = only positives
/// flip), which skews that annotator's class balance.
struct AnnotatorSpec {
  double target_kappa = 1.0;
  double flip_bias = 0.5;
};

struct SynthSpec {
  std::size_t n_samples = 0;
  std::size_t feature_dim = 0;
  double class_balance = 0.5;   // P(reference label = 1)
  double boundary_noise = 0.0;  // widens the class clusters
  std::vector<AnnotatorSpec> annotators;
  double missing_rate = 0.0;
  std::uint64_t seed = 0;
};

void validate(const SynthSpec& spec);

struct SynthResult {
  AnnotationSet data;
  // Diagnostics only; never consumed by training or evaluation.
  std::vector<std::int8_t> reference_labels;
  std::vector<double> realized_kappa;  // per annotator, against the reference
  std::vector<double> flip_rates;
};

/// Two overlapping Gaussian clusters plus calibrated annotators. A target
/// kappa of 1 yields an exact copy of the reference labels. Fails with the
/// achieved kappa if calibration cannot land within +-0.02 of the target.
SynthResult generate(const SynthSpec& spec);

/// Bisection on the symmetric flip rate until the Monte Carlo kappa is within
/// 0.01 of the target (at most 40 iterations). For balanced classes kappa is
/// close to 1 - 2 * flip_rate.
double calibrate_flip_rate(double target_kappa, double class_balance, std::size_t n,
                           std::uint64_t seed);

}  // namespace agreelearn
