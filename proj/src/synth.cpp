#include "agreelearn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

#include "agreelearn/metrics.hpp"

namespace agreelearn {

void validate(const SynthSpec& spec) {
  if (spec.n_samples < 1) throw ConfigError("synth: n_samples must be >= 1");
  if (spec.feature_dim < 1) throw ConfigError("synth: feature_dim must be >= 1");
  if (!(spec.class_balance > 0.0 && spec.class_balance < 1.0)) {
    throw ConfigError("synth: class_balance must be in (0, 1)");
  }
  if (!(spec.boundary_noise >= 0.0)) throw ConfigError("synth: boundary_noise must be >= 0");
  if (spec.annotators.size() < 2) throw ConfigError("synth: need at least 2 annotators");
  for (const AnnotatorSpec& a : spec.annotators) {
    if (!(a.target_kappa > 0.0 && a.target_kappa <= 1.0)) {
      throw ConfigError("synth: target_kappa must be in (0, 1]");
    }
    if (!(a.flip_bias >= 0.0 && a.flip_bias <= 1.0)) {
      throw ConfigError("synth: flip_bias must be in [0, 1]");
    }
  }
  if (!(spec.missing_rate >= 0.0 && spec.missing_rate < 1.0)) {
    throw ConfigError("synth: missing_rate must be in [0, 1)");
  }
}

namespace {

// Per-class flip rates: the base rate split by the bias. Clamped so a rate
// never reaches 1 even at extreme bias.
std::pair<double, double> class_rates(double base_rate, double flip_bias) {
  const double pos = std::min(2.0 * flip_bias * base_rate, 0.999);
  const double neg = std::min(2.0 * (1.0 - flip_bias) * base_rate, 0.999);
  return {pos, neg};
}

std::vector<std::int8_t> flip_labels(std::span<const std::int8_t> reference,
                                     std::span<const double> uniforms, double base_rate,
                                     double flip_bias) {
  const auto [rate_pos, rate_neg] = class_rates(base_rate, flip_bias);
  std::vector<std::int8_t> out(reference.begin(), reference.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double rate = reference[i] == 1 ? rate_pos : rate_neg;
    if (uniforms[i] < rate) out[i] = static_cast<std::int8_t>(1 - out[i]);
  }
  return out;
}

/// Bisection on the base flip rate against the actual reference labels. The
/// same uniform draws are reused at every probe, so realized kappa is a
/// monotone step function of the rate and the final labels reproduce the
/// probed kappa exactly.
double calibrate_on(std::span<const std::int8_t> reference, std::span<const double> uniforms,
                    double target_kappa, double flip_bias) {
  if (!(target_kappa > 0.0 && target_kappa <= 1.0)) {
    throw std::invalid_argument("calibrate_flip_rate: target_kappa must be in (0, 1]");
  }
  if (target_kappa == 1.0) return 0.0;

  auto realized = [&](double rate) {
    const std::vector<std::int8_t> flipped = flip_labels(reference, uniforms, rate, flip_bias);
    return cohens_kappa(reference, flipped);
  };

  double lo = 0.0, hi = 0.4999;
  if (realized(hi) > target_kappa) {
    throw std::invalid_argument("calibrate_flip_rate: target not bracketed by flip rates");
  }
  double mid = hi;
  for (int iter = 0; iter < 40; ++iter) {
    mid = 0.5 * (lo + hi);
    const double k = realized(mid);
    if (std::abs(k - target_kappa) <= 0.01) return mid;
    if (k > target_kappa) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return mid;
}

}  // namespace

double calibrate_flip_rate(double target_kappa, double class_balance, std::size_t n,
                           std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("calibrate_flip_rate: n must be >= 2");
  Rng rng(derive_seed(seed, "calibrate"));
  std::bernoulli_distribution label(class_balance);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::int8_t> reference(n);
  std::vector<double> uniforms(n);
  for (std::size_t i = 0; i < n; ++i) reference[i] = label(rng) ? 1 : 0;
  for (std::size_t i = 0; i < n; ++i) uniforms[i] = unif(rng);
  return calibrate_on(reference, uniforms, target_kappa, 0.5);
}

SynthResult generate(const SynthSpec& spec) {
  validate(spec);
  const std::size_t n = spec.n_samples;
  const std::size_t d = spec.feature_dim;
  const std::size_t j = spec.annotators.size();

  std::vector<std::int8_t> reference(n);
  {
    Rng rng(derive_seed(spec.seed, "reference"));
    std::bernoulli_distribution label(spec.class_balance);
    for (std::size_t i = 0; i < n; ++i) reference[i] = label(rng) ? 1 : 0;
  }

  std::vector<Sample> samples(n);
  {
    Rng rng(derive_seed(spec.seed, "features"));
    std::normal_distribution<double> noise(0.0, 0.5 + spec.boundary_noise);
    const double offset = 1.0 / std::sqrt(static_cast<double>(d));
    char id[32];
    for (std::size_t i = 0; i < n; ++i) {
      std::snprintf(id, sizeof(id), "s%06zu", i);
      samples[i].id = id;
      samples[i].features.resize(d);
      const double center = reference[i] == 1 ? offset : -offset;
      for (std::size_t c = 0; c < d; ++c) samples[i].features[c] = center + noise(rng);
    }
  }

  std::vector<double> realized_kappa;
  std::vector<double> flip_rates;
  std::vector<std::vector<std::int8_t>> columns(j);
  for (std::size_t a = 0; a < j; ++a) {
    const AnnotatorSpec& as = spec.annotators[a];
    if (as.target_kappa == 1.0) {
      columns[a] = reference;
      realized_kappa.push_back(1.0);
      flip_rates.push_back(0.0);
      continue;
    }
    double achieved = 0.0;
    bool done = false;
    for (int attempt = 0; attempt < 5 && !done; ++attempt) {
      Rng rng(derive_seed(spec.seed,
                          "annotator:" + std::to_string(a) + ":" + std::to_string(attempt)));
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      std::vector<double> uniforms(n);
      for (std::size_t i = 0; i < n; ++i) uniforms[i] = unif(rng);
      const double rate = calibrate_on(reference, uniforms, as.target_kappa, as.flip_bias);
      const std::vector<std::int8_t> flipped =
          flip_labels(reference, uniforms, rate, as.flip_bias);
      achieved = cohens_kappa(reference, flipped);
      if (std::abs(achieved - as.target_kappa) <= 0.02) {
        columns[a] = flipped;
        realized_kappa.push_back(achieved);
        flip_rates.push_back(rate);
        done = true;
      }
    }
    if (!done) {
      char msg[128];
      std::snprintf(msg, sizeof(msg),
                    "synth: calibration failed for annotator %zu (target %.3f, achieved %.4f)",
                    a, as.target_kappa, achieved);
      throw std::runtime_error(msg);
    }
  }

  std::vector<std::int8_t> labels(n * j);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < j; ++a) labels[i * j + a] = columns[a][i];
  }

  if (spec.missing_rate > 0.0) {
    Rng rng(derive_seed(spec.seed, "missing"));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<bool> drop(j);
    for (std::size_t i = 0; i < n; ++i) {
      // Resample the row mask until at least one label survives.
      while (true) {
        std::size_t kept = 0;
        for (std::size_t a = 0; a < j; ++a) {
          drop[a] = unif(rng) < spec.missing_rate;
          if (!drop[a]) ++kept;
        }
        if (kept > 0) break;
      }
      for (std::size_t a = 0; a < j; ++a) {
        if (drop[a]) labels[i * j + a] = kMissingLabel;
      }
    }
  }

  std::vector<std::string> ids(j);
  for (std::size_t a = 0; a < j; ++a) ids[a] = "a" + std::to_string(a + 1);
  return SynthResult{
      AnnotationSet(std::move(samples), std::move(ids), std::move(labels)),
      std::move(reference),
      std::move(realized_kappa),
      std::move(flip_rates),
  };
}

}  // namespace agreelearn
