#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "agreelearn/synth.hpp"
#include "agreelearn/trainer.hpp"

namespace agreelearn {

struct ModelOptions {
  std::vector<std::size_t> hidden_widths{64, 64};
  AgreementVariant agreement_variant = AgreementVariant::Distributional;
  std::size_t bins = 10;
  std::size_t indicator_hidden = 16;
};

/// One experiment: a dataset source (file path or inline synthetic spec),
/// model and training settings, and output location. Flags override file
/// values which override defaults.
struct ExperimentConfig {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> dataset_path;
  FileFormat format = FileFormat::Jsonl;
  std::optional<SynthSpec> synth;
  TrainConfig train{};
  ModelOptions model{};
  std::string out_dir = "out";
  std::optional<std::string> checkpoint_path;
  std::vector<std::uint64_t> repeat_seeds;
  std::map<std::string, std::vector<std::string>> axes;
  bool quiet = false;
  bool use_regularized = true;
};

ExperimentConfig parse_experiment_config(const nlohmann::json& doc);
ExperimentConfig load_experiment_config(const std::string& path);

/// Full config echo with every field resolved, defaults included.
nlohmann::json resolved_config(const ExperimentConfig& cfg);

/// Loads the dataset file or generates the inline synthetic spec. The
/// synthetic data seed derives from the experiment seed unless the spec
/// pins its own.
AnnotationSet experiment_data(const ExperimentConfig& cfg);

struct SynthOutputs {
  std::string dataset_path;
  std::string sidecar_path;
  std::string latent_path;
};
SynthOutputs cmd_synth(const ExperimentConfig& cfg);

struct TrainOutputs {
  std::string checkpoint_path;
  std::string history_path;
  std::string report_path;
  EvalReport report;
  TrainResult result;
};
TrainOutputs cmd_train(const ExperimentConfig& cfg);

nlohmann::json cmd_evaluate(const ExperimentConfig& cfg);

nlohmann::json cmd_annotator_baseline(const ExperimentConfig& cfg);

struct MatrixOutputs {
  std::string rows_path;
  std::string summary_csv_path;
  std::string summary_json_path;
  nlohmann::json summary;
};
MatrixOutputs cmd_matrix(const ExperimentConfig& cfg);

GradCheckReport cmd_grad_check(const ExperimentConfig& cfg);

void write_jsonl_dataset(const AnnotationSet& data, const std::string& path);

}  // namespace agreelearn
