// Command-line front end: synthetic data generation, training, evaluation,
// ablation matrices, annotator baselines, and gradient checking.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "agreelearn/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required = true) {
  auto* opt = cmd->add_option("--config", flags.config_path, "experiment config JSON");
  if (config_required) opt->required();
  cmd->add_option("--seed", flags.seed, "override the config seed");
  cmd->add_option("--out", flags.out, "override the output directory");
  cmd->add_flag("--quiet", flags.quiet, "suppress progress output");
}

agreelearn::ExperimentConfig resolve(const CommonFlags& flags) {
  agreelearn::ExperimentConfig cfg = flags.config_path.empty()
                                         ? agreelearn::ExperimentConfig{}
                                         : agreelearn::load_experiment_config(flags.config_path);
  if (flags.seed) {
    cfg.seed = *flags.seed;
    cfg.train.seed = *flags.seed;
  }
  if (flags.out) cfg.out_dir = *flags.out;
  if (flags.quiet) cfg.quiet = true;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"train a binary classifier jointly with an annotator-agreement estimator"};
  app.require_subcommand(1);

  CommonFlags synth_flags, train_flags, eval_flags, matrix_flags, baseline_flags, grad_flags;
  double grad_tol = 0.0;  // 0 = pick by classifier loss

  CLI::App* synth = app.add_subcommand("synth", "generate a calibrated synthetic dataset");
  add_common(synth, synth_flags);
  CLI::App* train = app.add_subcommand("train", "train and evaluate one configuration");
  add_common(train, train_flags);
  CLI::App* evaluate = app.add_subcommand("evaluate", "score a checkpoint on a dataset");
  add_common(evaluate, eval_flags);
  CLI::App* matrix = app.add_subcommand("matrix", "run an ablation grid over config axes");
  add_common(matrix, matrix_flags);
  CLI::App* baseline =
      app.add_subcommand("annotator-baseline", "agreement ratio of each annotator vs the rest");
  add_common(baseline, baseline_flags);
  CLI::App* grad = app.add_subcommand("grad-check", "finite-difference check of the backward pass");
  add_common(grad, grad_flags, /*config_required=*/false);
  grad->add_option("--tol", grad_tol, "max relative error allowed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (synth->parsed()) {
      const auto cfg = resolve(synth_flags);
      const auto out = agreelearn::cmd_synth(cfg);
      if (!cfg.quiet) {
        std::printf("wrote %s\nwrote %s\nwrote %s\n", out.dataset_path.c_str(),
                    out.sidecar_path.c_str(), out.latent_path.c_str());
      }
    } else if (train->parsed()) {
      const auto cfg = resolve(train_flags);
      const auto out = agreelearn::cmd_train(cfg);
      if (!cfg.quiet) {
        std::printf("delta %.6f over %zu eval rows\nwrote %s\nwrote %s\nwrote %s\n",
                    out.report.delta, out.report.n_eval, out.checkpoint_path.c_str(),
                    out.history_path.c_str(), out.report_path.c_str());
      }
    } else if (evaluate->parsed()) {
      const auto cfg = resolve(eval_flags);
      const auto report = agreelearn::cmd_evaluate(cfg);
      if (!cfg.quiet) {
        std::printf("delta %.6f\n", report.at("evaluation").at("delta").get<double>());
      }
    } else if (matrix->parsed()) {
      const auto cfg = resolve(matrix_flags);
      const auto out = agreelearn::cmd_matrix(cfg);
      if (!cfg.quiet) {
        std::printf("wrote %s\nwrote %s\nwrote %s\n", out.rows_path.c_str(),
                    out.summary_csv_path.c_str(), out.summary_json_path.c_str());
      }
    } else if (baseline->parsed()) {
      const auto cfg = resolve(baseline_flags);
      const auto table = agreelearn::cmd_annotator_baseline(cfg);
      if (!cfg.quiet) {
        for (const auto& [id, report] : table.at("per_annotator").items()) {
          std::printf("%s delta %.6f\n", id.c_str(), report.at("delta").get<double>());
        }
      }
    } else if (grad->parsed()) {
      const auto cfg = resolve(grad_flags);
      const auto report = agreelearn::cmd_grad_check(cfg);
      const double tol =
          grad_tol > 0.0
              ? grad_tol
              : (cfg.train.loss.classifier_loss == agreelearn::ClassifierLoss::Wkl ? 1e-3 : 1e-4);
      for (const auto& block : report.blocks) {
        std::printf("%-28s max rel error %.3e\n", block.name.c_str(), block.max_rel_error);
      }
      if (!report.pass(tol)) {
        std::fprintf(stderr, "grad-check FAILED at tolerance %.1e\n", tol);
        return kExitRuntime;
      }
      std::printf("grad-check passed at tolerance %.1e\n", tol);
    }
  } catch (const agreelearn::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}
