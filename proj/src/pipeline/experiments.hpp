// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pipeline/config.hpp"

namespace tadiff {

using EpochCallback = std::function<void(const EpochLog&)>;

struct GenDataOutcome {
  Manifest manifest;
  DatasetSummary summary;
};

/// Writes the dataset and a resolved-config echo (generation.json) to data.dir.
GenDataOutcome run_gen_data(const RunConfig& cfg);
std::string format_summary(const DatasetSummary& s, const SyntheticConfig& cfg);

/// Loads data.dir/manifest.json.
Manifest load_dataset(const RunConfig& cfg);
Split protocol_split(const RunConfig& cfg, const Manifest& m, Protocol protocol);

/// Model init seed for a given training seed.
std::uint64_t init_seed_for(std::uint64_t train_seed);

struct TrainOptions {
  std::optional<std::filesystem::path> resume; // checkpoint with optimizer state
  std::size_t stop_after = 0;                  // stop after this many epochs in total; 0 = run to the end
  EpochCallback on_epoch;
};

struct TrainOutcome {
  std::vector<EpochLog> log; // every epoch so far, including resumed ones
  std::filesystem::path checkpoint;
};

/// Trains on the protocol's train split. Writes config.json, loss.csv and
/// checkpoint.tdck (refreshed after every epoch) under cfg.output.
TrainOutcome run_train(const RunConfig& cfg, const TrainOptions& opts = {});

/// Rebuilds the model a checkpoint was trained with and loads its weights.
/// Returns the training config recorded in the checkpoint.
RunConfig checkpoint_config(const Checkpoint& ck);

/// Evaluates a checkpoint on the test split of cfg.protocol. Throws
/// DataError when the checkpoint was trained for a different protocol.
/// Writes results.csv, report.json and eval_config.json under cfg.output.
EvalReport run_eval(const RunConfig& cfg, const std::filesystem::path& checkpoint);

/// Train from scratch on prepared samples and evaluate; nothing is written.
EvalReport train_and_evaluate(const RunConfig& cfg, std::span<const TrainSample> train, const Manifest& test,
                              const EpochCallback& on_epoch = {});

struct AblationCell {
  std::string protocol;
  bool noise = false;
  bool denoise = false;
  std::vector<std::uint64_t> seeds;
  std::vector<EvalReport> runs;
  double ap_avg = 0.0; // medians over seeds
  double ar_avg = 0.0;
};

using RunCallback = std::function<void(const std::string& label, const EvalReport&)>;

/// Four toggle rows per protocol in the order (off,off), (noise,off),
/// (off,denoise), (noise,denoise). Writes ablation.csv and ablation_runs.csv.
std::vector<AblationCell> run_ablation(const RunConfig& cfg, const RunCallback& on_run = {});

struct SweepPoint {
  std::size_t steps = 0;
  std::vector<EvalReport> runs;
  double ap_avg = 0.0;
  double ar_avg = 0.0;
};

/// Full TADiff at each step count in [from, to] (0 = no refiner) on
/// ablate.sweep_protocol. Writes sweep.csv and sweep_runs.csv.
std::vector<SweepPoint> run_sweep(const RunConfig& cfg, std::size_t from, std::size_t to,
                                  const RunCallback& on_run = {});

double median(std::vector<double> v);

/// Human-readable digest of every CSV in a run directory plus the config
/// hash. Throws DataError when the directory does not exist.
std::string build_report(const std::filesystem::path& run_dir);

} // namespace tadiff
