//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "equihg/chem.hpp"
#include "equihg/model.hpp"
#include "equihg/nn.hpp"

namespace equihg {

struct TrainConfig {
  std::size_t epochs = 400;
  std::size_t batch_size = 16;
  double lr = 1e-4;
  std::uint64_t seed = 0;
  std::string target_name = "gap";
  std::size_t eval_every = 1;
  std::filesystem::path out_dir = "runs";
  /// Worker threads for gradient evaluation; 0 or 1 is the deterministic
  /// single-threaded mode.
  std::size_t threads = 0;

  void validate() const;
};

/// z-score of one target over the training split (population std).
struct Normalizer {
  double mean = 0.0;
  double std = 1.0;

  double normalize(double y) const { return (y - mean) / std; }
  double denormalize(double z) const { return z * std + mean; }
};

/// Throws DataError with fewer than two records, a missing target, or zero
/// variance.
Normalizer fit_normalizer(std::span<const DatasetRecord> records,
                          const std::string &target);

struct MetricRow {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean normalized MSE over the epoch
  double val_mae = 0.0;     // target units
};

struct TrainResult {
  std::filesystem::path best_checkpoint;
  std::filesystem::path metrics_csv;
  std::vector<MetricRow> log;
  /// Validation MAE of every checkpoint written, in order.
  std::vector<double> persisted_val_mae;
  double best_val_mae = 0.0;
  std::size_t best_epoch = 0;
  Normalizer normalizer;
  /// Parameters after the last epoch (not necessarily the best).
  ParameterSet final_params;
};

/// Fits on `train`, selects by MAE on `val`, writes metrics.csv and
/// best.ckpt into cfg.out_dir. Test records never enter here.
TrainResult train(const ModelConfig &model_cfg, const TrainConfig &cfg,
                  std::span<const DatasetRecord> train,
                  std::span<const DatasetRecord> val);

/// Denormalized predictions of a trained model.
std::vector<double> predict_records(const Model &model,
                                    const Normalizer &normalizer,
                                    std::span<const DatasetRecord> records);

double records_mae(const Model &model, const Normalizer &normalizer,
                   std::span<const DatasetRecord> records,
                   const std::string &target);

struct EvalReport {
  std::string target;
  std::string split;
  double mae = 0.0;
  std::size_t n = 0;

  nlohmann::json to_json() const;
};

/// Everything a checkpoint file holds besides raw tensors.
struct LoadedModel {
  Model model;
  Normalizer normalizer;
  std::string target;
};

/// Throws Error when the checkpoint's model kind differs from `expected`.
LoadedModel load_trained_model(const std::filesystem::path &checkpoint,
                               std::optional<ModelKind> expected = {});

/// Throws DataError on an empty split or records lacking the target.
EvalReport evaluate(const std::filesystem::path &checkpoint,
                    std::span<const DatasetRecord> records,
                    const std::string &split_name,
                    std::optional<ModelKind> expected = {});

void write_report(const std::filesystem::path &path, const EvalReport &report);

}  // namespace equihg
