//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "equihg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <numeric>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "equihg/error.hpp"

namespace equihg {

void TrainConfig::validate() const {
  if (epochs == 0)
    throw ConfigError("train.epochs must be positive");
  if (batch_size == 0)
    throw ConfigError("train.batch_size must be positive");
  if (eval_every == 0)
    throw ConfigError("train.eval_every must be positive");
  if (!(lr >= 0.0) || !std::isfinite(lr))
    throw ConfigError("train.lr must be a finite non-negative number");
  if (target_name.empty())
    throw ConfigError("train.target is empty");
}

namespace {

double target_of(const DatasetRecord &r, const std::string &target) {
  auto it = r.targets.find(target);
  if (it == r.targets.end())
    throw DataError(fmt::format("molecule '{}' has no value for target '{}'",
                                r.molecule.name, target));
  return it->second;
}

std::vector<GraphSample> prepare_all(std::span<const DatasetRecord> records,
                                     const ModelConfig &cfg) {
  std::vector<GraphSample> out;
  out.reserve(records.size());
  for (const DatasetRecord &r : records)
    out.push_back(prepare_sample(r.molecule, cfg));
  return out;
}

double mae_of(std::span<const double> pred, std::span<const DatasetRecord> rs,
              const std::string &target) {
  std::vector<double> truth;
  truth.reserve(rs.size());
  for (const DatasetRecord &r : rs)
    truth.push_back(target_of(r, target));
  return mae_metric(pred, truth);
}

nlohmann::json checkpoint_meta(const ModelConfig &mc, const TrainConfig &tc,
                               const Normalizer &norm, std::size_t epoch,
                               double val_mae) {
  return {
    { "format", "equihg-checkpoint" },
    { "model", mc.to_json() },
    { "target", tc.target_name },
    { "normalizer", { { "mean", norm.mean }, { "std", norm.std } } },
    { "epoch", epoch },
    { "val_mae", val_mae },
  };
}

// Normalized-target loss over one slice of a batch, scaled so the slices
// of a batch add up to the batch mean.
Tensor slice_loss(const Model &model, std::span<const GraphSample *const> group,
                  std::span<const double> targets, std::size_t batch_total) {
  const Tensor pred = model.forward(make_batch(group));
  const Tensor y = Tensor::from_data(
      { targets.size() }, std::vector<double>(targets.begin(), targets.end()));
  return scale(sum_all(square(sub(pred, y))),
               1.0 / static_cast<double>(batch_total));
}

class GradientWorkers {
 public:
  GradientWorkers(const Model &master, std::size_t threads) {
    for (std::size_t i = 0; i < threads; ++i)
      replicas_.push_back(master.clone());
  }

  std::size_t size() const { return replicas_.size(); }

  // Splits the batch into contiguous slices, one per replica, and sums the
  // replica gradients into the master in slice order.
  double run(Model &master, std::span<const GraphSample *const> group,
             std::span<const double> targets) {
    const std::size_t n = group.size();
    const std::size_t used = std::min(n, replicas_.size());
    std::vector<double> losses(used, 0.0);
    std::vector<std::exception_ptr> errors(used);
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < used; ++w) {
        const std::size_t lo = n * w / used, hi = n * (w + 1) / used;
        pool.emplace_back([&, w, lo, hi] {
          try {
            Model &rep = replicas_[w];
            rep.params().copy_values_from(master.params());
            rep.params().zero_grad();
            Tape tape;
            TapeScope scope(tape);
            const Tensor loss = slice_loss(rep, group.subspan(lo, hi - lo),
                                           targets.subspan(lo, hi - lo), n);
            tape.backward(loss);
            losses[w] = loss.item();
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (const auto &e : errors)
      if (e)
        std::rethrow_exception(e);
    master.params().zero_grad();
    double total = 0.0;
    for (std::size_t w = 0; w < used; ++w) {
      master.params().add_grads_from(replicas_[w].params());
      total += losses[w];
    }
    return total;
  }

 private:
  std::vector<Model> replicas_;
};

}  // namespace

Normalizer fit_normalizer(std::span<const DatasetRecord> records,
                          const std::string &target) {
  if (records.size() < 2)
    throw DataError("fitting a normalizer needs at least two records");
  double mean = 0.0;
  for (const DatasetRecord &r : records)
    mean += target_of(r, target);
  mean /= static_cast<double>(records.size());
  double var = 0.0;
  for (const DatasetRecord &r : records) {
    const double d = target_of(r, target) - mean;
    var += d * d;
  }
  var /= static_cast<double>(records.size());
  if (!(var > 0.0) || !std::isfinite(var))
    throw DataError(fmt::format(
        "target '{}' has zero variance on the training split", target));
  return Normalizer{ mean, std::sqrt(var) };
}

std::vector<double> predict_records(const Model &model,
                                    const Normalizer &normalizer,
                                    std::span<const DatasetRecord> records) {
  const std::vector<GraphSample> samples = prepare_all(records, model.config());
  std::vector<double> pred = model.predict(samples);
  for (double &p : pred)
    p = normalizer.denormalize(p);
  return pred;
}

double records_mae(const Model &model, const Normalizer &normalizer,
                   std::span<const DatasetRecord> records,
                   const std::string &target) {
  if (records.empty())
    throw DataError("cannot compute MAE over an empty split");
  return mae_of(predict_records(model, normalizer, records), records, target);
}

TrainResult train(const ModelConfig &model_cfg, const TrainConfig &cfg,
                  std::span<const DatasetRecord> train_set,
                  std::span<const DatasetRecord> val_set) {
  model_cfg.validate();
  cfg.validate();
  if (train_set.empty())
    throw DataError("training split is empty");
  if (val_set.empty())
    throw DataError("validation split is empty");

  TrainResult result;
  result.normalizer = fit_normalizer(train_set, cfg.target_name);
  const Normalizer &norm = result.normalizer;

  const std::vector<GraphSample> train_samples =
      prepare_all(train_set, model_cfg);
  const std::vector<GraphSample> val_samples = prepare_all(val_set, model_cfg);
  std::vector<double> train_targets;
  for (const DatasetRecord &r : train_set)
    train_targets.push_back(norm.normalize(target_of(r, cfg.target_name)));
  std::vector<double> val_truth;
  for (const DatasetRecord &r : val_set)
    val_truth.push_back(target_of(r, cfg.target_name));

  std::filesystem::create_directories(cfg.out_dir);
  result.best_checkpoint = cfg.out_dir / "best.ckpt";
  result.metrics_csv = cfg.out_dir / "metrics.csv";
  std::ofstream csv(result.metrics_csv, std::ios::binary | std::ios::trunc);
  if (!csv)
    throw Error("cannot write " + result.metrics_csv.string());
  csv << "epoch,train_loss,val_mae\n";
  csv.flush();

  Model model = Model::create(model_cfg);
  AdamState adam;
  adam.config.lr = cfg.lr;
  std::optional<GradientWorkers> workers;
  if (cfg.threads > 1)
    workers.emplace(model, cfg.threads);

  bool have_best = false;
  std::vector<std::size_t> order(train_samples.size());
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{ 0 });
    std::seed_seq seq{ static_cast<std::uint32_t>(cfg.seed),
                       static_cast<std::uint32_t>(cfg.seed >> 32),
                       static_cast<std::uint32_t>(epoch) };
    std::mt19937_64 rng(seq);
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    for (std::size_t start = 0, b = 0; start < order.size();
         start += cfg.batch_size, ++b) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::vector<const GraphSample *> group;
      std::vector<double> targets;
      for (std::size_t k = start; k < stop; ++k) {
        group.push_back(&train_samples[order[k]]);
        targets.push_back(train_targets[order[k]]);
      }

      double loss = 0.0;
      if (workers) {
        loss = workers->run(model, group, targets);
      } else {
        model.params().zero_grad();
        Tape tape;
        TapeScope scope(tape);
        const Tensor l = slice_loss(model, group, targets, group.size());
        tape.backward(l);
        loss = l.item();
      }
      const std::string where = fmt::format(
          "epoch {} batch {}; last good checkpoint: {}", epoch, b,
          have_best ? result.best_checkpoint.string() : std::string("none"));
      if (!std::isfinite(loss))
        throw NumericError("non-finite training loss at " + where);
      try {
        adam_step(model.params(), adam);
      } catch (const NumericError &e) {
        throw NumericError(std::string(e.what()) + " at " + where);
      }
      loss_sum += loss * static_cast<double>(group.size());
    }

    if (epoch % cfg.eval_every != 0 && epoch != cfg.epochs)
      continue;
    std::vector<double> pred = model.predict(val_samples);
    for (double &p : pred)
      p = norm.denormalize(p);
    MetricRow row{ epoch,
                   loss_sum / static_cast<double>(train_samples.size()),
                   mae_metric(pred, val_truth) };
    if (!std::isfinite(row.val_mae))
      throw NumericError(fmt::format(
          "non-finite validation MAE at epoch {}; last good checkpoint: {}",
          epoch,
          have_best ? result.best_checkpoint.string() : std::string("none")));
    result.log.push_back(row);
    csv << fmt::format("{},{:.17g},{:.17g}\n", row.epoch, row.train_loss,
                       row.val_mae);
    csv.flush();
    if (!have_best || row.val_mae < result.best_val_mae) {
      have_best = true;
      result.best_val_mae = row.val_mae;
      result.best_epoch = epoch;
      result.persisted_val_mae.push_back(row.val_mae);
      save_checkpoint(result.best_checkpoint,
                      checkpoint_meta(model_cfg, cfg, norm, epoch, row.val_mae),
                      model.params(), &adam);
    }
  }
  result.final_params = std::move(model.params());
  return result;
}

nlohmann::json EvalReport::to_json() const {
  return { { "target", target }, { "split", split }, { "mae", mae }, { "n", n } };
}

LoadedModel load_trained_model(const std::filesystem::path &checkpoint,
                               std::optional<ModelKind> expected) {
  Checkpoint ck = load_checkpoint(checkpoint);
  ModelConfig mc;
  Normalizer norm;
  std::string target;
  try {
    mc = ModelConfig::from_json(ck.meta.at("model"));
    norm.mean = ck.meta.at("normalizer").at("mean").get<double>();
    norm.std = ck.meta.at("normalizer").at("std").get<double>();
    target = ck.meta.at("target").get<std::string>();
  } catch (const nlohmann::json::exception &e) {
    throw DataError(fmt::format("{}: incomplete checkpoint metadata ({})",
                                checkpoint.string(), e.what()));
  }
  if (expected && *expected != mc.kind)
    throw Error(fmt::format(
        "model kind mismatch: checkpoint {} holds a {} model, expected {}",
        checkpoint.string(), to_string(mc.kind), to_string(*expected)));
  return LoadedModel{ Model::from_params(mc, std::move(ck.params)), norm,
                      target };
}

EvalReport evaluate(const std::filesystem::path &checkpoint,
                    std::span<const DatasetRecord> records,
                    const std::string &split_name,
                    std::optional<ModelKind> expected) {
  LoadedModel lm = load_trained_model(checkpoint, expected);
  if (records.empty())
    throw DataError(fmt::format("split '{}' is empty", split_name));
  EvalReport rep;
  rep.target = lm.target;
  rep.split = split_name;
  rep.n = records.size();
  rep.mae = records_mae(lm.model, lm.normalizer, records, lm.target);
  return rep;
}

void write_report(const std::filesystem::path &path, const EvalReport &report) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error("cannot write " + path.string());
  out << report.to_json().dump(2) << '\n';
}

}  // namespace equihg
