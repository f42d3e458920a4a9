//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance harness. Prints one PASS/FAIL line per criterion and exits
// nonzero when a blocking criterion fails. Pass criterion numbers as
// arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "equihg/checks.hpp"
#include "equihg/chemio.hpp"
#include "equihg/hypergraph.hpp"
#include "equihg/model.hpp"
#include "equihg/trainer.hpp"

using namespace equihg;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

const fs::path kData = EQUIHG_DATA_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

const std::vector<DatasetRecord> &sample_records() {
  static const std::vector<DatasetRecord> records = [] {
    const std::vector<std::string> targets{ "gap" };
    return load_dataset(kData / "qm9_sample.sdf",
                        kData / "qm9_sample_targets.csv", targets)
        .records;
  }();
  return records;
}

std::vector<Molecule> corpus(std::size_t n) {
  std::vector<Molecule> out;
  for (std::size_t i = 0; i < n && i < sample_records().size(); ++i)
    out.push_back(sample_records()[i].molecule);
  return out;
}

ModelConfig default_config(ModelKind kind) {
  ModelConfig c;
  c.kind = kind;
  c.seed = 0;
  return c;
}

Outcome rigid_invariance() {
  const auto mols = corpus(100);
  std::size_t max_atoms = 0;
  for (const Molecule &m : mols)
    max_atoms = std::max(max_atoms, m.num_atoms());
  const Model model = Model::create(default_config(ModelKind::Equihgnn));
  const auto t0 = Clock::now();
  const CheckReport r = check_rigid_invariance(model, mols, 10, 1);
  const double secs = seconds_since(t0);
  return { r.passed() && secs <= 120.0 && max_atoms <= 29,
           fmt::format("{} molecules (max {} atoms), {} cases, max dev {:.3e} "
                       "(tol {:.0e}), {:.1f} s (limit 120)",
                       mols.size(), max_atoms, r.cases, r.max_deviation,
                       r.tolerance, secs) };
}

Outcome permutation_invariance() {
  const auto mols = corpus(100);
  const auto t0 = Clock::now();
  bool pass = true;
  std::string detail;
  for (ModelKind kind : { ModelKind::Equihgnn, ModelKind::Mhnn, ModelKind::Gin }) {
    const Model model = Model::create(default_config(kind));
    const CheckReport r = check_permutation_invariance(model, mols, 10, 2);
    pass = pass && r.passed();
    detail += fmt::format("{} {:.3e}; ", to_string(kind), r.max_deviation);
  }
  const double secs = seconds_since(t0);
  return { pass && secs <= 120.0,
           fmt::format("max dev {}tol {:.0e}, {:.1f} s (limit 120)", detail,
                       kPermutationTolerance, secs) };
}

Outcome coordinate_equivariance() {
  const auto mols = corpus(100);
  const ModelConfig cfg = default_config(ModelKind::Equihgnn);
  const Model model = Model::create(cfg);
  const auto reps = check_encoder_equivariance(
      model.geo(), cfg.cutoff, cfg.max_neighbors, mols, 10, 3);
  return { reps[0].passed() && reps[1].passed(),
           fmt::format("x stream max dev {:.3e}, h stream max dev {:.3e} "
                       "(tol {:.0e}), {} cases",
                       reps[1].max_deviation, reps[0].max_deviation,
                       reps[1].tolerance, reps[1].cases) };
}

Outcome autodiff_integrity() {
  ModelConfig cfg = default_config(ModelKind::Equihgnn);
  cfg.hidden = 16;
  cfg.geo_layers = 2;
  const Molecule *pick = nullptr;
  for (const DatasetRecord &r : sample_records())
    if (r.molecule.num_atoms() <= 10) {
      pick = &r.molecule;
      break;
    }
  if (pick == nullptr)
    return { false, "no molecule with at most 10 atoms" };
  Model model = Model::create(cfg);
  const auto t0 = Clock::now();
  const CheckReport r = check_gradients(model, *pick, 1e-5);
  const double secs = seconds_since(t0);
  return { r.passed() && secs <= 300.0,
           fmt::format("{} ({} atoms), {} parameters, max rel err {:.3e} "
                       "(tol {:.0e}), {:.1f} s (limit 300)",
                       pick->name, pick->num_atoms(), r.cases, r.max_deviation,
                       r.tolerance, secs) };
}

Outcome conjugation_corpus() {
  std::ifstream in(kData / "conjugation_corpus.json");
  if (!in)
    return { false, "conjugation_corpus.json missing" };
  const auto doc = nlohmann::json::parse(in);
  std::size_t mols = 0, flags = 0, bad = 0;
  std::string first_bad;
  for (const auto &entry : doc["molecules"]) {
    ++mols;
    const std::string smi = entry["smiles"];
    const Molecule m = perceive_conjugation(parse_smiles(smi));
    bool ok = m.num_atoms() == entry["num_atoms"].get<std::size_t>()
              && m.num_bonds() == entry["num_bonds"].get<std::size_t>();
    for (const auto &flag : entry["heavy_bonds"]) {
      ++flags;
      const std::size_t a = flag[0], b = flag[1];
      const auto it = std::find_if(m.bonds.begin(), m.bonds.end(),
                                   [&](const Bond &x) {
                                     return std::min(x.a, x.b) == a
                                            && std::max(x.a, x.b) == b;
                                   });
      ok = ok && it != m.bonds.end() && it->conjugated == flag[2].get<bool>();
    }
    ok = ok
         && build_hypergraph(m).hyperedges()
                == entry["hyperedges"]
                       .get<std::vector<std::vector<std::size_t>>>();
    if (!ok) {
      ++bad;
      if (first_bad.empty())
        first_bad = smi;
    }
  }
  return { bad == 0 && mols == 50,
           fmt::format("{} molecules, {} heavy-atom bond flags, {} mismatched{}",
                       mols, flags, bad,
                       first_bad.empty() ? "" : " (first: " + first_bad + ")") };
}

Outcome bipartite_round_trip() {
  std::mt19937_64 rng(6);
  std::size_t failures = 0, incidences = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 30)(rng);
    const std::size_t m = std::uniform_int_distribution<std::size_t>(0, 8)(rng);
    std::vector<std::vector<std::size_t>> edges;
    for (std::size_t e = 0; e < m; ++e) {
      std::vector<std::size_t> all(n);
      std::iota(all.begin(), all.end(), 0);
      std::shuffle(all.begin(), all.end(), rng);
      all.resize(std::uniform_int_distribution<std::size_t>(1, n)(rng));
      edges.push_back(all);
    }
    const Hypergraph h(n, edges);
    const BipartiteGraph b = to_bipartite(h);
    incidences += b.incidence.size();
    if (!(from_bipartite(b) == h))
      ++failures;
  }
  return { failures == 0,
           fmt::format("1000 hypergraphs, {} incidences, {} failures",
                       incidences, failures) };
}

struct OverfitRun {
  std::string csv;
  double train_mae = 0.0;
  double baseline_mae = 0.0;
  std::size_t epochs = 0;
  double seconds = 0.0;
};

OverfitRun overfit_run(const fs::path &out_dir) {
  const auto &all = sample_records();
  const std::vector<DatasetRecord> train_set(all.begin(), all.begin() + 64);
  TrainConfig tc;
  tc.epochs = 200;
  tc.batch_size = 16;
  tc.lr = 1e-4;
  tc.seed = 0;
  tc.target_name = "gap";
  tc.eval_every = 1;
  tc.threads = 0;
  tc.out_dir = out_dir;
  fs::remove_all(out_dir);
  const ModelConfig mc = default_config(ModelKind::Equihgnn);

  const auto t0 = Clock::now();
  TrainResult res = train(mc, tc, train_set, train_set);
  OverfitRun run;
  run.seconds = seconds_since(t0);
  run.epochs = res.log.empty() ? 0 : res.log.back().epoch;
  const Model final_model = Model::from_params(mc, std::move(res.final_params));
  run.train_mae = records_mae(final_model, res.normalizer, train_set, "gap");
  double mean = 0.0;
  for (const DatasetRecord &r : train_set)
    mean += r.targets.at("gap");
  mean /= static_cast<double>(train_set.size());
  for (const DatasetRecord &r : train_set)
    run.baseline_mae += std::abs(r.targets.at("gap") - mean);
  run.baseline_mae /= static_cast<double>(train_set.size());
  std::ifstream in(res.metrics_csv, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  run.csv = ss.str();
  return run;
}

const fs::path kRunRoot = fs::temp_directory_path() / "equihg_acceptance";
OverfitRun g_first;
bool g_have_first = false;

Outcome overfit_contract() {
  g_first = overfit_run(kRunRoot / "overfit_a");
  g_have_first = true;
  const double ratio = g_first.train_mae / g_first.baseline_mae;
  return { ratio <= 0.2 && g_first.epochs <= 200 && g_first.seconds <= 600.0,
           fmt::format("train MAE {:.2f} vs constant {:.2f} meV (ratio {:.3f}, "
                       "limit 0.2), {} epochs, {:.1f} s (limit 600)",
                       g_first.train_mae, g_first.baseline_mae, ratio,
                       g_first.epochs, g_first.seconds) };
}

Outcome determinism() {
  if (!g_have_first)
    overfit_contract();
  const OverfitRun second = overfit_run(kRunRoot / "overfit_b");
  const bool same = second.csv == g_first.csv && !second.csv.empty();
  return { same, fmt::format("metrics CSVs {} ({} bytes each)",
                             same ? "identical" : "differ", g_first.csv.size()) };
}

Outcome trend_smoke() {
  const auto &all = sample_records();
  const std::size_t n = std::min<std::size_t>(1000, all.size());
  const DatasetSplit split =
      split_dataset(std::span(all).first(n), 0);
  // Reduced width and epoch count keep this under a few minutes on one core.
  TrainConfig tc;
  tc.epochs = 10;
  tc.batch_size = 16;
  tc.lr = 1e-3;
  tc.seed = 0;
  double mae[2] = {};
  const ModelKind kinds[2] = { ModelKind::Equihgnn, ModelKind::Mhnn };
  for (int k = 0; k < 2; ++k) {
    ModelConfig mc = default_config(kinds[k]);
    mc.hidden = 64;
    tc.out_dir = kRunRoot / fmt::format("trend_{}", to_string(kinds[k]));
    fs::remove_all(tc.out_dir);
    mae[k] = train(mc, tc, split.train, split.val).best_val_mae;
  }
  return { mae[0] <= mae[1],
           fmt::format("{} molecules, hidden 64, {} epochs: val MAE equihgnn "
                       "{:.2f}, mhnn {:.2f} meV; ordering {}",
                       n, tc.epochs, mae[0], mae[1],
                       mae[0] <= mae[1] ? "as expected" : "reversed") };
}

struct Criterion {
  int id;
  const char *name;
  bool blocking;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char **argv) {
#if defined(__GLIBC__)
  // Tape buffers are allocated and freed every step; keeping them on the
  // heap instead of mmap/munmap saves a lot of kernel time.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
  const std::vector<Criterion> criteria{
    { 1, "E(3) invariance of predictions", true, rigid_invariance },
    { 2, "permutation invariance (equihgnn, mhnn, gin)", true,
      permutation_invariance },
    { 3, "coordinate stream equivariance", true, coordinate_equivariance },
    { 4, "autodiff gradient check", true, autodiff_integrity },
    { 5, "conjugation golden corpus", true, conjugation_corpus },
    { 6, "hypergraph/bipartite round trip", true, bipartite_round_trip },
    { 7, "overfit contract", true, overfit_contract },
    { 8, "determinism of training logs", true, determinism },
    { 9, "trend smoke check (reported, not asserted)", false, trend_smoke },
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i)
    only.insert(std::atoi(argv[i]));

  int blocking_failures = 0;
  for (const Criterion &c : criteria) {
    if (!only.empty() && !only.contains(c.id))
      continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception &e) {
      o = { false, std::string("exception: ") + e.what() };
    }
    const char *verdict = o.pass ? "PASS" : "FAIL";
    std::cout << fmt::format("[{}] criterion {} {}: {}\n", verdict, c.id,
                             c.name, o.detail)
              << std::flush;
    if (!o.pass && c.blocking)
      ++blocking_failures;
  }
  std::cout << fmt::format("{} blocking criteria failed\n", blocking_failures);
  return blocking_failures == 0 ? 0 : 1;
}
