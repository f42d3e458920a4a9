//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "equihg/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "equihg/checks.hpp"
#include "equihg/chemio.hpp"
#include "equihg/config.hpp"
#include "equihg/error.hpp"
#include "equihg/hypergraph.hpp"
#include "equihg/model.hpp"
#include "equihg/nn.hpp"
#include "equihg/trainer.hpp"

namespace equihg {

namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string lower_ext(const fs::path &p) {
  std::string e = p.extension().string();
  for (char &c : e)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return e;
}

std::size_t threads_from_env() {
  const char *v = std::getenv("EQUIHG_THREADS");
  if (v == nullptr || *v == '\0')
    return 0;
  std::string_view s(v);
  std::size_t n = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ConfigError(fmt::format("EQUIHG_THREADS='{}' is not a count", s));
  return n;
}

// convert ------------------------------------------------------------------

struct ConvertArgs {
  std::string input;
  std::string output;
  std::string format = "auto";
};

int cmd_convert(const ConvertArgs &a, std::ostream &out, std::ostream &err) {
  const fs::path in(a.input);
  std::string format = a.format;
  if (format == "auto") {
    const std::string ext = lower_ext(in);
    if (fs::is_directory(in) || ext == ".xyz")
      format = "xyz";
    else if (ext == ".smi" || ext == ".smiles" || ext == ".txt")
      format = "smiles";
    else
      format = "sdf";
  }

  int status = kExitOk;
  std::vector<Molecule> mols;
  if (format == "smiles") {
    std::istringstream lines(read_text(in));
    std::string line;
    for (std::size_t no = 1; std::getline(lines, line); ++no) {
      std::istringstream fields(line);
      std::string smiles, name;
      if (!(fields >> smiles))
        continue;
      fields >> name;
      try {
        Molecule m = parse_smiles(smiles);
        if (!name.empty())
          m.name = name;
        mols.push_back(std::move(m));
      } catch (const Error &e) {
        err << fmt::format("{}:{}: {}\n", a.input, no, e.what());
        status = kExitUserError;
      }
    }
  } else if (format == "xyz") {
    mols = read_molecules(in);
  } else {
    try {
      mols = parse_sdf(read_text(in));
    } catch (const ParseError &e) {
      err << fmt::format("{}: {}\n", a.input, e.what());
      return kExitUserError;
    }
  }

  std::ofstream file;
  std::ostream *sink = &out;
  if (!a.output.empty()) {
    file.open(a.output, std::ios::binary | std::ios::trunc);
    if (!file)
      throw Error("cannot write " + a.output);
    sink = &file;
  }
  for (std::size_t i = 0; i < mols.size(); ++i) {
    try {
      *sink << build_hypergraph(perceive_conjugation(mols[i])).to_json()
            << '\n';
    } catch (const Error &e) {
      err << fmt::format("{}: record {} ('{}'): {}\n", a.input, i + 1,
                         mols[i].name, e.what());
      status = kExitUserError;
    }
  }
  return status;
}

// inspect ------------------------------------------------------------------

int cmd_inspect(const std::string &input, std::ostream &out) {
  const fs::path in(input);
  if (lower_ext(in) == ".ckpt") {
    const Checkpoint ck = load_checkpoint(in);
    out << ck.meta.dump(2) << '\n';
    out << fmt::format("parameters: {} tensors, {} scalars\n", ck.params.size(),
                       ck.params.num_scalars());
    if (ck.optim)
      out << fmt::format("optimizer: adam, step {}\n", ck.optim->step);
    return kExitOk;
  }
  for (const Molecule &raw : read_molecules(in)) {
    const Molecule mol = perceive_conjugation(raw);
    const Hypergraph h = build_hypergraph(mol);
    std::size_t conj = 0;
    for (const Bond &b : mol.bonds)
      conj += b.conjugated ? 1 : 0;
    out << fmt::format("{}\tatoms={}\tbonds={}\tconjugated_bonds={}\t"
                       "hyperedges={}\tcoords={}\n",
                       mol.name, mol.num_atoms(), mol.num_bonds(), conj,
                       h.num_hyperedges(), mol.has_coords() ? "yes" : "no");
  }
  return kExitOk;
}

// train / eval ---------------------------------------------------------------

struct RunArgs {
  std::string config;
  std::string molecules, targets, target, kind, out_dir, checkpoint, split,
      report;
  std::size_t hidden = 0, geo_layers = 0, hg_layers = 0, epochs = 0,
              batch_size = 0, eval_every = 0, n = 0;
  double lr = 0;
  std::uint64_t seed = 0, split_seed = 0;
};

struct RunOptions {
  CLI::Option *molecules = nullptr, *targets = nullptr, *target = nullptr,
              *kind = nullptr, *out_dir = nullptr, *hidden = nullptr,
              *geo_layers = nullptr, *hg_layers = nullptr, *epochs = nullptr,
              *batch_size = nullptr, *eval_every = nullptr, *n = nullptr,
              *lr = nullptr, *seed = nullptr, *split_seed = nullptr;
};

void add_data_options(CLI::App *app, RunArgs &a, RunOptions &o) {
  app->add_option("-c,--config", a.config, "Config file ([model]/[train]/[data])");
  o.molecules = app->add_option("--molecules", a.molecules,
                                "Structures: SDF, XYZ directory or SMILES list");
  o.targets = app->add_option("--targets", a.targets,
                              "Targets CSV with a 'name' column");
  o.n = app->add_option("--n", a.n, "Use the first n structures (0 = all)");
  o.split_seed = app->add_option("--split-seed", a.split_seed,
                                 "Seed of the 80/10/10 split");
}

void add_model_options(CLI::App *app, RunArgs &a, RunOptions &o) {
  o.kind = app->add_option("--kind", a.kind, "equihgnn, mhnn or gin");
  o.hidden = app->add_option("--hidden", a.hidden, "Hidden width");
  o.geo_layers = app->add_option("--geo-layers", a.geo_layers,
                                 "EGNN layers");
  o.hg_layers = app->add_option("--hg-layers", a.hg_layers,
                                "Hypergraph (or GIN) layers");
  o.seed = app->add_option("--seed", a.seed, "Seed for parameters and shuffling");
}

RunConfig resolve(const RunArgs &a, const RunOptions &o) {
  RunConfig cfg = a.config.empty() ? RunConfig{} : load_config(a.config);
  auto set = [](CLI::Option *opt) { return opt != nullptr && opt->count() > 0; };
  if (set(o.molecules))
    cfg.data.molecules = a.molecules;
  if (set(o.targets))
    cfg.data.targets = a.targets;
  if (set(o.n))
    cfg.data.n = a.n;
  if (set(o.split_seed))
    cfg.data.split_seed = a.split_seed;
  if (set(o.kind))
    cfg.model.kind = model_kind_from_string(a.kind);
  if (set(o.hidden))
    cfg.model.hidden = a.hidden;
  if (set(o.geo_layers))
    cfg.model.geo_layers = a.geo_layers;
  if (set(o.hg_layers))
    cfg.model.hg_layers = a.hg_layers;
  if (set(o.seed)) {
    cfg.model.seed = a.seed;
    cfg.train.seed = a.seed;
  }
  if (set(o.target))
    cfg.train.target_name = a.target;
  if (set(o.epochs))
    cfg.train.epochs = a.epochs;
  if (set(o.batch_size))
    cfg.train.batch_size = a.batch_size;
  if (set(o.eval_every))
    cfg.train.eval_every = a.eval_every;
  if (set(o.lr))
    cfg.train.lr = a.lr;
  if (set(o.out_dir))
    cfg.train.out_dir = a.out_dir;
  return cfg;
}

std::vector<DatasetRecord> load_records(const DataConfig &d,
                                        const std::string &target,
                                        std::ostream &err) {
  const std::string names[] = { target };
  Dataset ds = load_dataset(d.molecules, d.targets, names);
  for (const std::string &w : ds.warnings)
    err << "warning: " << w << '\n';
  if (d.n > 0 && ds.records.size() > d.n)
    ds.records.resize(d.n);
  return std::move(ds.records);
}

class UsageError : public Error {
 public:
  using Error::Error;
};

void require_data(const RunConfig &cfg) {
  if (cfg.data.molecules.empty() || cfg.data.targets.empty())
    throw UsageError(
        "no data given: pass --molecules and --targets, or a --config file "
        "with a [data] section");
}

int cmd_train(const RunConfig &cfg, std::ostream &out, std::ostream &err) {
  require_data(cfg);
  TrainConfig tc = cfg.train;
  tc.threads = threads_from_env();
  cfg.model.validate();
  tc.validate();

  const auto records = load_records(cfg.data, tc.target_name, err);
  const DatasetSplit split = split_dataset(records, cfg.data.split_seed);
  out << fmt::format("data: {} train, {} val, {} test ({})\n",
                     split.train.size(), split.val.size(), split.test.size(),
                     tc.target_name);
  const TrainResult res = train(cfg.model, tc, split.train, split.val);
  for (const MetricRow &r : res.log)
    out << fmt::format("epoch {:>4}  train_loss {:.6g}  val_mae {:.6g}\n",
                       r.epoch, r.train_loss, r.val_mae);
  out << fmt::format("metrics: {}\n", res.metrics_csv.string());
  out << fmt::format("best checkpoint: {} (epoch {}, val MAE {:.6g})\n",
                     res.best_checkpoint.string(), res.best_epoch,
                     res.best_val_mae);
  if (!split.test.empty()) {
    const EvalReport rep = evaluate(res.best_checkpoint, split.test, "test");
    const fs::path path = tc.out_dir / "test_report.json";
    write_report(path, rep);
    out << rep.to_json().dump() << '\n';
    out << fmt::format("report: {}\n", path.string());
  }
  return kExitOk;
}

int cmd_eval(const RunArgs &a, const RunOptions &o, std::ostream &out,
             std::ostream &err) {
  const RunConfig cfg = resolve(a, o);
  std::optional<ModelKind> expected;
  if (o.kind->count() > 0 || !a.config.empty())
    expected = cfg.model.kind;
  LoadedModel lm = load_trained_model(a.checkpoint, expected);
  require_data(cfg);

  const auto records = load_records(cfg.data, lm.target, err);
  const DatasetSplit split = split_dataset(records, cfg.data.split_seed);
  const std::vector<DatasetRecord> *chosen = nullptr;
  if (a.split == "train")
    chosen = &split.train;
  else if (a.split == "val")
    chosen = &split.val;
  else if (a.split == "test")
    chosen = &split.test;
  else if (a.split == "all")
    chosen = &records;
  if (chosen->empty())
    throw DataError(fmt::format("split '{}' is empty", a.split));

  EvalReport rep;
  rep.target = lm.target;
  rep.split = a.split;
  rep.n = chosen->size();
  rep.mae = records_mae(lm.model, lm.normalizer, *chosen, lm.target);
  const fs::path path = a.report.empty()
                            ? fs::path(a.checkpoint).parent_path()
                                  / fmt::format("eval_{}.json", a.split)
                            : fs::path(a.report);
  write_report(path, rep);
  out << rep.to_json().dump() << '\n';
  out << fmt::format("report: {}\n", path.string());
  return kExitOk;
}

// check ----------------------------------------------------------------------

struct CheckArgs {
  std::string what;
  std::string kind = "equihgnn";
  std::size_t count = 20;
  std::size_t transforms = 10;
  double step = 1e-5;
};

int cmd_check(const CheckArgs &c, const RunArgs &a, const RunOptions &o,
              std::ostream &out) {
  RunConfig cfg = resolve(a, o);
  if (cfg.data.molecules.empty())
    throw UsageError("no molecules given: pass --molecules or a --config "
                     "file with data.molecules");
  if (c.what == "gradcheck" && o.hidden->count() == 0)
    cfg.model.hidden = 16;

  std::vector<Molecule> mols = read_molecules(cfg.data.molecules);
  if (c.what == "gradcheck") {
    std::erase_if(mols, [](const Molecule &m) { return m.num_atoms() > 10; });
    if (mols.empty())
      throw DataError("gradcheck needs a molecule with at most 10 atoms");
    mols.resize(1);
  } else if (mols.size() > c.count) {
    mols.resize(c.count);
  }
  if (mols.empty())
    throw DataError("no molecules to check");

  std::vector<ModelKind> kinds;
  if (c.kind == "all")
    kinds = { ModelKind::Equihgnn, ModelKind::Mhnn, ModelKind::Gin };
  else
    kinds = { model_kind_from_string(c.kind) };

  std::vector<CheckReport> reports;
  std::vector<std::string> labels;
  for (ModelKind kind : kinds) {
    ModelConfig mc = cfg.model;
    mc.kind = kind;
    Model model = Model::create(mc);
    const std::string label(to_string(kind));
    if (c.what == "equivariance") {
      reports.push_back(
          check_rigid_invariance(model, mols, c.transforms, mc.seed));
      labels.push_back(label);
      if (kind == ModelKind::Equihgnn) {
        for (const CheckReport &r : check_encoder_equivariance(
                 model.geo(), mc.cutoff, mc.max_neighbors, mols, c.transforms,
                 mc.seed)) {
          reports.push_back(r);
          labels.push_back(label);
        }
      }
    } else if (c.what == "permutation") {
      reports.push_back(
          check_permutation_invariance(model, mols, c.transforms, mc.seed));
      labels.push_back(label);
    } else {
      reports.push_back(check_gradients(model, mols.front(), c.step));
      labels.push_back(label + ", " + mols.front().name);
    }
  }

  bool ok = true;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const CheckReport &r = reports[i];
    ok = ok && r.passed();
    out << fmt::format("{} [{}]: max deviation {:.3e} (tolerance {:.0e}, "
                       "{} cases) {}\n",
                       r.name, labels[i], r.max_deviation, r.tolerance,
                       r.cases, r.passed() ? "PASS" : "FAIL");
  }
  return ok ? kExitOk : kExitUserError;
}

}  // namespace

int run_cli(std::span<const std::string> args, std::ostream &out,
            std::ostream &err) {
  CLI::App app{ "EquiHG: equivariant hypergraph models for molecular "
                "property prediction",
                "equihg" };
  app.require_subcommand(1);
  app.set_version_flag("--version", "equihg 0.1.0");

  ConvertArgs conv;
  CLI::App *convert = app.add_subcommand(
      "convert", "Perceive conjugation and dump hypergraphs as JSON lines");
  convert->add_option("input", conv.input, "SDF, XYZ (file or directory) or "
                                           "SMILES list")
      ->required();
  convert->add_option("-o,--output", conv.output, "Output file (default stdout)");
  convert->add_option("-f,--format", conv.format, "Input format")
      ->check(CLI::IsMember({ "auto", "sdf", "xyz", "smiles" }));

  std::string inspect_input;
  CLI::App *inspect = app.add_subcommand(
      "inspect", "Summarize molecules or a checkpoint");
  inspect->add_option("input", inspect_input, "Structure file or .ckpt")
      ->required();

  RunArgs train_args;
  RunOptions train_opts;
  CLI::App *train_cmd = app.add_subcommand("train", "Train a model");
  add_data_options(train_cmd, train_args, train_opts);
  add_model_options(train_cmd, train_args, train_opts);
  train_opts.target = train_cmd->add_option("--target", train_args.target,
                                            "Target column");
  train_opts.epochs = train_cmd->add_option("--epochs", train_args.epochs,
                                            "Epochs");
  train_opts.batch_size = train_cmd->add_option(
      "--batch-size", train_args.batch_size, "Molecules per batch");
  train_opts.lr = train_cmd->add_option("--lr", train_args.lr, "Adam step size");
  train_opts.eval_every = train_cmd->add_option(
      "--eval-every", train_args.eval_every, "Epochs between validations");
  train_opts.out_dir = train_cmd->add_option("--out-dir", train_args.out_dir,
                                             "Output directory");
  train_cmd->footer("EQUIHG_THREADS caps gradient worker threads "
                    "(0 = single-threaded deterministic mode).");

  RunArgs eval_args;
  RunOptions eval_opts;
  eval_args.split = "test";
  CLI::App *eval_cmd = app.add_subcommand(
      "eval", "Evaluate a checkpoint on a dataset split");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint file")
      ->required();
  add_data_options(eval_cmd, eval_args, eval_opts);
  eval_opts.kind = eval_cmd->add_option("--kind", eval_args.kind,
                                        "Expected model kind");
  eval_cmd->add_option("--split", eval_args.split, "train, val, test or all")
      ->check(CLI::IsMember({ "train", "val", "test", "all" }));
  eval_cmd->add_option("--report", eval_args.report,
                       "JSON report path (default next to the checkpoint)");

  CheckArgs check_args;
  RunArgs check_run;
  RunOptions check_opts;
  CLI::App *check_cmd = app.add_subcommand(
      "check", "Run a symmetry or gradient property check with fresh "
               "random parameters");
  check_cmd->add_option("kind", check_args.what,
                        "equivariance, permutation or gradcheck")
      ->required()
      ->check(CLI::IsMember({ "equivariance", "permutation", "gradcheck" }));
  check_cmd->add_option("-c,--config", check_run.config, "Config file");
  check_opts.molecules = check_cmd->add_option("--molecules", check_run.molecules,
                                               "Structures to check");
  check_opts.kind = check_cmd->add_option(
      "--model", check_args.kind, "equihgnn, mhnn, gin or all");
  check_opts.hidden = check_cmd->add_option(
      "--hidden", check_run.hidden,
      "Hidden width (gradcheck defaults to 16)");
  check_opts.seed = check_cmd->add_option("--seed", check_run.seed,
                                          "Parameter and sampling seed");
  check_cmd->add_option("--n", check_args.count, "Molecules to sample");
  check_cmd->add_option("--transforms", check_args.transforms,
                        "Motions or relabelings per molecule");
  check_cmd->add_option("--step", check_args.step, "Finite-difference step");

  std::vector<const char *> argv;
  argv.reserve(args.size());
  for (const std::string &s : args)
    argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUserError;
  }

  try {
    if (convert->parsed())
      return cmd_convert(conv, out, err);
    if (inspect->parsed())
      return cmd_inspect(inspect_input, out);
    if (train_cmd->parsed()) {
      try {
        return cmd_train(resolve(train_args, train_opts), out, err);
      } catch (const UsageError &e) {
        err << "error: " << e.what() << "\n\n" << train_cmd->help();
        return kExitUserError;
      }
    }
    if (eval_cmd->parsed()) {
      try {
        return cmd_eval(eval_args, eval_opts, out, err);
      } catch (const UsageError &e) {
        err << "error: " << e.what() << "\n\n" << eval_cmd->help();
        return kExitUserError;
      }
    }
    if (check_cmd->parsed()) {
      // --model selects kinds; the config's own kind is not consulted.
      check_opts.kind = nullptr;
      return cmd_check(check_args, check_run, check_opts, out);
    }
  } catch (const Error &e) {
    err << "error: " << e.what() << '\n';
    return kExitUserError;
  } catch (const fs::filesystem_error &e) {
    err << "error: " << e.what() << '\n';
    return kExitUserError;
  } catch (const InvariantError &e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternalError;
  } catch (const std::exception &e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternalError;
  }
  return kExitInternalError;
}

}  // namespace equihg
