#include "samkit/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "samkit/data.hpp"
#include "samkit/errors.hpp"
#include "samkit/loss.hpp"
#include "samkit/optim.hpp"
#include "samkit/rng.hpp"
#include "samkit/version.hpp"

namespace samkit {

namespace {

// Independent seed streams derived from the run seed. The split stream does
// not depend on the optimizer, so comparison rows share identical splits.
constexpr std::uint64_t kSaltData = 0x64617461;
constexpr std::uint64_t kSaltSplit = 0x73706C69;
constexpr std::uint64_t kSaltInit = 0x696E6974;
constexpr std::uint64_t kSaltBatches = 0x62617463;

Dataset build_dataset(const RunConfig& cfg) {
  switch (cfg.dataset) {
    case DatasetKind::Blobs:
      return gen_blobs(derive_seed(cfg.seed, kSaltData), cfg.n_per_class, cfg.classes, cfg.dim,
                       cfg.spread);
    case DatasetKind::Spirals:
      return gen_spirals(derive_seed(cfg.seed, kSaltData), cfg.n_per_class, cfg.classes,
                         cfg.noise);
    case DatasetKind::Csv:
      return load_csv(cfg.csv_path);
  }
  throw std::logic_error("build_dataset: unhandled dataset kind");
}

nlohmann::json config_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["dataset"] = std::string(dataset_kind_name(cfg.dataset));
  j["n_per_class"] = cfg.n_per_class;
  j["classes"] = cfg.classes;
  j["dim"] = cfg.dim;
  j["spread"] = cfg.spread;
  j["noise"] = cfg.noise;
  j["csv_path"] = cfg.csv_path;
  j["split"] = cfg.split_fractions;
  j["hidden"] = cfg.hidden;
  j["optimizer"] = std::string(kind_name(cfg.optimizer));
  j["rho"] = cfg.rho;
  j["epochs"] = cfg.epochs;
  j["batch"] = cfg.batch_size;
  j["lr"] = cfg.base_lr;
  j["momentum"] = cfg.momentum;
  j["weight_decay"] = cfg.weight_decay;
  j["seed"] = cfg.seed;
  j["out"] = cfg.out_dir.string();
  j["per_step"] = cfg.per_step;
  return j;
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string());
  out << j.dump(2) << "\n";
  out.close();
  if (!out) throw IoError("write failed for " + path.string());
}

void write_manifest(const std::filesystem::path& dir, const RunConfig& cfg,
                    double wall_seconds) {
  nlohmann::json j;
  j["config"] = config_json(cfg);
  j["version"] = std::string(kVersion);
  j["wall_time_seconds"] = wall_seconds;
  write_json_file(dir / "manifest.json", j);
}

void write_summary(const std::filesystem::path& dir, const RunSummary& s) {
  nlohmann::json j;
  j["aborted"] = s.aborted;
  j["abort_context"] = s.abort_context;
  j["final_train_loss"] = s.final_train_loss;
  j["final_val_loss"] = s.final_val_loss;
  j["final_val_accuracy"] = s.final_val_accuracy;
  j["best_val_accuracy"] = s.best_val_accuracy;
  j["best_val_epoch"] = s.best_val_epoch;
  j["final_test_accuracy"] = s.final_test_accuracy;
  write_json_file(dir / "summary.json", j);
}

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Full pass in chunks: mean one-hot cross-entropy and argmax accuracy.
EvalResult evaluate(Mlp& model, const Dataset& ds) {
  constexpr std::size_t kChunk = 256;
  double loss_total = 0.0;
  std::size_t hits = 0;
  std::vector<std::size_t> indices(kChunk);
  for (std::size_t off = 0; off < ds.size(); off += kChunk) {
    const std::size_t n = std::min(kChunk, ds.size() - off);
    indices.resize(n);
    for (std::size_t i = 0; i < n; ++i) indices[i] = off + i;
    const Batch batch = gather_batch(ds, indices);
    Tape tape;
    Value logits = model.forward(tape, batch.x);
    Value loss = batch_loss(tape, logits, ce_target_batch(batch.labels, model.spec().classes));
    loss_total += loss.item() * static_cast<double>(n);
    const Array& z = logits.data();
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < z.cols(); ++j) {
        if (z.at(i, j) > z.at(i, best)) best = j;
      }
      if (static_cast<int>(best) == batch.labels[i]) ++hits;
    }
  }
  EvalResult result;
  result.loss = loss_total / static_cast<double>(ds.size());
  result.accuracy = static_cast<double>(hits) / static_cast<double>(ds.size());
  return result;
}

}  // namespace

SplitResult prepare_splits(const RunConfig& cfg) {
  const Dataset full = build_dataset(cfg);
  SplitResult splits = split(full, cfg.split_fractions, derive_seed(cfg.seed, kSaltSplit));
  standardize(splits.train, splits.val, splits.test);
  return splits;
}

RunResult run_experiment(const RunConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();

  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create " + cfg.out_dir.string() + ": " + ec.message());

  SplitResult splits = prepare_splits(cfg);

  MlpSpec spec;
  spec.input_dim = splits.train.dim();
  spec.hidden = cfg.hidden;
  spec.classes = splits.train.classes;
  spec.seed = derive_seed(cfg.seed, kSaltInit);
  Mlp model(spec);

  SgdState sgd;
  sgd.momentum = cfg.momentum;
  sgd.weight_decay = cfg.weight_decay;
  const PerturbStrategy strategy{cfg.optimizer, cfg.rho};
  const bool perturbed = cfg.optimizer != PerturbKind::None;

  RunResult result;
  result.dir = cfg.out_dir;

  std::ofstream csv(cfg.out_dir / "telemetry.csv");
  if (!csv) throw IoError("cannot open " + (cfg.out_dir / "telemetry.csv").string());
  csv << kTelemetryHeader << "\n";

  std::ofstream step_csv;
  if (cfg.per_step) {
    step_csv.open(cfg.out_dir / "steps.csv");
    if (!step_csv) throw IoError("cannot open " + (cfg.out_dir / "steps.csv").string());
    step_csv << "epoch,step,perturb_loss,perturb_grad_norm,perturb_distance,train_loss\n";
  }

  const std::uint64_t batch_base = derive_seed(cfg.seed, kSaltBatches);
  RunSummary& summary = result.summary;

  try {
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      sgd.lr = lr_at(epoch, cfg.epochs, cfg.base_lr);
      const auto index_batches = batches(splits.train, cfg.batch_size, batch_base + epoch);

      double train_loss_sum = 0.0, train_acc_sum = 0.0;
      double ploss_sum = 0.0, pgrad_sum = 0.0, pdist_sum = 0.0;
      for (std::size_t s = 0; s < index_batches.size(); ++s) {
        const Batch batch = gather_batch(splits.train, index_batches[s]);
        StepTelemetry st;
        try {
          st = sam_step(model, batch, strategy, sgd);
        } catch (const NumericalAbort& abort) {
          throw NumericalAbort("epoch " + std::to_string(epoch) + " step " +
                               std::to_string(s) + ": " + abort.what());
        }
        train_loss_sum += st.train_loss;
        train_acc_sum += st.batch_accuracy;
        if (perturbed) {
          ploss_sum += *st.perturb_loss;
          pgrad_sum += *st.perturb_grad_norm;
          pdist_sum += *st.perturb_distance;
        }
        if (cfg.per_step) {
          step_csv << epoch << ',' << s << ','
                   << (st.perturb_loss ? format_double(*st.perturb_loss) : "") << ','
                   << (st.perturb_grad_norm ? format_double(*st.perturb_grad_norm) : "") << ','
                   << (st.perturb_distance ? format_double(*st.perturb_distance) : "") << ','
                   << format_double(st.train_loss) << "\n";
        }
      }

      const double steps = static_cast<double>(index_batches.size());
      const EvalResult val = evaluate(model, splits.val);
      if (!std::isfinite(val.loss)) {
        throw NumericalAbort("epoch " + std::to_string(epoch) +
                             ": non-finite validation loss");
      }

      TelemetryRecord rec;
      rec.epoch = epoch;
      rec.train_loss = train_loss_sum / steps;
      rec.val_loss = val.loss;
      if (perturbed) {
        rec.perturb_loss = ploss_sum / steps;
        rec.perturb_grad_norm = pgrad_sum / steps;
        rec.perturb_distance = pdist_sum / steps;
      }
      rec.train_acc = train_acc_sum / steps;
      rec.val_acc = val.accuracy;
      rec.lr = sgd.lr;

      csv << telemetry_csv_row(rec) << "\n";
      csv.flush();
      result.telemetry.push_back(rec);

      if (result.telemetry.size() == 1 || val.accuracy > summary.best_val_accuracy) {
        summary.best_val_accuracy = val.accuracy;
        summary.best_val_epoch = epoch;
      }
    }
  } catch (const NumericalAbort& abort) {
    summary.aborted = true;
    summary.abort_context = abort.what();
  }

  if (!result.telemetry.empty()) {
    const TelemetryRecord& last = result.telemetry.back();
    summary.final_train_loss = last.train_loss;
    summary.final_val_loss = last.val_loss;
    summary.final_val_accuracy = last.val_acc;
  }
  if (!summary.aborted) {
    summary.final_test_accuracy = evaluate(model, splits.test).accuracy;
  }

  write_summary(cfg.out_dir, summary);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_manifest(cfg.out_dir, cfg, wall);
  return result;
}

std::vector<GridCell> run_grid(const RunConfig& base, const std::vector<double>& rhos) {
  if (rhos.empty()) throw ConfigError({"grid: empty rho list"});
  for (double rho : rhos) {
    if (!(rho > 0.0)) throw ConfigError({"grid: rho values must be positive"});
  }

  std::error_code ec;
  std::filesystem::create_directories(base.out_dir, ec);
  if (ec) throw IoError("cannot create " + base.out_dir.string() + ": " + ec.message());

  constexpr PerturbKind kVariants[2] = {PerturbKind::AaceNorm, PerturbKind::AaceRaw};
  std::vector<GridCell> cells;
  for (double rho : rhos) {
    for (PerturbKind kind : kVariants) {
      GridCell cell;
      cell.rho = rho;
      cell.kind = kind;
      RunConfig cfg = base;
      cfg.optimizer = kind;
      cfg.rho = rho;
      cfg.out_dir = base.out_dir / (std::string("grid_") + std::string(kind_name(kind)) +
                                    "_rho" + format_double(rho));
      try {
        const RunResult run = run_experiment(cfg);
        if (!run.summary.aborted) cell.final_val_accuracy = run.summary.final_val_accuracy;
      } catch (const std::exception&) {
        // recorded as an empty cell; remaining cells still run
      }
      cells.push_back(cell);
    }
  }

  std::ofstream out(base.out_dir / "grid.csv");
  if (!out) throw IoError("cannot open " + (base.out_dir / "grid.csv").string());
  out << "rho,aace_norm,aace_raw\n";
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    const GridCell& norm_cell = cells[2 * i];
    const GridCell& raw_cell = cells[2 * i + 1];
    out << format_double(rhos[i]) << ','
        << (norm_cell.final_val_accuracy ? format_double(*norm_cell.final_val_accuracy) : "")
        << ','
        << (raw_cell.final_val_accuracy ? format_double(*raw_cell.final_val_accuracy) : "")
        << "\n";
  }
  out.close();
  if (!out) throw IoError("write failed for " + (base.out_dir / "grid.csv").string());
  return cells;
}

std::vector<CompareRow> run_compare(const RunConfig& base,
                                    const std::vector<PerturbKind>& kinds) {
  if (kinds.empty()) throw ConfigError({"compare: empty kind list"});

  std::error_code ec;
  std::filesystem::create_directories(base.out_dir, ec);
  if (ec) throw IoError("cannot create " + base.out_dir.string() + ": " + ec.message());

  std::vector<CompareRow> rows;
  for (PerturbKind kind : kinds) {
    CompareRow row;
    row.kind = kind;
    RunConfig cfg = base;
    cfg.optimizer = kind;
    cfg.rho = default_rho(kind);
    // equal backpropagation budget: the two-pass kinds cost twice per step
    cfg.epochs = base.epochs * (kind == PerturbKind::None ? 2 : 1);
    cfg.out_dir = base.out_dir / (std::string("compare_") + std::string(kind_name(kind)));
    if (kind != PerturbKind::None) row.rho = cfg.rho;
    row.epochs = cfg.epochs;

    const RunResult run = run_experiment(cfg);
    row.aborted = run.summary.aborted;
    if (!run.summary.aborted) {
      row.final_test_accuracy = run.summary.final_test_accuracy;
      row.best_val_accuracy = run.summary.best_val_accuracy;
    }
    rows.push_back(row);
  }

  std::ofstream out(base.out_dir / "compare.csv");
  if (!out) throw IoError("cannot open " + (base.out_dir / "compare.csv").string());
  out << "kind,rho,epochs,final_test_acc,best_val_acc\n";
  for (const CompareRow& row : rows) {
    out << kind_name(row.kind) << ',' << (row.rho ? format_double(*row.rho) : "") << ','
        << row.epochs << ','
        << (row.final_test_accuracy ? format_double(*row.final_test_accuracy) : "") << ','
        << (row.best_val_accuracy ? format_double(*row.best_val_accuracy) : "") << "\n";
  }
  out.close();
  if (!out) throw IoError("write failed for " + (base.out_dir / "compare.csv").string());
  return rows;
}

}  // namespace samkit
