//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molsearch/pipeline/run.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "molsearch/grammar/grammar.h"
#include "molsearch/io/archive.h"
#include "molsearch/pipeline/dataset.h"
#include "molsearch/pipeline/metrics.h"
#include "molsearch/pipeline/report.h"
#include "molsearch/pipeline/split.h"
#include "molsearch/pipeline/synthetic.h"
#include "molsearch/search/reward.h"

namespace molsearch::pipeline {
namespace {
namespace fs = std::filesystem;
using diff::Tensor;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class F>
auto stage(const char *name, const LogFn &log, F &&body) {
  if (log)
    log(std::string("stage ") + name);
  try {
    return body();
  } catch (const std::exception &e) {
    throw PipelineError(PipelineErrc::kStage, std::string("stage '") + name + "': " + e.what());
  }
}

template <class F>
auto stage(Stage s, const LogFn &log, F &&body) {
  return stage(stage_name(s), log, std::forward<F>(body));
}

std::ofstream open_out(const fs::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw PipelineError(PipelineErrc::kIo, "cannot write '" + path.string() + "'");
  return out;
}

Tensor take_rows(const Tensor &t, const std::vector<std::size_t> &rows) {
  Tensor out(rows.size(), t.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(t.row_ptr(rows[i]), t.row_ptr(rows[i]) + t.cols(), out.row_ptr(i));
  return out;
}

// Test AUC per assay over the labelled rows.
std::vector<double> assay_aucs(const Tensor &probs, const gnn::LabelMatrix &labels) {
  std::vector<double> out;
  for (std::size_t a = 0; a < labels.assays(); ++a) {
    std::vector<double> s;
    std::vector<int> y;
    for (std::size_t r = 0; r < labels.rows(); ++r) {
      if (labels(r, a) == gnn::kMissingLabel)
        continue;
      s.push_back(probs(r, a));
      y.push_back(labels(r, a));
    }
    try {
      out.push_back(roc_auc(s, y));
    } catch (const MetricError &) {
      out.push_back(kNaN);
    }
  }
  return out;
}

nlohmann::json json_number(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

std::vector<double> top_energies(const std::vector<search::Discovery> &found, std::size_t n) {
  std::vector<double> out;
  for (std::size_t i = 0; i < found.size() && i < n; ++i)
    out.push_back(found[i].eval.energy);
  return out;
}
}  // namespace

const char *stage_name(Stage s) noexcept {
  switch (s) {
  case Stage::kData: return "data";
  case Stage::kSplit: return "split";
  case Stage::kGnn: return "gnn";
  case Stage::kEvaluate: return "evaluate";
  case Stage::kLatent: return "latent";
  case Stage::kDeen: return "deen";
  case Stage::kBounds: return "bounds";
  case Stage::kSearch: return "search";
  case Stage::kReport: return "report";
  }
  return "?";
}

AssayDataset load_dataset(const PipelineConfig &config, const grammar::Grammar &g) {
  return config.data_source == "csv" ? ingest_csv_file(config.data_csv)
                                     : make_synthetic_assays(g, config.synthetic, config.seed);
}

PipelineSummary run_pipeline(const PipelineConfig &config, const std::string &out_dir,
                             const LogFn &log, const RunOptions &options) {
  const fs::path out(out_dir);
  const fs::path gnn_dir = out / "checkpoints" / "gnn";
  const fs::path energy_path = out / "checkpoints" / "energy.ckpt";
  fs::create_directories(gnn_dir);
  {
    std::ofstream cfg = open_out(out / "config.cfg");
    write_config(cfg, config);
  }
  auto reached = [&](Stage s) { return static_cast<int>(s) <= static_cast<int>(options.last); };
  PipelineSummary summary;

  grammar::Grammar g;
  AssayDataset data = stage(Stage::kData, log, [&] {
    g = grammar::load_bnf(config.grammar);
    AssayDataset d = load_dataset(config, g);
    std::ofstream f = open_out(out / "dataset.csv");
    write_dataset_csv(f, d);
    return d;
  });
  summary.assay_ids = data.assay_ids;
  summary.molecules = data.size();
  const std::size_t assays = data.assay_ids.size();
  if (!reached(Stage::kSplit))
    return summary;
  if (config.search_assay >= assays) {
    throw PipelineError(PipelineErrc::kConfig,
                        "search.assay " + std::to_string(config.search_assay)
                            + " is out of range");
  }

  const std::size_t k = config.ensemble_size;
  const SplitPlan plan = stage(Stage::kSplit, log, [&] {
    SplitPlan p = split(data.labels, config.test_fraction, gnn::ensemble_fold_count(k),
                        config.seed);
    std::vector<std::string> role(data.size(), "test");
    std::vector<long> fold(data.size(), -1);
    for (std::size_t f = 0; f < p.folds.size(); ++f) {
      for (std::size_t r: p.folds[f]) {
        role[r] = "train";
        fold[r] = static_cast<long>(f);
      }
    }
    std::ofstream f = open_out(out / "split.csv");
    f << "row,set,fold\n";
    for (std::size_t r = 0; r < data.size(); ++r)
      f << r << ',' << role[r] << ',' << fold[r] << '\n';
    return p;
  });
  summary.test_size = plan.test.size();
  if (!reached(Stage::kGnn))
    return summary;

  const auto train_graphs = data.graph_pointers(plan.train);
  const auto test_graphs = data.graph_pointers(plan.test);
  const gnn::LabelMatrix train_labels = data.labels.subset(plan.train);
  const gnn::LabelMatrix test_labels = data.labels.subset(plan.test);

  gnn::Ensemble ensemble = stage(Stage::kGnn, log, [&] {
    if (!options.train_gnn) {
      gnn::Ensemble ens = io::load_ensemble(gnn_dir.string());
      if (ens.members.empty() || ens.members[0].config.assays != assays)
        throw PipelineError(PipelineErrc::kConfig, "checkpoint does not match the dataset");
      return ens;
    }
    std::ofstream metrics = open_out(out / "metrics.csv");
    metrics << "member,epoch,train_loss,val_loss";
    for (const std::string &id: data.assay_ids)
      metrics << ",val_auc_" << id;
    metrics << '\n';
    gnn::GnnConfig model = config.gnn;
    model.assays = assays;
    auto on_epoch = [&](std::size_t member, const gnn::EpochLog &e) {
      metrics << member << ',' << e.epoch << ',' << format_number(e.train_loss) << ','
              << format_number(e.val_loss);
      for (double a: e.val_auc)
        metrics << ',' << format_number(a);
      metrics << '\n' << std::flush;
      if (log) {
        log("member " + std::to_string(member) + " epoch " + std::to_string(e.epoch)
            + " val_loss " + format_number(e.val_loss));
      }
    };
    gnn::Ensemble ens = gnn::train_ensemble(model, config.train, train_graphs, train_labels,
                                            k, config.seed, on_epoch);
    nlohmann::json train_meta = {
      { "lr", config.train.lr },
      { "batch_size", config.train.batch_size },
      { "weight_decay", config.train.weight_decay },
      { "patience", config.train.patience },
      { "max_epochs", config.train.max_epochs },
      { "seed", config.seed },
    };
    io::save_ensemble(gnn_dir.string(), ens, train_meta);
    return ens;
  });

  if (!reached(Stage::kEvaluate))
    return summary;
  stage(Stage::kEvaluate, log, [&] {
    std::vector<double> mean(assays, 0.0);
    for (std::size_t m = 0; m < ensemble.members.size(); ++m) {
      const gnn::Prediction p =
          gnn::predict(ensemble.members[m], test_graphs, config.train.predict_chunk);
      AucRow row { "member_" + std::to_string(m), assay_aucs(p.probs, test_labels) };
      for (std::size_t a = 0; a < assays; ++a)
        mean[a] += row.auc[a] / static_cast<double>(ensemble.members.size());
      summary.auc_table.push_back(std::move(row));
    }
    summary.auc_table.push_back(AucRow { "member_mean", mean });
    const gnn::Prediction p =
        gnn::ensemble_predict(ensemble, test_graphs, config.train.predict_chunk);
    summary.auc_table.push_back(AucRow { "ensemble", assay_aucs(p.probs, test_labels) });

    std::ofstream f = open_out(out / "auc_table.csv");
    f << "model";
    for (const std::string &id: data.assay_ids)
      f << ",assay_" << id;
    f << '\n';
    for (const AucRow &row: summary.auc_table) {
      f << row.model;
      for (double a: row.auc)
        f << ',' << format_number(a);
      f << '\n';
    }
  });
  if (!reached(Stage::kLatent))
    return summary;

  // Latents of the whole ensemble, the energy model's input space. The
  // training latents only feed the energy-model fit.
  Tensor train_latent, test_latent;
  stage(Stage::kLatent, log, [&] {
    if (options.train_deen) {
      train_latent =
          gnn::ensemble_predict(ensemble, train_graphs, config.train.predict_chunk).latent;
    }
    test_latent = gnn::ensemble_predict(ensemble, test_graphs, config.train.predict_chunk).latent;
  });
  if (!reached(Stage::kDeen))
    return summary;

  deen::EnergyNet energy_net = stage(Stage::kDeen, log, [&] {
    if (!options.train_deen) {
      deen::EnergyNet net = io::energy_from_archive(io::load_archive(energy_path.string()));
      if (net.input_width != ensemble.latent_width())
        throw PipelineError(PipelineErrc::kConfig,
                            "energy checkpoint does not match the ensemble");
      return net;
    }
    std::ofstream f = open_out(out / "deen_metrics.csv");
    f << "epoch,train_loss,test_loss\n";
    auto on_epoch = [&](const deen::DeenEpochLog &e) {
      f << e.epoch << ',' << format_number(e.train_loss) << ',' << format_number(e.test_loss)
        << '\n' << std::flush;
      if (log) {
        log("deen epoch " + std::to_string(e.epoch) + " train_loss "
            + format_number(e.train_loss));
      }
    };
    return deen::train_deen(train_latent, test_latent, config.deen, config.seed, on_epoch).net;
  });
  if (!reached(Stage::kBounds))
    return summary;

  std::vector<double> test_positive_energies;
  stage(Stage::kBounds, log, [&] {
    std::vector<std::size_t> pos;
    for (std::size_t r = 0; r < test_labels.rows(); ++r) {
      if (test_labels(r, config.search_assay) == 1)
        pos.push_back(r);
    }
    const Tensor e = deen::energies(energy_net, take_rows(test_latent, pos));
    test_positive_energies = e.values();
    summary.bounds = deen::bounds_from_energies(test_positive_energies);
    if (options.train_deen) {
      nlohmann::json meta = {
        { "lr", config.deen.lr },
        { "epochs", config.deen.epochs },
        { "batch_size", config.deen.batch_size },
        { "seed", config.seed },
      };
      io::save_archive(energy_path.string(), io::energy_archive(energy_net, config.deen.sigma,
                                                                &summary.bounds, meta));
    }
  });
  if (!reached(Stage::kSearch))
    return summary;

  summary.beta = config.beta.value_or(summary.bounds.beta0);
  search::ModelEvaluator evaluator(search::RewardSpec {
      config.search_assay, summary.beta, summary.bounds, &ensemble, &energy_net });
  auto evaluate = [&evaluator](const std::string &s) { return evaluator(s); };
  auto run = [&](const char *label, const std::string &file) {
    search::SearchStats stats;
    const std::size_t step = std::max<std::size_t>(1, config.search.iterations / 10);
    auto progress = [&](std::size_t r, std::size_t it) {
      if (log && it % step == 0) {
        log(std::string(label) + " restart " + std::to_string(r) + " iteration "
            + std::to_string(it) + " cached " + std::to_string(evaluator.cache_size()));
      }
    };
    auto found = search::run_search(g, evaluate, config.search, &stats, progress);
    std::ofstream f = open_out(out / file);
    search::write_results_csv(f, found);
    return found;
  };
  std::vector<search::Discovery> found, found_zero;
  stage(Stage::kSearch, log, [&] {
    found = run("search", "results.csv");
    summary.discovered = found.size();
    if (config.compare_beta_zero) {
      evaluator.set_beta(0.0);
      found_zero = run("search beta=0", "results_beta_zero.csv");
      summary.discovered_beta_zero = found_zero.size();
    }
  });
  if (!reached(Stage::kReport))
    return summary;

  stage(Stage::kReport, log, [&] {
    const std::vector<double> top = top_energies(found, config.hist_top);
    const std::vector<double> top_zero = top_energies(found_zero, config.hist_top);
    summary.test_positive_median = median(test_positive_energies);
    summary.median_beta = median(top);
    summary.mad_beta = median_abs_deviation(top, summary.test_positive_median);
    summary.median_beta_zero = config.compare_beta_zero ? median(top_zero) : kNaN;
    summary.mad_beta_zero = config.compare_beta_zero
                                ? median_abs_deviation(top_zero, summary.test_positive_median)
                                : kNaN;

    std::vector<HistogramSeries> series { { "test_positives", test_positive_energies },
                                          { "discovered_beta0", top } };
    if (config.compare_beta_zero)
      series.push_back({ "discovered_beta_zero", top_zero });
    std::ofstream h = open_out(out / "energy_hist.csv");
    write_energy_histograms(h, series, config.hist_bins);

    nlohmann::json auc = nlohmann::json::object();
    for (const AucRow &row: summary.auc_table) {
      nlohmann::json r = nlohmann::json::object();
      for (std::size_t a = 0; a < assays; ++a)
        r[data.assay_ids[a]] = json_number(row.auc[a]);
      auc[row.model] = r;
    }
    const nlohmann::json j = {
      { "seed", config.seed },
      { "molecules", summary.molecules },
      { "test_size", summary.test_size },
      { "assays", data.assay_ids },
      { "auc", auc },
      { "phi_min", json_number(summary.bounds.phi_min) },
      { "phi_max", json_number(summary.bounds.phi_max) },
      { "beta0", json_number(summary.bounds.beta0) },
      { "beta", json_number(summary.beta) },
      { "discovered", summary.discovered },
      { "discovered_beta_zero", summary.discovered_beta_zero },
      { "test_positive_median_energy", json_number(summary.test_positive_median) },
      { "median_energy_beta", json_number(summary.median_beta) },
      { "median_energy_beta_zero", json_number(summary.median_beta_zero) },
      { "mad_beta", json_number(summary.mad_beta) },
      { "mad_beta_zero", json_number(summary.mad_beta_zero) },
    };
    std::ofstream f = open_out(out / "summary.json");
    f << j.dump(2) << '\n';
  });
  return summary;
}

}  // namespace molsearch::pipeline
