//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

// Command-line front end. Every subcommand that trains or searches reads a
// config file; --seed overrides its seed.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "molsearch/chem/canonical.h"
#include "molsearch/chem/features.h"
#include "molsearch/chem/smiles.h"
#include "molsearch/deen/energy.h"
#include "molsearch/io/archive.h"
#include "molsearch/pipeline/config.h"
#include "molsearch/pipeline/report.h"
#include "molsearch/pipeline/run.h"

namespace {
using namespace molsearch;
namespace fs = std::filesystem;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "molsearch_out";
};

void add_common(CLI::App *cmd, Common &c, bool needs_config) {
  auto *opt = cmd->add_option("--config", c.config, "Config file (key = value lines)");
  if (needs_config)
    opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Master seed (overrides the config)");
  cmd->add_option("--out-dir", c.out_dir, "Directory for artifacts")->capture_default_str();
}

pipeline::PipelineConfig config_of(const Common &c) {
  pipeline::PipelineConfig cfg = pipeline::load_config(c.config);
  if (c.seed) {
    cfg.seed = *c.seed;
    cfg.search.seed = *c.seed;
  }
  return cfg;
}

void log_line(const std::string &s) { std::cerr << "molsearch: " << s << '\n'; }

std::vector<std::string> read_smiles(const std::vector<std::string> &given,
                                     const std::string &input) {
  std::vector<std::string> out = given;
  if (!input.empty()) {
    std::ifstream in(input);
    if (!in)
      throw pipeline::PipelineError(pipeline::PipelineErrc::kIo,
                                    "cannot open '" + input + "'");
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r')
        line.pop_back();
      if (!line.empty())
        out.push_back(line);
    }
  }
  return out;
}

int featurize(const std::vector<std::string> &smiles) {
  for (const std::string &s: smiles) {
    const chem::Molecule mol = chem::parse_smiles(s);
    const chem::MolecularGraph g = chem::featurize(mol);
    nlohmann::json edges = nlohmann::json::array();
    for (const chem::GraphEdge &e: g.edges)
      edges.push_back({ e.source, e.target, static_cast<int>(e.category) });
    const nlohmann::json j = {
      { "smiles", s },
      { "canonical_key", chem::canonical_key(mol) },
      { "nodes", g.node_features },
      { "edges", edges },
    };
    std::cout << j.dump() << '\n';
  }
  return 0;
}

int eval(const std::vector<std::string> &smiles, const std::string &dir) {
  gnn::Ensemble ens = io::load_ensemble((fs::path(dir) / "checkpoints" / "gnn").string());
  const fs::path energy_path = fs::path(dir) / "checkpoints" / "energy.ckpt";
  std::optional<deen::EnergyNet> net;
  if (fs::exists(energy_path))
    net = io::energy_from_archive(io::load_archive(energy_path.string()));

  std::cout << "smiles,canonical_key";
  for (std::size_t a = 0; a < ens.members[0].config.assays; ++a)
    std::cout << ",f_" << a;
  if (net)
    std::cout << ",energy";
  std::cout << '\n';
  for (const std::string &s: smiles) {
    const chem::Molecule mol = chem::parse_smiles(s);
    const chem::MolecularGraph g = chem::featurize(mol);
    const gnn::Prediction p = gnn::ensemble_predict(ens, { &g }, 1);
    std::cout << s << ',' << chem::canonical_key(mol);
    for (double f: p.probs.values())
      std::cout << ',' << pipeline::format_number(f);
    if (net)
      std::cout << ',' << pipeline::format_number(deen::energy(*net, p.latent));
    std::cout << '\n';
  }
  return 0;
}
}  // namespace

int main(int argc, char **argv) {
#ifdef __GLIBC__
  // Training allocates and frees large tensors at a high rate; keeping freed
  // memory in the heap avoids repeated page faults.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif

  CLI::App app { "molsearch: property-guided molecule search" };
  app.require_subcommand(1);

  std::vector<std::string> smiles;
  std::string input;
  auto *feat = app.add_subcommand("featurize", "Print graph features of SMILES strings");
  feat->add_option("--smiles", smiles, "SMILES string (repeatable)");
  feat->add_option("--input", input, "File with one SMILES per line");

  Common synth_c, gnn_c, deen_c, search_c, eval_c, pipe_c;
  auto *synth = app.add_subcommand("synth-data", "Write the configured dataset");
  add_common(synth, synth_c, true);
  auto *train_gnn = app.add_subcommand("train-gnn", "Train and evaluate the predictor ensemble");
  add_common(train_gnn, gnn_c, true);
  auto *train_deen = app.add_subcommand("train-deen", "Fit the energy model on ensemble latents");
  add_common(train_deen, deen_c, true);
  auto *search = app.add_subcommand("search", "Run the tree search with trained models");
  add_common(search, search_c, true);
  auto *ev = app.add_subcommand("eval", "Score SMILES strings with trained models");
  add_common(ev, eval_c, false);
  ev->add_option("--smiles", smiles, "SMILES string (repeatable)");
  ev->add_option("--input", input, "File with one SMILES per line");
  auto *pipe = app.add_subcommand("pipeline", "Run every stage end to end");
  add_common(pipe, pipe_c, true);

  CLI11_PARSE(app, argc, argv);

  const char *tag = app.get_subcommands().front()->get_name().c_str();
  try {
    using pipeline::RunOptions;
    using pipeline::Stage;
    auto run = [](const Common &c, RunOptions opts) {
      const pipeline::PipelineConfig cfg = config_of(c);
      pipeline::run_pipeline(cfg, c.out_dir, log_line, opts);
      return 0;
    };
    if (*feat)
      return featurize(read_smiles(smiles, input));
    if (*synth)
      return run(synth_c, RunOptions { Stage::kData, true, true });
    if (*train_gnn)
      return run(gnn_c, RunOptions { Stage::kEvaluate, true, true });
    if (*train_deen)
      return run(deen_c, RunOptions { Stage::kBounds, false, true });
    if (*search)
      return run(search_c, RunOptions { Stage::kReport, false, false });
    if (*ev)
      return eval(read_smiles(smiles, input), eval_c.out_dir);
    if (*pipe)
      return run(pipe_c, RunOptions {});
  } catch (const std::exception &e) {
    std::cerr << "molsearch " << tag << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}
