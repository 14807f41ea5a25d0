//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molsearch/pipeline/config.h"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

#include "molsearch/pipeline/dataset.h"

namespace molsearch::pipeline {
namespace {
std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string &key, const std::string &value,
                            const char *want) {
  throw PipelineError(PipelineErrc::kConfig,
                      "config key '" + key + "': '" + value + "' is not " + want);
}

std::size_t to_size(const std::string &key, const std::string &v) {
  std::size_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    bad_value(key, v, "a non-negative integer");
  return out;
}

double to_double(const std::string &key, const std::string &v) {
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    bad_value(key, v, "a number");
  return out;
}

bool to_bool(const std::string &key, const std::string &v) {
  if (v == "true" || v == "1")
    return true;
  if (v == "false" || v == "0")
    return false;
  bad_value(key, v, "a boolean");
}

std::vector<std::size_t> to_size_list(const std::string &key, const std::string &v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(to_size(key, trim(item)));
  if (out.empty())
    bad_value(key, v, "a comma-separated list");
  return out;
}

std::string resolve(const std::string &base, const std::string &path) {
  if (base.empty() || path.empty() || std::filesystem::path(path).is_absolute())
    return path;
  return (std::filesystem::path(base) / path).lexically_normal().string();
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Keys of the form assay.<index>.<field>.
bool apply_assay_key(PipelineConfig &c, const std::string &key, const std::string &v) {
  if (key.rfind("assay.", 0) != 0)
    return false;
  const auto dot = key.find('.', 6);
  if (dot == std::string::npos)
    return false;
  const std::size_t index = to_size(key, key.substr(6, dot - 6));
  const std::string field = key.substr(dot + 1);
  if (index > 64)
    bad_value(key, key.substr(6, dot - 6), "an assay index below 65");
  auto &assays = c.synthetic.assays;
  if (assays.size() <= index)
    assays.resize(index + 1);
  SyntheticAssay &a = assays[index];
  if (field == "id") {
    a.id = v;
  } else if (field == "rule") {
    a.rule = v;
  } else if (field == "noise") {
    a.label_noise = to_double(key, v);
  } else if (field == "keep_positives") {
    a.keep = a.keep.value_or(LabelCounts {});
    a.keep->positives = to_size(key, v);
  } else if (field == "keep_negatives") {
    a.keep = a.keep.value_or(LabelCounts {});
    a.keep->negatives = to_size(key, v);
  } else {
    return false;
  }
  return true;
}
}  // namespace

KeyValues parse_key_values(std::istream &in) {
  KeyValues kv;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos)
      line.resize(hash);
    const std::string t = trim(line);
    if (t.empty())
      continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw PipelineError(PipelineErrc::kConfig,
                          "config line " + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    if (key.empty())
      throw PipelineError(PipelineErrc::kConfig,
                          "config line " + std::to_string(number) + ": empty key");
    if (!kv.emplace(key, trim(t.substr(eq + 1))).second)
      throw PipelineError(PipelineErrc::kConfig,
                          "config line " + std::to_string(number) + ": duplicate key '"
                              + key + "'");
  }
  return kv;
}

void apply_key_values(PipelineConfig &c, const KeyValues &kv, const std::string &base_dir) {
  using Setter = std::function<void(const std::string &, const std::string &)>;
  auto size_field = [](std::size_t &f) {
    return Setter([&f](const std::string &k, const std::string &v) { f = to_size(k, v); });
  };
  auto double_field = [](double &f) {
    return Setter([&f](const std::string &k, const std::string &v) { f = to_double(k, v); });
  };
  auto bool_field = [](bool &f) {
    return Setter([&f](const std::string &k, const std::string &v) { f = to_bool(k, v); });
  };
  auto path_field = [&base_dir](std::string &f) {
    return Setter([&f, &base_dir](const std::string &, const std::string &v) {
      f = resolve(base_dir, v);
    });
  };

  const std::map<std::string, Setter> setters {
    { "seed", [&](const std::string &k, const std::string &v) { c.seed = to_size(k, v); } },
    { "data.source",
      [&](const std::string &k, const std::string &v) {
        if (v != "synthetic" && v != "csv")
          bad_value(k, v, "'synthetic' or 'csv'");
        c.data_source = v;
      } },
    { "data.csv", path_field(c.data_csv) },
    { "grammar", path_field(c.grammar) },
    { "synth.molecules", size_field(c.synthetic.n_molecules) },
    { "synth.force_depth", size_field(c.synthetic.terminal_force_depth) },
    { "synth.max_atoms", size_field(c.synthetic.max_atoms) },
    { "synth.budget_factor", size_field(c.synthetic.budget_factor) },
    { "split.test_fraction", double_field(c.test_fraction) },
    { "ensemble.k", size_field(c.ensemble_size) },
    { "gnn.width", size_field(c.gnn.width) },
    { "gnn.blocks", size_field(c.gnn.blocks) },
    { "gnn.head_width", size_field(c.gnn.head_width) },
    { "gnn.dropout_in", double_field(c.gnn.head_dropout_in) },
    { "gnn.dropout_hidden", double_field(c.gnn.head_dropout_hidden) },
    { "train.max_epochs", size_field(c.train.max_epochs) },
    { "train.batch_size", size_field(c.train.batch_size) },
    { "train.lr", double_field(c.train.lr) },
    { "train.weight_decay", double_field(c.train.weight_decay) },
    { "train.patience", size_field(c.train.patience) },
    { "deen.hidden",
      [&](const std::string &k, const std::string &v) { c.deen.hidden = to_size_list(k, v); } },
    { "deen.width_scale", double_field(c.deen.width_scale) },
    { "deen.sigma", double_field(c.deen.sigma) },
    { "deen.lr", double_field(c.deen.lr) },
    { "deen.batch_size", size_field(c.deen.batch_size) },
    { "deen.epochs", size_field(c.deen.epochs) },
    { "deen.standardize", bool_field(c.deen.standardize) },
    { "search.iterations", size_field(c.search.iterations) },
    { "search.restarts", size_field(c.search.restarts) },
    { "search.top_k", size_field(c.search.top_k) },
    { "search.c", double_field(c.search.tree.c) },
    { "search.force_depth", size_field(c.search.tree.terminal_force_depth) },
    { "search.assay", size_field(c.search_assay) },
    { "search.beta",
      [&](const std::string &k, const std::string &v) {
        if (v == "beta0")
          c.beta.reset();
        else
          c.beta = to_double(k, v);
      } },
    { "search.compare_beta_zero", bool_field(c.compare_beta_zero) },
    { "report.hist_bins", size_field(c.hist_bins) },
    { "report.hist_top", size_field(c.hist_top) },
  };

  for (const auto &[key, value]: kv) {
    const auto it = setters.find(key);
    if (it != setters.end())
      it->second(key, value);
    else if (!apply_assay_key(c, key, value))
      throw PipelineError(PipelineErrc::kConfig, "unknown config key '" + key + "'");
  }
  c.search.seed = c.seed;
}

PipelineConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw PipelineError(PipelineErrc::kIo, "cannot open config '" + path + "'");
  PipelineConfig c;
  apply_key_values(c, parse_key_values(in),
                   std::filesystem::path(path).parent_path().string());
  return c;
}

void write_config(std::ostream &out, const PipelineConfig &c) {
  auto line = [&](const std::string &k, const std::string &v) {
    out << k << " = " << v << '\n';
  };
  line("seed", std::to_string(c.seed));
  line("data.source", c.data_source);
  if (!c.data_csv.empty())
    line("data.csv", c.data_csv);
  line("grammar", c.grammar);
  line("synth.molecules", std::to_string(c.synthetic.n_molecules));
  line("synth.force_depth", std::to_string(c.synthetic.terminal_force_depth));
  line("synth.max_atoms", std::to_string(c.synthetic.max_atoms));
  line("synth.budget_factor", std::to_string(c.synthetic.budget_factor));
  for (std::size_t i = 0; i < c.synthetic.assays.size(); ++i) {
    const SyntheticAssay &a = c.synthetic.assays[i];
    const std::string p = "assay." + std::to_string(i) + ".";
    line(p + "id", a.id);
    line(p + "rule", a.rule);
    line(p + "noise", num(a.label_noise));
    if (a.keep) {
      line(p + "keep_positives", std::to_string(a.keep->positives));
      line(p + "keep_negatives", std::to_string(a.keep->negatives));
    }
  }
  line("split.test_fraction", num(c.test_fraction));
  line("ensemble.k", std::to_string(c.ensemble_size));
  line("gnn.width", std::to_string(c.gnn.width));
  line("gnn.blocks", std::to_string(c.gnn.blocks));
  line("gnn.head_width", std::to_string(c.gnn.head_width));
  line("gnn.dropout_in", num(c.gnn.head_dropout_in));
  line("gnn.dropout_hidden", num(c.gnn.head_dropout_hidden));
  line("train.max_epochs", std::to_string(c.train.max_epochs));
  line("train.batch_size", std::to_string(c.train.batch_size));
  line("train.lr", num(c.train.lr));
  line("train.weight_decay", num(c.train.weight_decay));
  line("train.patience", std::to_string(c.train.patience));
  std::string hidden;
  for (std::size_t h: c.deen.hidden)
    hidden += (hidden.empty() ? "" : ",") + std::to_string(h);
  line("deen.hidden", hidden);
  line("deen.width_scale", num(c.deen.width_scale));
  line("deen.sigma", num(c.deen.sigma));
  line("deen.lr", num(c.deen.lr));
  line("deen.batch_size", std::to_string(c.deen.batch_size));
  line("deen.epochs", std::to_string(c.deen.epochs));
  line("deen.standardize", c.deen.standardize ? "true" : "false");
  line("search.iterations", std::to_string(c.search.iterations));
  line("search.restarts", std::to_string(c.search.restarts));
  line("search.top_k", std::to_string(c.search.top_k));
  line("search.c", num(c.search.tree.c));
  line("search.force_depth", std::to_string(c.search.tree.terminal_force_depth));
  line("search.assay", std::to_string(c.search_assay));
  line("search.beta", c.beta ? num(*c.beta) : "beta0");
  line("search.compare_beta_zero", c.compare_beta_zero ? "true" : "false");
  line("report.hist_bins", std::to_string(c.hist_bins));
  line("report.hist_top", std::to_string(c.hist_top));
}

}  // namespace molsearch::pipeline
