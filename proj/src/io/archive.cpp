//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molsearch/io/archive.h"

#include <array>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace molsearch::io {
namespace {
constexpr std::array<char, 8> kMagic { 'M', 'O', 'L', 'S', 'C', 'K', 'P', 'T' };

static_assert(std::endian::native == std::endian::little,
              "archive encoding assumes a little-endian host");

void put_u64(std::ostream &out, std::uint64_t v) {
  out.write(reinterpret_cast<const char *>(&v), sizeof v);
}

std::uint64_t get_u64(std::istream &in) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char *>(&v), sizeof v))
    throw ArchiveError(ArchiveErrc::kCorrupt, "truncated archive");
  return v;
}

std::string get_bytes(std::istream &in, std::uint64_t n) {
  // Guard against absurd lengths from corrupt files.
  if (n > (std::uint64_t { 1 } << 34))
    throw ArchiveError(ArchiveErrc::kCorrupt, "implausible length in archive");
  std::string s(n, '\0');
  if (n != 0 && !in.read(s.data(), static_cast<std::streamsize>(n)))
    throw ArchiveError(ArchiveErrc::kCorrupt, "truncated archive");
  return s;
}

void put_tensors(Archive &a, const std::string &prefix, const diff::NamedTensors &named) {
  for (const auto &[name, t]: named)
    a.tensors.emplace_back(prefix + name, *t);
}

void take_tensors(const Archive &a, const std::string &prefix, const diff::NamedTensors &named) {
  for (const auto &[name, t]: named) {
    const diff::Tensor &src = a.tensor(prefix + name);
    if (!src.same_shape(*t))
      throw ArchiveError(ArchiveErrc::kShapeMismatch,
                         "tensor " + prefix + name + " has shape " + diff::shape_string(src.rows(), src.cols())
                             + ", expected " + diff::shape_string(t->rows(), t->cols()));
    *t = src;
  }
}
}  // namespace

const diff::Tensor &Archive::tensor(const std::string &name) const {
  for (const auto &[n, t]: tensors) {
    if (n == name)
      return t;
  }
  throw ArchiveError(ArchiveErrc::kMissingTensor, "archive has no tensor " + name);
}

void write_archive(std::ostream &out, const Archive &archive) {
  out.write(kMagic.data(), kMagic.size());
  put_u64(out, kArchiveVersion);
  const std::string meta = archive.metadata.dump();
  put_u64(out, meta.size());
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  put_u64(out, archive.tensors.size());
  for (const auto &[name, t]: archive.tensors) {
    put_u64(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u64(out, t.rows());
    put_u64(out, t.cols());
    out.write(reinterpret_cast<const char *>(t.data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!out)
    throw ArchiveError(ArchiveErrc::kIo, "failed to write archive");
}

Archive read_archive(std::istream &in) {
  std::array<char, 8> magic {};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic)
    throw ArchiveError(ArchiveErrc::kBadMagic, "not a molsearch archive");
  const std::uint64_t version = get_u64(in);
  if (version != kArchiveVersion)
    throw ArchiveError(ArchiveErrc::kUnsupportedVersion,
                       "archive version " + std::to_string(version) + " is not supported");
  Archive a;
  try {
    a.metadata = nlohmann::json::parse(get_bytes(in, get_u64(in)));
  } catch (const nlohmann::json::exception &e) {
    throw ArchiveError(ArchiveErrc::kCorrupt, std::string("bad metadata: ") + e.what());
  }
  const std::uint64_t count = get_u64(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = get_bytes(in, get_u64(in));
    const std::uint64_t rows = get_u64(in), cols = get_u64(in);
    if (cols != 0 && rows > (std::uint64_t { 1 } << 31) / cols)
      throw ArchiveError(ArchiveErrc::kCorrupt, "implausible tensor shape");
    diff::Tensor t(rows, cols);
    if (t.size() != 0
        && !in.read(reinterpret_cast<char *>(t.data()),
                    static_cast<std::streamsize>(t.size() * sizeof(double))))
      throw ArchiveError(ArchiveErrc::kCorrupt, "truncated tensor " + name);
    a.tensors.emplace_back(std::move(name), std::move(t));
  }
  return a;
}

void save_archive(const std::string &path, const Archive &archive) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw ArchiveError(ArchiveErrc::kIo, "cannot open " + path + " for writing");
  write_archive(out, archive);
}

Archive load_archive(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ArchiveError(ArchiveErrc::kIo, "cannot open " + path);
  return read_archive(in);
}

Archive model_archive(gnn::GnnModel &model, const nlohmann::json &train_config) {
  Archive a;
  const gnn::GnnConfig &c = model.config;
  a.metadata = {
    { "kind", "gnn" },
    { "node_features", c.node_features },
    { "edge_features", c.edge_features },
    { "width", c.width },
    { "blocks", c.blocks },
    { "head_width", c.head_width },
    { "assays", c.assays },
    { "head_dropout_in", c.head_dropout_in },
    { "head_dropout_hidden", c.head_dropout_hidden },
    { "train_config", train_config },
  };
  put_tensors(a, "param.", model.parameters());
  put_tensors(a, "buffer.", model.buffers());
  return a;
}

gnn::GnnModel model_from_archive(const Archive &archive) {
  const nlohmann::json &m = archive.metadata;
  if (m.value("kind", "") != "gnn")
    throw ArchiveError(ArchiveErrc::kCorrupt, "archive does not hold a GNN");
  gnn::GnnConfig c;
  try {
    c.node_features = m.at("node_features");
    c.edge_features = m.at("edge_features");
    c.width = m.at("width");
    c.blocks = m.at("blocks");
    c.head_width = m.at("head_width");
    c.assays = m.at("assays");
    c.head_dropout_in = m.at("head_dropout_in");
    c.head_dropout_hidden = m.at("head_dropout_hidden");
  } catch (const nlohmann::json::exception &e) {
    throw ArchiveError(ArchiveErrc::kCorrupt, std::string("GNN metadata: ") + e.what());
  }
  Rng unused(0);
  gnn::GnnModel model = gnn::GnnModel::init(c, unused);
  take_tensors(archive, "param.", model.parameters());
  take_tensors(archive, "buffer.", model.buffers());
  return model;
}

Archive energy_archive(deen::EnergyNet &net, double sigma, const deen::EnergyBounds *bounds,
                       const nlohmann::json &train_config) {
  Archive a;
  std::vector<std::size_t> hidden;
  for (const diff::Linear &l: net.hidden)
    hidden.push_back(l.out());
  a.metadata = {
    { "kind", "deen" },
    { "input_width", net.input_width },
    { "hidden", hidden },
    { "sigma", sigma },
    { "standardize", !net.shift.values().empty() },
    { "train_config", train_config },
  };
  if (bounds != nullptr) {
    a.metadata["bounds"] = { { "phi_min", bounds->phi_min },
                             { "phi_max", bounds->phi_max },
                             { "beta0", bounds->beta0 } };
  }
  put_tensors(a, "param.", net.parameters());
  if (!net.shift.values().empty()) {
    a.tensors.emplace_back("input.shift", net.shift);
    a.tensors.emplace_back("input.inv_scale", net.inv_scale);
  }
  return a;
}

deen::EnergyNet energy_from_archive(const Archive &archive) {
  const nlohmann::json &m = archive.metadata;
  if (m.value("kind", "") != "deen")
    throw ArchiveError(ArchiveErrc::kCorrupt, "archive does not hold an energy net");
  Rng unused(0);
  deen::EnergyNet net;
  try {
    net = deen::EnergyNet::init(m.at("input_width").get<std::size_t>(),
                                m.at("hidden").get<std::vector<std::size_t>>(), unused);
  } catch (const nlohmann::json::exception &e) {
    throw ArchiveError(ArchiveErrc::kCorrupt, std::string("energy metadata: ") + e.what());
  }
  take_tensors(archive, "param.", net.parameters());
  if (m.value("standardize", false)) {
    net.shift = archive.tensor("input.shift");
    net.inv_scale = archive.tensor("input.inv_scale");
    if (net.shift.cols() != net.input_width || !net.shift.same_shape(net.inv_scale))
      throw ArchiveError(ArchiveErrc::kShapeMismatch, "standardization tensors");
  }
  return net;
}

void save_ensemble(const std::string &dir, gnn::Ensemble &ensemble,
                   const nlohmann::json &train_config) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest = { { "kind", "ensemble" },
                              { "members", ensemble.members.size() },
                              { "val_fold", ensemble.val_fold } };
  nlohmann::json weights = nlohmann::json::array();
  for (const gnn::AssayWeights &w: ensemble.weights)
    weights.push_back({ { "alpha", w.alpha }, { "beta", w.beta } });
  manifest["assay_weights"] = weights;
  Archive index;
  index.metadata = manifest;
  save_archive(dir + "/ensemble.ckpt", index);
  for (std::size_t m = 0; m < ensemble.members.size(); ++m)
    save_archive(dir + "/member_" + std::to_string(m) + ".ckpt",
                 model_archive(ensemble.members[m], train_config));
}

gnn::Ensemble load_ensemble(const std::string &dir) {
  const Archive index = load_archive(dir + "/ensemble.ckpt");
  if (index.metadata.value("kind", "") != "ensemble")
    throw ArchiveError(ArchiveErrc::kCorrupt, dir + " does not hold an ensemble");
  gnn::Ensemble ens;
  try {
    const std::size_t k = index.metadata.at("members");
    ens.val_fold = index.metadata.at("val_fold").get<std::vector<std::size_t>>();
    for (const auto &w: index.metadata.at("assay_weights"))
      ens.weights.push_back({ w.at("alpha").get<std::vector<double>>(),
                              w.at("beta").get<std::vector<double>>() });
    for (std::size_t m = 0; m < k; ++m)
      ens.members.push_back(
          model_from_archive(load_archive(dir + "/member_" + std::to_string(m) + ".ckpt")));
  } catch (const nlohmann::json::exception &e) {
    throw ArchiveError(ArchiveErrc::kCorrupt, std::string("ensemble manifest: ") + e.what());
  }
  return ens;
}

}  // namespace molsearch::io
