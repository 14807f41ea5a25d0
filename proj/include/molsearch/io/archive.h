//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

// Checkpoint container: a magic tag, a format version, a JSON metadata
// block and a list of named double tensors. Encoding is fixed
// (little-endian, metadata with sorted keys), so save(load(bytes)) == bytes.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "molsearch/deen/energy.h"
#include "molsearch/diff/tensor.h"
#include "molsearch/error.h"
#include "molsearch/gnn/model.h"
#include "molsearch/gnn/train.h"

namespace molsearch::io {

enum class ArchiveErrc {
  kIo,
  kBadMagic,
  kUnsupportedVersion,
  kCorrupt,
  kMissingTensor,
  kShapeMismatch,
};

using ArchiveError = CodedError<ArchiveErrc>;

inline constexpr std::uint32_t kArchiveVersion = 1;

struct Archive {
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<std::pair<std::string, diff::Tensor>> tensors;

  const diff::Tensor &tensor(const std::string &name) const;
};

void write_archive(std::ostream &out, const Archive &archive);
Archive read_archive(std::istream &in);
void save_archive(const std::string &path, const Archive &archive);
Archive load_archive(const std::string &path);

// Model checkpoints. Loading rebuilds the architecture from the metadata and
// checks every tensor shape.
Archive model_archive(gnn::GnnModel &model, const nlohmann::json &train_config = {});
gnn::GnnModel model_from_archive(const Archive &archive);

Archive energy_archive(deen::EnergyNet &net, double sigma,
                       const deen::EnergyBounds *bounds,
                       const nlohmann::json &train_config = {});
deen::EnergyNet energy_from_archive(const Archive &archive);

// An ensemble is saved as one archive per member plus a manifest.
void save_ensemble(const std::string &dir, gnn::Ensemble &ensemble,
                   const nlohmann::json &train_config = {});
gnn::Ensemble load_ensemble(const std::string &dir);

}  // namespace molsearch::io
