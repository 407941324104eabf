#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "pseudorgbd/data_io.hpp"

namespace pseudorgbd {

EmbeddingSet load_embeddings(const DatasetManifest& manifest, Modality modality) {
  EmbeddingSet set;
  set.modality = modality;
  Eigen::Index dim = manifest.embedding_dim.value_or(-1);
  std::vector<Tensor> tensors;
  tensors.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    const std::string& rel = modality == Modality::kRgb ? e.rgb_embedding : e.hha_embedding;
    if (rel.empty()) throw DataError("sample '" + e.sample_id + "' has no " + to_string(modality) + " embedding");
    const fs::path path = manifest.resolve(rel);
    if (!fs::exists(path)) {
      throw DataError("sample '" + e.sample_id + "': embedding file '" + path.string() + "' is missing");
    }
    Tensor t;
    try {
      t = read_tensor(path);
    } catch (const FormatError& err) {
      throw DataError("sample '" + e.sample_id + "': " + err.what());
    }
    if (t.dims.size() != 1) throw DataError("sample '" + e.sample_id + "': embedding must be a rank-1 tensor");
    if (dim < 0) dim = t.dims[0];
    if (static_cast<Eigen::Index>(t.dims[0]) != dim) {
      throw DataError("sample '" + e.sample_id + "': embedding has dim " + std::to_string(t.dims[0]) + ", expected " +
                      std::to_string(dim));
    }
    for (float v : t.values) {
      if (!std::isfinite(v)) throw DataError("sample '" + e.sample_id + "': embedding contains non-finite values");
    }
    set.ids.push_back(e.sample_id);
    tensors.push_back(std::move(t));
  }
  set.vectors.resize(std::max<Eigen::Index>(dim, 0), static_cast<Eigen::Index>(tensors.size()));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    set.vectors.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXf>(tensors[i].values.data(), dim);
  }
  return set;
}

JoinedEmbeddings join_pairs(const EmbeddingSet& rgb, const EmbeddingSet& hha) {
  std::unordered_map<std::string, Eigen::Index> hha_index;
  for (std::size_t i = 0; i < hha.ids.size(); ++i) hha_index.emplace(hha.ids[i], static_cast<Eigen::Index>(i));

  std::vector<std::string> missing;
  std::unordered_set<std::string> rgb_ids(rgb.ids.begin(), rgb.ids.end());
  for (const auto& id : rgb.ids) {
    if (!hha_index.contains(id)) missing.push_back(id + " (no hha)");
  }
  for (const auto& id : hha.ids) {
    if (!rgb_ids.contains(id)) missing.push_back(id + " (no rgb)");
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < std::min<std::size_t>(10, missing.size()); ++i) list += (i ? ", " : "") + missing[i];
    throw DataError("join_pairs: sample_id mismatch, " + std::to_string(missing.size()) + " unmatched: " + list);
  }

  JoinedEmbeddings out;
  out.ids = rgb.ids;
  out.rgb_dim = rgb.dim();
  out.vectors.resize(rgb.dim() + hha.dim(), static_cast<Eigen::Index>(rgb.size()));
  for (std::size_t i = 0; i < rgb.ids.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    out.vectors.col(col).head(rgb.dim()) = rgb.vectors.col(col);
    out.vectors.col(col).tail(hha.dim()) = hha.vectors.col(hha_index.at(rgb.ids[i]));
  }
  return out;
}

}  // namespace pseudorgbd
