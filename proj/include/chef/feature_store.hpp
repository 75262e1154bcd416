#pragma once

// On-disk interchange format for per-layer activations.
//
//   manifest.json   UTF-8 JSON, see Manifest
//   <layer>.chef    "CHEF", u32 version=1, u32 rows, u32 cols,
//                   rows*cols float32, row-major
//   labels.chfl     "CHFL", u32 version=1, u32 count, count x u32
//
// All integers and floats are little-endian. Paths inside the manifest are
// relative to the manifest's directory. Values are stored in 32 bits and
// widened to double on load.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chef/linalg.hpp"

namespace chef {

using Labels = std::vector<int>;

/// Row-aligned per-layer features with one label per row.
struct LabeledLayers {
  std::vector<std::string> layer_ids;
  std::vector<Matrix> layers;  // parallel to layer_ids
  Labels labels;

  std::size_t rows() const { return labels.size(); }
  std::optional<std::size_t> index_of(std::string_view id) const;
  /// Throws ConfigError naming the available ids when id is absent.
  const Matrix& layer(std::string_view id) const;
};

struct FeatureSet : LabeledLayers {
  std::string split_name;
  std::vector<std::string> class_names;

  int class_count() const { return static_cast<int>(class_names.size()); }
  /// Throws DataError on the first violated invariant.
  void validate() const;
};

struct LayerEntry {
  std::string name;
  std::uint32_t dim = 0;
  std::string file;

  bool operator==(const LayerEntry&) const = default;
};

struct Manifest {
  static constexpr std::uint32_t kVersion = 1;
  static constexpr const char* kFileName = "manifest.json";

  std::uint32_t version = kVersion;
  std::string split_name;
  std::vector<std::string> class_names;
  std::uint32_t sample_count = 0;
  std::vector<LayerEntry> layers;
  std::string labels_file;

  bool operator==(const Manifest&) const = default;
};

/// Writes manifest.json, one tensor file per layer and labels.chfl into dir
/// (created if missing). Returns the manifest written.
Manifest write_feature_set(const FeatureSet& fs, const std::filesystem::path& dir);

/// Loads and fully validates a feature set. Accepts either the manifest file
/// or the directory holding manifest.json.
FeatureSet read_feature_set(const std::filesystem::path& manifest_path);

Manifest read_manifest(const std::filesystem::path& manifest_path);

/// Restriction to the requested layers, in the requested order.
FeatureSet select_layers(const FeatureSet& fs, const std::vector<std::string>& layer_ids);

// Raw tensor/label files, exposed for tooling and tests.
void write_tensor_file(const std::filesystem::path& path, const Matrix& m);
Matrix read_tensor_file(const std::filesystem::path& path);
void write_labels_file(const std::filesystem::path& path, const Labels& labels);
Labels read_labels_file(const std::filesystem::path& path);

}  // namespace chef
