#include "chef/feature_store.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace chef {

namespace {

constexpr std::array<char, 4> kTensorMagic{'C', 'H', 'E', 'F'};
constexpr std::array<char, 4> kLabelMagic{'C', 'H', 'F', 'L'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::size_t kHeaderBytes = 16;
constexpr const char* kLabelsFile = "labels.chfl";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const std::string& in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + static_cast<std::size_t>(i)])) << (8 * i);
  }
  return v;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open {}", path.string()));
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void spit(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot open {} for writing", path.string()));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError(fmt::format("write to {} failed", path.string()));
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw DataError(fmt::format("{} {} does not fit the 32-bit header field", what, v));
  }
  return static_cast<std::uint32_t>(v);
}

// Layer names become file names, so keep them to a portable alphabet.
void check_layer_name(const std::string& name) {
  const bool ok = !name.empty() && name != "." && name != ".." &&
                  std::all_of(name.begin(), name.end(), [](char c) {
                    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
                  });
  if (!ok) throw DataError(fmt::format("invalid layer name '{}'", name));
}

void check_header(const std::string& bytes, const std::array<char, 4>& magic, const fs::path& path) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), magic.data(), 4) != 0) {
    throw DataError(fmt::format("{}: bad magic, expected '{}'", path.string(), std::string(magic.data(), 4)));
  }
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kFormatVersion) {
    throw DataError(fmt::format("{}: unsupported version {} (expected {})", path.string(), version, kFormatVersion));
  }
}

json to_json(const Manifest& m) {
  json layers = json::array();
  for (const auto& l : m.layers) layers.push_back({{"name", l.name}, {"dim", l.dim}, {"file", l.file}});
  return json{{"version", m.version},       {"split_name", m.split_name}, {"class_names", m.class_names},
              {"sample_count", m.sample_count}, {"layers", layers},          {"labels_file", m.labels_file}};
}

Manifest manifest_from_json(const json& j, const fs::path& path) {
  try {
    Manifest m;
    m.version = j.at("version").get<std::uint32_t>();
    if (m.version != Manifest::kVersion) {
      throw DataError(fmt::format("{}: unsupported manifest version {}", path.string(), m.version));
    }
    m.split_name = j.at("split_name").get<std::string>();
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
    m.sample_count = j.at("sample_count").get<std::uint32_t>();
    for (const auto& l : j.at("layers")) {
      m.layers.push_back({l.at("name").get<std::string>(), l.at("dim").get<std::uint32_t>(),
                          l.at("file").get<std::string>()});
    }
    m.labels_file = j.at("labels_file").get<std::string>();
    return m;
  } catch (const json::exception& e) {
    throw DataError(fmt::format("{}: malformed manifest: {}", path.string(), e.what()));
  }
}

}  // namespace

std::optional<std::size_t> LabeledLayers::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < layer_ids.size(); ++i) {
    if (layer_ids[i] == id) return i;
  }
  return std::nullopt;
}

const Matrix& LabeledLayers::layer(std::string_view id) const {
  if (auto i = index_of(id)) return layers[*i];
  throw ConfigError(fmt::format("unknown layer '{}'; available: {}", id, fmt::join(layer_ids, ", ")));
}

void FeatureSet::validate() const {
  if (layer_ids.empty()) throw DataError("feature set has no layers");
  if (layer_ids.size() != layers.size()) throw DataError("layer id count does not match layer count");
  std::set<std::string> seen;
  for (std::size_t l = 0; l < layer_ids.size(); ++l) {
    check_layer_name(layer_ids[l]);
    if (!seen.insert(layer_ids[l]).second) throw DataError(fmt::format("duplicate layer id '{}'", layer_ids[l]));
    if (static_cast<std::size_t>(layers[l].rows()) != labels.size()) {
      throw DataError(fmt::format("layer '{}' has {} rows but there are {} labels", layer_ids[l], layers[l].rows(),
                                  labels.size()));
    }
    if (!layers[l].allFinite()) throw DataError(fmt::format("layer '{}' has non-finite values", layer_ids[l]));
  }
  if (class_names.empty()) throw DataError("feature set has no classes");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= class_count()) {
      throw DataError(fmt::format("label {} at row {} outside [0, {})", labels[i], i, class_count()));
    }
  }
}

void write_tensor_file(const fs::path& path, const Matrix& m) {
  std::string bytes(kTensorMagic.data(), 4);
  put_u32(bytes, kFormatVersion);
  put_u32(bytes, checked_u32(static_cast<std::size_t>(m.rows()), "row count"));
  put_u32(bytes, checked_u32(static_cast<std::size_t>(m.cols()), "column count"));
  bytes.reserve(kHeaderBytes + static_cast<std::size_t>(m.size()) * 4);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const auto f = static_cast<float>(m(r, c));
      if (!std::isfinite(f)) {
        throw DataError(fmt::format("{}: value at ({}, {}) is not representable as a finite float32",
                                    path.string(), r, c));
      }
      put_u32(bytes, std::bit_cast<std::uint32_t>(f));
    }
  }
  spit(path, bytes);
}

Matrix read_tensor_file(const fs::path& path) {
  const std::string bytes = slurp(path);
  check_header(bytes, kTensorMagic, path);
  if (bytes.size() < kHeaderBytes) {
    throw DataError(fmt::format("{}: truncated header, expected {} bytes, found {}", path.string(), kHeaderBytes,
                                bytes.size()));
  }
  const std::uint64_t rows = get_u32(bytes, 8), cols = get_u32(bytes, 12);
  const std::uint64_t expected = kHeaderBytes + rows * cols * 4;
  if (bytes.size() != expected) {
    throw DataError(fmt::format("{}: expected {} bytes for {}x{} float32 tensor, found {}", path.string(), expected,
                                rows, cols, bytes.size()));
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::size_t offset = kHeaderBytes;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c, offset += 4) {
      const float f = std::bit_cast<float>(get_u32(bytes, offset));
      if (!std::isfinite(f)) {
        throw DataError(fmt::format("{}: non-finite value at ({}, {})", path.string(), r, c));
      }
      m(r, c) = static_cast<double>(f);
    }
  }
  return m;
}

void write_labels_file(const fs::path& path, const Labels& labels) {
  std::string bytes(kLabelMagic.data(), 4);
  put_u32(bytes, kFormatVersion);
  put_u32(bytes, checked_u32(labels.size(), "label count"));
  for (int label : labels) {
    if (label < 0) throw DataError(fmt::format("{}: negative label {}", path.string(), label));
    put_u32(bytes, static_cast<std::uint32_t>(label));
  }
  spit(path, bytes);
}

Labels read_labels_file(const fs::path& path) {
  const std::string bytes = slurp(path);
  check_header(bytes, kLabelMagic, path);
  const std::uint64_t count = get_u32(bytes, 8);
  const std::uint64_t expected = 12 + count * 4;
  if (bytes.size() != expected) {
    throw DataError(fmt::format("{}: expected {} bytes for {} labels, found {}", path.string(), expected, count,
                                bytes.size()));
  }
  Labels labels(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t v = get_u32(bytes, 12 + 4 * i);
    if (v > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) {
      throw DataError(fmt::format("{}: label {} at row {} out of range", path.string(), v, i));
    }
    labels[i] = static_cast<int>(v);
  }
  return labels;
}

Manifest write_feature_set(const FeatureSet& fset, const fs::path& dir) {
  fset.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError(fmt::format("cannot create {}: {}", dir.string(), ec.message()));

  Manifest m;
  m.split_name = fset.split_name;
  m.class_names = fset.class_names;
  m.sample_count = checked_u32(fset.rows(), "sample count");
  for (std::size_t l = 0; l < fset.layer_ids.size(); ++l) {
    LayerEntry entry{fset.layer_ids[l], checked_u32(static_cast<std::size_t>(fset.layers[l].cols()), "layer dim"),
                     fset.layer_ids[l] + ".chef"};
    write_tensor_file(dir / entry.file, fset.layers[l]);
    m.layers.push_back(std::move(entry));
  }
  m.labels_file = kLabelsFile;
  write_labels_file(dir / m.labels_file, fset.labels);
  spit(dir / Manifest::kFileName, to_json(m).dump(2) + "\n");
  return m;
}

Manifest read_manifest(const fs::path& manifest_path) {
  const fs::path path = fs::is_directory(manifest_path) ? manifest_path / Manifest::kFileName : manifest_path;
  json j;
  try {
    j = json::parse(slurp(path));
  } catch (const json::parse_error& e) {
    throw DataError(fmt::format("{}: invalid JSON: {}", path.string(), e.what()));
  }
  return manifest_from_json(j, path);
}

FeatureSet read_feature_set(const fs::path& manifest_path) {
  const fs::path path = fs::is_directory(manifest_path) ? manifest_path / Manifest::kFileName : manifest_path;
  const Manifest m = read_manifest(path);
  const fs::path base = path.parent_path();

  FeatureSet out;
  out.split_name = m.split_name;
  out.class_names = m.class_names;
  for (const auto& entry : m.layers) {
    check_layer_name(entry.name);
    Matrix z = read_tensor_file(base / entry.file);
    if (z.rows() != m.sample_count) {
      throw DataError(fmt::format("{}: {} rows in file, manifest sample_count is {}", (base / entry.file).string(),
                                  z.rows(), m.sample_count));
    }
    if (z.cols() != entry.dim) {
      throw DataError(fmt::format("{}: dim {} in file header, manifest says {}", (base / entry.file).string(),
                                  z.cols(), entry.dim));
    }
    out.layer_ids.push_back(entry.name);
    out.layers.push_back(std::move(z));
  }
  out.labels = read_labels_file(base / m.labels_file);
  if (out.labels.size() != m.sample_count) {
    throw DataError(fmt::format("{}: {} labels, manifest sample_count is {}", (base / m.labels_file).string(),
                                out.labels.size(), m.sample_count));
  }
  out.validate();
  return out;
}

FeatureSet select_layers(const FeatureSet& fset, const std::vector<std::string>& layer_ids) {
  if (layer_ids.empty()) throw ConfigError("empty layer selection");
  FeatureSet out;
  out.split_name = fset.split_name;
  out.class_names = fset.class_names;
  out.labels = fset.labels;
  std::set<std::string> seen;
  for (const auto& id : layer_ids) {
    if (!seen.insert(id).second) throw ConfigError(fmt::format("layer '{}' requested twice", id));
    out.layers.push_back(fset.layer(id));
    out.layer_ids.push_back(id);
  }
  return out;
}

}  // namespace chef
