#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nndx/common.hpp"

namespace nndx {

struct Dataset {
  std::size_t dims = 0;
  std::size_t classes = 0;
  std::vector<Real> features;  // row-major, size() * dims
  std::vector<std::size_t> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const Real> sample(std::size_t i) const { return {features.data() + i * dims, dims}; }
  void push_back(std::span<const Real> x, std::size_t label);
};

struct DataSplit {
  Dataset train;
  Dataset test;
  std::string description;
};

enum class DatasetKind { blobs, spirals };

std::string_view to_string(DatasetKind kind);
DatasetKind parse_dataset_kind(std::string_view text);

/// Synthetic classification data.
///
/// blobs:   one isotropic Gaussian per class; class means are drawn on a sphere of
///          radius `separation`, then points get N(0, noise^2) per coordinate.
/// spirals: `classes` interleaved 2-D arms (dims must be 2), noise added per coordinate.
///
/// Train and test are drawn independently from the same seed stream.
struct DatasetSpec {
  DatasetKind kind = DatasetKind::blobs;
  std::size_t classes = 3;
  std::size_t dims = 2;
  std::size_t per_class = 100;
  std::size_t test_per_class = 100;
  Real noise = 1.0;
  Real separation = 2.0;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const DatasetSpec&) const = default;
};

DataSplit generate_dataset(const DatasetSpec& spec);

// Header `f0,...,f{D-1},label`; label is the last column. Throws ParseError with a line number.
// With `classes` > 0 labels must lie in [0, classes); otherwise the class count is inferred.
Dataset load_csv_dataset(const std::filesystem::path& path, std::size_t classes = 0);
Dataset parse_csv_dataset(std::string_view text, std::size_t classes = 0);
std::string dataset_csv(const Dataset& data);
void write_csv_dataset(const Dataset& data, const std::filesystem::path& path);

}  // namespace nndx
