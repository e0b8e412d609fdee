#include "nndx/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <fmt/format.h>

namespace nndx {

void Dataset::push_back(std::span<const Real> x, std::size_t label) {
  if (x.size() != dims) {
    throw DimensionError("sample has " + std::to_string(x.size()) + " features, dataset has " + std::to_string(dims));
  }
  features.insert(features.end(), x.begin(), x.end());
  labels.push_back(label);
}

std::string_view to_string(DatasetKind kind) { return kind == DatasetKind::blobs ? "blobs" : "spirals"; }

DatasetKind parse_dataset_kind(std::string_view text) {
  if (text == "blobs") return DatasetKind::blobs;
  if (text == "spirals") return DatasetKind::spirals;
  throw ValidationError("data.kind: expected blobs or spirals, got '" + std::string(text) + "'");
}

void DatasetSpec::validate() const {
  if (classes < 2) throw ValidationError("data.classes: need at least 2 classes");
  if (dims < 1) throw ValidationError("data.dims: need at least 1 feature");
  if (per_class < 1) throw ValidationError("data.per_class: need at least 1 sample per class");
  if (test_per_class < 1) throw ValidationError("data.test_per_class: need at least 1 sample per class");
  if (!(noise >= 0)) throw ValidationError("data.noise: must be >= 0");
  if (kind == DatasetKind::spirals && dims != 2) throw ValidationError("data.dims: spirals are 2-D");
}

namespace {

// Class centres on a regular polygon of radius `separation` in the first two
// coordinates, or evenly spaced on a line when there is one feature.
std::vector<Real> blob_centre(const DatasetSpec& spec, std::size_t k) {
  std::vector<Real> c(spec.dims, 0);
  if (spec.dims == 1) {
    c[0] = spec.separation * static_cast<Real>(k);
    return c;
  }
  const Real angle = 2 * std::numbers::pi * static_cast<Real>(k) / static_cast<Real>(spec.classes);
  c[0] = spec.separation * std::cos(angle);
  c[1] = spec.separation * std::sin(angle);
  return c;
}

Dataset draw(const DatasetSpec& spec, std::size_t per_class, std::mt19937_64& rng) {
  Dataset d;
  d.dims = spec.dims;
  d.classes = spec.classes;
  std::normal_distribution<Real> gauss(0, 1);
  std::uniform_real_distribution<Real> unit(0, 1);
  std::vector<Real> x(spec.dims);
  // Interleave classes so the file order is balanced.
  for (std::size_t i = 0; i < per_class; ++i) {
    for (std::size_t k = 0; k < spec.classes; ++k) {
      if (spec.kind == DatasetKind::blobs) {
        const auto centre = blob_centre(spec, k);
        for (std::size_t j = 0; j < spec.dims; ++j) x[j] = centre[j] + spec.noise * gauss(rng);
      } else {
        const Real r = unit(rng);
        const Real angle = 2 * std::numbers::pi * (static_cast<Real>(k) / static_cast<Real>(spec.classes) + 0.75 * r);
        x[0] = spec.separation * r * std::cos(angle) + spec.noise * gauss(rng);
        x[1] = spec.separation * r * std::sin(angle) + spec.noise * gauss(rng);
      }
      d.push_back(x, k);
    }
  }
  return d;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

DataSplit generate_dataset(const DatasetSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  DataSplit split;
  split.train = draw(spec, spec.per_class, rng);
  split.test = draw(spec, spec.test_per_class, rng);
  split.description = fmt::format("{} classes={} dims={} train={} test={} noise={} separation={} seed={}",
                                  to_string(spec.kind), spec.classes, spec.dims, split.train.size(),
                                  split.test.size(), spec.noise, spec.separation, spec.seed);
  return split;
}

Dataset parse_csv_dataset(std::string_view text, std::size_t classes) {
  Dataset d;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line = trim(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    if (!header_seen) {
      if (cells.size() < 2 || trim(cells.back()) != "label") {
        throw ParseError(line_no, "header must be f0,...,fD,label");
      }
      d.dims = cells.size() - 1;
      header_seen = true;
      continue;
    }
    if (cells.size() != d.dims + 1) {
      throw ParseError(line_no, fmt::format("expected {} cells, found {}", d.dims + 1, cells.size()));
    }
    std::vector<Real> x(d.dims);
    for (std::size_t j = 0; j < d.dims; ++j) {
      const auto cell = trim(cells[j]);
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), x[j]);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(x[j])) {
        throw ParseError(line_no, fmt::format("non-numeric feature '{}'", cell));
      }
    }
    const auto cell = trim(cells.back());
    long long label = -1;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), label);
    if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || label < 0) {
      throw ParseError(line_no, fmt::format("label '{}' is not a non-negative integer", cell));
    }
    if (classes > 0 && static_cast<std::size_t>(label) >= classes) {
      throw ParseError(line_no, fmt::format("label {} outside [0, {})", label, classes));
    }
    d.push_back(x, static_cast<std::size_t>(label));
  }
  if (!header_seen) throw ParseError(1, "missing header");
  std::size_t max_label = 0;
  for (auto l : d.labels) max_label = std::max(max_label, l);
  d.classes = classes > 0 ? classes : (d.labels.empty() ? 0 : max_label + 1);
  return d;
}

Dataset load_csv_dataset(const std::filesystem::path& path, std::size_t classes) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv_dataset(ss.str(), classes);
}

std::string dataset_csv(const Dataset& data) {
  std::string out;
  for (std::size_t j = 0; j < data.dims; ++j) out += fmt::format("f{},", j);
  out += "label\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (Real v : data.sample(i)) out += fmt::format("{:.17g},", v);
    out += fmt::format("{}\n", data.labels[i]);
  }
  return out;
}

void write_csv_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << dataset_csv(data);
}

}  // namespace nndx
