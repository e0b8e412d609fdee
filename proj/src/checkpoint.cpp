#include "nndx/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace nndx {

namespace {

constexpr char kMagic[4] = {'N', 'N', 'D', 'X'};

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    auto bytes = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
}

class Writer {
 public:
  template <typename T>
  void put(T v) {
    v = to_little(v);
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out_.insert(out_.end(), p, p + sizeof(T));
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void put_sizes(const std::vector<std::size_t>& v) {
    put(static_cast<std::uint32_t>(v.size()));
    for (auto x : v) put(static_cast<std::uint64_t>(x));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return to_little(v);
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::vector<std::size_t> get_sizes() {
    const auto n = get<std::uint32_t>();
    need(static_cast<std::size_t>(n) * 8);
    std::vector<std::size_t> v(n);
    for (auto& x : v) x = static_cast<std::size_t>(get<std::uint64_t>());
    return v;
  }
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) {
      throw IoError("checkpoint truncated at byte " + std::to_string(pos_) + " (need " + std::to_string(n) +
                    " more)");
    }
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Model& model) {
  Writer w;
  for (char c : kMagic) w.put(static_cast<std::uint8_t>(c));
  w.put(kCheckpointVersion);
  const auto& spec = model.spec();
  w.put(static_cast<std::uint32_t>(spec.kind));
  w.put(static_cast<std::uint64_t>(spec.seed));
  w.put_sizes(spec.widths);
  w.put_sizes(spec.input_shape);
  w.put_sizes(spec.conv_channels);

  w.put(static_cast<std::uint32_t>(model.groups().size()));
  for (const auto& g : model.groups()) {
    w.put_string(g.name);
    w.put(static_cast<std::uint8_t>(g.frozen ? 1 : 0));
    w.put(static_cast<std::uint32_t>(g.tensors.size()));
  }
  w.put(static_cast<std::uint32_t>(model.tensor_count()));
  for (const auto& g : model.groups()) {
    for (std::size_t t = 0; t < g.tensors.size(); ++t) {
      const Tensor& tensor = g.tensors[t];
      w.put_string(g.tensor_names[t]);
      w.put(kDtypeF64);
      w.put(static_cast<std::uint32_t>(tensor.rank()));
      for (auto d : tensor.shape) w.put(static_cast<std::uint64_t>(d));
      for (Real v : tensor.values) w.put(std::bit_cast<std::uint64_t>(v));
    }
  }
  return w.take();
}

Model decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  for (char c : kMagic) {
    if (r.get<std::uint8_t>() != static_cast<std::uint8_t>(c)) throw FormatError("checkpoint: bad magic");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));

  ModelSpec spec;
  const auto kind = r.get<std::uint32_t>();
  if (kind > static_cast<std::uint32_t>(ModelKind::smallconv)) throw FormatError("checkpoint: unknown model kind");
  spec.kind = static_cast<ModelKind>(kind);
  spec.seed = r.get<std::uint64_t>();
  spec.widths = r.get_sizes();
  spec.input_shape = r.get_sizes();
  spec.conv_channels = r.get_sizes();

  Model model = [&] {
    try {
      return Model(spec);
    } catch (const ValidationError& e) {
      throw FormatError(std::string("checkpoint: invalid model spec: ") + e.what());
    }
  }();

  const auto group_count = r.get<std::uint32_t>();
  if (group_count != model.groups().size()) throw FormatError("checkpoint: group count does not match model spec");
  for (auto& g : model.groups()) {
    const auto name = r.get_string();
    const auto frozen = r.get<std::uint8_t>();
    const auto tensors = r.get<std::uint32_t>();
    if (name != g.name || frozen > 1 || tensors != g.tensors.size()) {
      throw FormatError("checkpoint: group table does not match model layout at '" + name + "'");
    }
    g.frozen = frozen == 1;
  }

  const auto tensor_count = r.get<std::uint32_t>();
  if (tensor_count != model.tensor_count()) throw FormatError("checkpoint: tensor count does not match groups");
  for (auto& g : model.groups()) {
    for (std::size_t t = 0; t < g.tensors.size(); ++t) {
      Tensor& tensor = g.tensors[t];
      const auto name = r.get_string();
      if (name != g.tensor_names[t]) throw FormatError("checkpoint: unexpected tensor '" + name + "'");
      if (r.get<std::uint8_t>() != kDtypeF64) throw FormatError("checkpoint: unsupported dtype for '" + name + "'");
      const auto rank = r.get<std::uint32_t>();
      if (rank != tensor.rank()) throw FormatError("checkpoint: rank mismatch for '" + name + "'");
      for (auto d : tensor.shape) {
        if (r.get<std::uint64_t>() != d) throw FormatError("checkpoint: shape mismatch for '" + name + "'");
      }
      r.need(tensor.size() * sizeof(std::uint64_t));
      for (auto& v : tensor.values) v = std::bit_cast<Real>(r.get<std::uint64_t>());
    }
  }
  if (!r.done()) throw FormatError("checkpoint: trailing bytes");
  return model;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace nndx
