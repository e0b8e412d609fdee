#include "nndx/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>

namespace nndx {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt_real(Real v) { return fmt::format("{:.17g}", v); }

Real parse_real(const std::string& s) {
  std::size_t used = 0;
  Real v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("not a number: '" + s + "'");
  }
  if (used != s.size()) throw ConfigError("not a number: '" + s + "'");
  return v;
}

std::uint64_t parse_uint(const std::string& s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw ConfigError("not a non-negative integer: '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("not a boolean: '" + s + "'");
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F f) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + f(items[i]);
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(s)) out.push_back(parse_uint(item));
  return out;
}

std::vector<Real> parse_reals(const std::string& s) {
  std::vector<Real> out;
  for (const auto& item : split_list(s)) out.push_back(parse_real(item));
  return out;
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

// One mutable accessor serves both directions; getters never write through it.
template <typename M>
decltype(auto) read(M member, const RunConfig& c) {
  return member(const_cast<RunConfig&>(c));
}

template <typename M>
Field size_field(std::string key, M member) {
  return {std::move(key), [member](const RunConfig& c) { return std::to_string(read(member, c)); },
          [member](RunConfig& c, const std::string& v) { member(c) = parse_uint(v); }};
}

template <typename M>
Field real_field(std::string key, M member) {
  return {std::move(key), [member](const RunConfig& c) { return fmt_real(read(member, c)); },
          [member](RunConfig& c, const std::string& v) { member(c) = parse_real(v); }};
}

template <typename M>
Field string_field(std::string key, M member) {
  return {std::move(key), [member](const RunConfig& c) { return read(member, c); },
          [member](RunConfig& c, const std::string& v) { member(c) = v; }};
}

template <typename M>
Field sizes_field(std::string key, M member) {
  return {std::move(key),
          [member](const RunConfig& c) { return join(read(member, c), [](std::size_t v) { return std::to_string(v); }); },
          [member](RunConfig& c, const std::string& v) { member(c) = parse_sizes(v); }};
}

#define NNDX_MEMBER(expr) [](RunConfig& c) -> auto& { return c.expr; }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"model.kind", [](const RunConfig& c) { return std::string(to_string(c.model.kind)); },
       [](RunConfig& c, const std::string& v) { c.model.kind = parse_model_kind(v); }},
      sizes_field("model.widths", NNDX_MEMBER(model.widths)),
      sizes_field("model.input_shape", NNDX_MEMBER(model.input_shape)),
      sizes_field("model.conv_channels", NNDX_MEMBER(model.conv_channels)),
      size_field("model.seed", NNDX_MEMBER(model.seed)),
      {"data.kind", [](const RunConfig& c) { return std::string(to_string(c.data.kind)); },
       [](RunConfig& c, const std::string& v) { c.data.kind = parse_dataset_kind(v); }},
      size_field("data.classes", NNDX_MEMBER(data.classes)),
      size_field("data.dims", NNDX_MEMBER(data.dims)),
      size_field("data.per_class", NNDX_MEMBER(data.per_class)),
      size_field("data.test_per_class", NNDX_MEMBER(data.test_per_class)),
      real_field("data.noise", NNDX_MEMBER(data.noise)),
      real_field("data.separation", NNDX_MEMBER(data.separation)),
      size_field("data.seed", NNDX_MEMBER(data.seed)),
      string_field("data.train_csv", NNDX_MEMBER(train_csv)),
      string_field("data.test_csv", NNDX_MEMBER(test_csv)),
      size_field("train.epochs", NNDX_MEMBER(train.epochs)),
      size_field("train.batch_size", NNDX_MEMBER(train.batch_size)),
      real_field("train.weight_decay", NNDX_MEMBER(train.weight_decay)),
      real_field("train.lr_max", NNDX_MEMBER(train.lr_max)),
      real_field("train.lr_min", NNDX_MEMBER(train.lr_min)),
      size_field("train.seed", NNDX_MEMBER(train.seed)),
      real_field("train.regime_tol", NNDX_MEMBER(train.regime_tol)),
      real_field("momentum.constant", NNDX_MEMBER(momentum.constant)),
      real_field("momentum.onecycle_lo", NNDX_MEMBER(momentum.onecycle_lo)),
      real_field("momentum.onecycle_hi", NNDX_MEMBER(momentum.onecycle_hi)),
      real_field("momentum.physics_lo", NNDX_MEMBER(momentum.physics_lo)),
      real_field("momentum.physics_hi", NNDX_MEMBER(momentum.physics_hi)),
      real_field("adam.lr_max", NNDX_MEMBER(adam.lr_max)),
      real_field("adam.lr_min", NNDX_MEMBER(adam.lr_min)),
      real_field("adam.beta1", NNDX_MEMBER(adam.hyper.beta1)),
      real_field("adam.beta2", NNDX_MEMBER(adam.hyper.beta2)),
      real_field("adam.eps", NNDX_MEMBER(adam.hyper.eps)),
      real_field("hybrid.accuracy_threshold", NNDX_MEMBER(hybrid.accuracy_threshold)),
      size_field("hybrid.switch_epoch", NNDX_MEMBER(hybrid.switch_epoch)),
      real_field("hybrid.post_mu", NNDX_MEMBER(hybrid.post_mu)),
      string_field("pipeline.cripple_group", NNDX_MEMBER(pipeline.cripple_group)),
      size_field("pipeline.cripple_seed", NNDX_MEMBER(pipeline.cripple_seed)),
      size_field("pipeline.top_k", NNDX_MEMBER(pipeline.top_k)),
      size_field("pipeline.fixed_examples", NNDX_MEMBER(pipeline.fixed_examples)),
      size_field("surgery.epochs", NNDX_MEMBER(surgery.epochs)),
      real_field("surgery.lr_max", NNDX_MEMBER(surgery.lr_max)),
      real_field("surgery.lr_min", NNDX_MEMBER(surgery.lr_min)),
      {"milestones.thresholds",
       [](const RunConfig& c) { return join(c.milestones.thresholds, fmt_real); },
       [](RunConfig& c, const std::string& v) { c.milestones.thresholds = parse_reals(v); }},
      {"milestones.relative", [](const RunConfig& c) { return std::string(c.milestones.relative ? "true" : "false"); },
       [](RunConfig& c, const std::string& v) { c.milestones.relative = parse_bool(v); }},
      string_field("output.dir", NNDX_MEMBER(output_dir)),
  };
  return table;
}

#undef NNDX_MEMBER

}  // namespace

RunConfig RunConfig::with_seed_offset(std::uint64_t offset) const {
  RunConfig c = *this;
  c.model.seed += offset;
  c.data.seed += offset;
  c.train.seed += offset;
  return c;
}

std::string to_text(const RunConfig& config) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    const auto s = f.key.substr(0, f.key.find('.'));
    if (s != section) {
      if (!section.empty()) out += "\n";
      section = s;
    }
    out += f.key + " = " + f.get(config) + "\n";
  }
  return out;
}

RunConfig parse_config(std::string_view text) {
  RunConfig config;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string line(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected 'section.key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const auto& table = fields();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.key == key; });
    if (it == table.end()) throw ParseError(line_no, "unknown key '" + key + "'");
    try {
      it->set(config, value);
    } catch (const Error& e) {
      throw ParseError(line_no, key + ": " + e.what());
    }
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig config = parse_config(ss.str());
  if (const char* dir = std::getenv("NNDX_OUTPUT_DIR"); dir != nullptr && *dir != '\0') config.output_dir = dir;
  return config;
}

LRSchedule sgd_schedule(const RunConfig& config) {
  return {LRKind::cosine, config.train.lr_max, config.train.lr_min, std::max<std::size_t>(config.train.epochs, 1)};
}

LRSchedule adam_schedule(const RunConfig& config) {
  return {LRKind::cosine, config.adam.lr_max, config.adam.lr_min, std::max<std::size_t>(config.train.epochs, 1)};
}

TrainConfig train_config(const RunConfig& config, const MomentumPolicy& policy) {
  TrainConfig t;
  t.epochs = config.train.epochs;
  t.batch_size = config.train.batch_size;
  t.weight_decay = config.train.weight_decay;
  t.schedule = sgd_schedule(config);
  t.momentum = policy;
  t.optimizer = OptimizerKind::sgd;
  t.adam = config.adam.hyper;
  t.seed = config.train.seed;
  return t;
}

TrainConfig adam_train_config(const RunConfig& config) {
  TrainConfig t = train_config(config, ConstantMomentum{config.adam.hyper.beta1});
  t.schedule = adam_schedule(config);
  t.optimizer = OptimizerKind::adam;
  return t;
}

PlanOverrides surgery_overrides(const RunConfig& config) {
  PlanOverrides o;
  o.epochs = config.surgery.epochs;
  o.lr_max = config.surgery.lr_max;
  o.lr_min = config.surgery.lr_min;
  o.batch_size = config.train.batch_size;
  o.weight_decay = config.train.weight_decay;
  o.seed = config.train.seed;
  return o;
}

DataSplit load_data(const RunConfig& config) {
  if (config.train_csv.empty() != config.test_csv.empty()) {
    throw ConfigError("data.train_csv and data.test_csv must be set together");
  }
  const std::size_t classes = config.model.classes();
  DataSplit split;
  if (config.train_csv.empty()) {
    if (config.data.classes != classes) {
      throw ConfigError(fmt::format("data.classes is {} but the model has {} outputs", config.data.classes, classes));
    }
    split = generate_dataset(config.data);
  } else {
    split = {load_csv_dataset(config.train_csv, classes), load_csv_dataset(config.test_csv, classes),
             "csv " + config.train_csv + " / " + config.test_csv};
  }
  if (split.train.dims != config.model.input_size() || split.test.dims != config.model.input_size()) {
    throw DimensionError(fmt::format("data has {} features, model expects {}", split.train.dims,
                                     config.model.input_size()));
  }
  return split;
}

}  // namespace nndx
