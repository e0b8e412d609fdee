#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "nndx/config.hpp"

using namespace nndx;

TEST(Config, DefaultRoundTrip) {
  const RunConfig c;
  EXPECT_EQ(parse_config(to_text(c)), c);
}

TEST(Config, LosslessForAwkwardValues) {
  RunConfig c;
  c.train.lr_max = 0.1 / 3;
  c.train.weight_decay = 1e-300;
  c.milestones.thresholds = {0.8, 1.0 / 3};
  c.milestones.relative = false;
  c.pipeline.cripple_group = "g2";
  c.model = {ModelKind::smallconv, {8, 6, 3}, {1, 4, 4}, {2, 3}, 123456789012345ULL};
  c.data.kind = DatasetKind::spirals;
  const auto back = parse_config(to_text(c));
  EXPECT_EQ(back, c);
  EXPECT_EQ(to_text(back), to_text(c));
}

TEST(Config, CommentsBlankLinesAndPartialFiles) {
  const auto c = parse_config("# toy run\n\ntrain.epochs = 7   # short\nmodel.widths = 2, 4, 4, 4, 4, 2\n");
  EXPECT_EQ(c.train.epochs, 7u);
  EXPECT_EQ(c.model.widths, (std::vector<std::size_t>{2, 4, 4, 4, 4, 2}));
  EXPECT_EQ(c.train.batch_size, RunConfig{}.train.batch_size);
}

TEST(Config, ErrorsCarryLineNumbers) {
  auto line_of = [](const char* text) -> std::size_t {
    try {
      parse_config(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("train.epochs = 3\nbogus.key = 1\n"), 2u);
  EXPECT_EQ(line_of("\n\ntrain.epochs = -3\n"), 3u);
  EXPECT_EQ(line_of("train.lr_max = fast\n"), 1u);
  EXPECT_EQ(line_of("no equals sign\n"), 1u);
  EXPECT_EQ(line_of("model.kind = transformer\n"), 1u);
}

TEST(Config, SeedOffsetShiftsEverySeed) {
  const RunConfig c;
  const auto d = c.with_seed_offset(3);
  EXPECT_EQ(d.model.seed, c.model.seed + 3);
  EXPECT_EQ(d.data.seed, c.data.seed + 3);
  EXPECT_EQ(d.train.seed, c.train.seed + 3);
}

TEST(Config, OutputDirectoryEnvironmentOverride) {
  const auto path = std::filesystem::temp_directory_path() / "nndx_config_test.txt";
  {
    std::ofstream out(path);
    out << "output.dir = from_file\ntrain.epochs = 5\n";
  }
  ::unsetenv("NNDX_OUTPUT_DIR");
  EXPECT_EQ(load_config(path).output_dir, "from_file");
  ::setenv("NNDX_OUTPUT_DIR", "/tmp/from_env", 1);
  const auto c = load_config(path);
  EXPECT_EQ(c.output_dir, "/tmp/from_env");
  EXPECT_EQ(c.train.epochs, 5u);
  ::unsetenv("NNDX_OUTPUT_DIR");
  std::filesystem::remove(path);
  EXPECT_THROW(load_config(path), IoError);
}

TEST(Config, DataMustMatchModel) {
  RunConfig c;
  c.data.classes = 3;
  EXPECT_THROW(load_data(c), ConfigError);
  RunConfig d;
  d.data.dims = 3;
  EXPECT_THROW(load_data(d), DimensionError);
}

TEST(Config, DerivedTrainingConfigs) {
  RunConfig c;
  const auto t = train_config(c, ConstantMomentum{0.9});
  EXPECT_EQ(t.schedule.lr_max, c.train.lr_max);
  EXPECT_EQ(t.schedule.epochs, c.train.epochs);
  const auto a = adam_train_config(c);
  EXPECT_EQ(a.optimizer, OptimizerKind::adam);
  EXPECT_EQ(a.schedule.lr_max, c.adam.lr_max);
}
