#include <filesystem>

#include <gtest/gtest.h>

#include "nndx/dataset.hpp"

using namespace nndx;

TEST(Generate, CountsAndLabels) {
  const auto split = generate_dataset({DatasetKind::blobs, 3, 2, 1, 2, 1.0, 2.0, 0});
  EXPECT_EQ(split.train.size(), 3u);
  EXPECT_EQ(split.test.size(), 6u);
  EXPECT_EQ(split.train.dims, 2u);
  EXPECT_EQ(split.train.classes, 3u);
  EXPECT_FALSE(split.description.empty());
  for (auto l : split.train.labels) EXPECT_LT(l, 3u);
}

TEST(Generate, SameSeedBitIdentical) {
  const DatasetSpec spec{DatasetKind::spirals, 3, 2, 20, 20, 0.1, 1.0, 4};
  const auto a = generate_dataset(spec);
  const auto b = generate_dataset(spec);
  EXPECT_EQ(a.train.features, b.train.features);
  EXPECT_EQ(a.test.labels, b.test.labels);
  auto other = spec;
  other.seed = 5;
  EXPECT_NE(generate_dataset(other).train.features, a.train.features);
}

TEST(Generate, InvalidSpec) {
  EXPECT_THROW(generate_dataset({DatasetKind::blobs, 1, 2, 10, 10, 1, 2, 0}), ValidationError);
  EXPECT_THROW(generate_dataset({DatasetKind::blobs, 2, 2, 0, 10, 1, 2, 0}), ValidationError);
  EXPECT_THROW(generate_dataset({DatasetKind::spirals, 2, 3, 10, 10, 1, 2, 0}), ValidationError);
}

TEST(Csv, TwoRowFixture) {
  const auto d = parse_csv_dataset("f0,f1,f2,label\n1,2,3,0\n4.5,-1,0,1\n");
  EXPECT_EQ(d.size(), 2u);
  EXPECT_EQ(d.dims, 3u);
  EXPECT_EQ(d.labels, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(d.features[3], 4.5);
}

TEST(Csv, MissingLabelColumn) { EXPECT_THROW(parse_csv_dataset("f0,f1\n1,2\n"), ParseError); }

TEST(Csv, ErrorsCarryLineNumbers) {
  auto line_of = [](const char* text, std::size_t classes = 0) -> std::size_t {
    try {
      parse_csv_dataset(text, classes);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("f0,label\n1,0\n2\n"), 3u);
  EXPECT_EQ(line_of("f0,label\n1,0\nx,1\n"), 3u);
  EXPECT_EQ(line_of("f0,label\n1,1.5\n"), 2u);
  EXPECT_EQ(line_of("f0,label\n1,0\n1,4\n", 3), 3u);
  EXPECT_EQ(line_of("f0,label\n1,-1\n"), 2u);
}

TEST(Csv, RoundTripIsBitExact) {
  const auto split = generate_dataset({DatasetKind::blobs, 3, 4, 10, 5, 1.0, 2.0, 8});
  const auto path = std::filesystem::temp_directory_path() / "nndx_dataset_test.csv";
  write_csv_dataset(split.train, path);
  const auto back = load_csv_dataset(path, 3);
  EXPECT_EQ(back.features, split.train.features);
  EXPECT_EQ(back.labels, split.train.labels);
  std::filesystem::remove(path);
}
