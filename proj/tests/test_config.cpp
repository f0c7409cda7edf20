// Copyright 2026 The shapcost Authors. Licensed under the Apache License, Version 2.0.
#include <gtest/gtest.h>

#include "shapcost/config.hpp"

using namespace shapcost;

TEST(ParseConfig, SectionsCommentsQuotes) {
  auto e = parse_config(
      "# leading comment\n"
      "[run]\n"
      "seed = 7  ; trailing\n"
      "[data]\n"
      "path = \"my data#1.csv\"\n");
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[0].section, "run");
  EXPECT_EQ(e[0].value, "7");
  EXPECT_EQ(e[1].value, "my data#1.csv");
  EXPECT_EQ(e[1].line, 5u);
}

TEST(ParseConfig, Errors) {
  EXPECT_THROW(parse_config("seed = 1\n"), Error);
  EXPECT_THROW(parse_config("[run\n"), Error);
  EXPECT_THROW(parse_config("[run]\nseed\n"), Error);
  EXPECT_THROW(parse_config("[run]\npath = \"open\n"), Error);
}

TEST(ApplyConfig, AllSections) {
  RunConfig c;
  apply_config(parse_config(R"([run]
seed = 42
threads = 3
[data]
path = d.csv
target = msrp
policy = impute
[schema]
hp = numeric
body = categorical
turbo = boolean
[encode]
mode = greedy
prior_weight = 2
[train]
iterations = 50
depth = 3
learning_rate = 0.05
[cv]
folds = 4
grid = 0.05:10, 0.1:20
[cluster]
features = hp, weight
linkage = complete
k = 3
thresholds = 40000, 80000
[explain]
background_size = 64
[synth]
rows = 100
noise_sd = 0
)"),
               c);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_TRUE(c.seed_given);
  EXPECT_EQ(c.threads, 3u);
  EXPECT_EQ(c.format.target_column, "msrp");
  EXPECT_EQ(c.policy, ImputationPolicy::median_mode);
  ASSERT_EQ(c.schema.size(), 3u);
  EXPECT_EQ(c.schema[1].kind, FeatureKind::categorical);
  EXPECT_EQ(c.ts.mode, TsMode::greedy);
  EXPECT_EQ(c.ts.prior_weight, 2.0);
  EXPECT_EQ(c.train.iterations, 50u);
  EXPECT_EQ(c.train.depth, 3u);
  EXPECT_EQ(c.cv.outer_folds, 4u);
  ASSERT_EQ(c.cv.grid.size(), 2u);
  EXPECT_EQ(c.cv.grid[1], (GridPoint{0.1, 20}));
  EXPECT_EQ(c.cluster.features, (std::vector<std::string>{"hp", "weight"}));
  EXPECT_EQ(c.cluster.linkage, Linkage::complete);
  EXPECT_EQ(c.cluster.segments.thresholds, (std::vector<double>{40000, 80000}));
  EXPECT_EQ(c.background_size, 64u);
  EXPECT_EQ(c.synth_rows, 100u);
}

TEST(ApplyConfig, UnknownKeysAndBadValues) {
  RunConfig c;
  EXPECT_THROW(apply_config(parse_config("[train]\nfoo = 1\n"), c), Error);
  EXPECT_THROW(apply_config(parse_config("[nope]\nfoo = 1\n"), c), Error);
  EXPECT_THROW(apply_config(parse_config("[train]\niterations = 1.5\n"), c), Error);
  EXPECT_THROW(apply_config(parse_config("[run]\nseed = -1\n"), c), Error);
  EXPECT_THROW(apply_config(parse_config("[cv]\ngrid = 0.1\n"), c), Error);
  EXPECT_THROW(apply_config(parse_config("[schema]\na = numeric\na = boolean\n"), c), Error);
}

TEST(ConfigHash, TracksTrainingSettings) {
  RunConfig a, b;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.train.depth = 5;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
}
