// Copyright 2026 The shapcost Authors. Licensed under the Apache License, Version 2.0.
#include <gtest/gtest.h>

#include <filesystem>

#include "shapcost/dataset.hpp"

using namespace shapcost;

namespace {
Schema civic_schema() {
  return {{"engine_power", FeatureKind::numeric, "hp"},
          {"body", FeatureKind::categorical, ""},
          {"turbo", FeatureKind::boolean, ""}};
}

std::string expect_error(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  ADD_FAILURE() << "no error thrown";
  return {};
}
}  // namespace

TEST(ParseTable, ThreeRowsTyped) {
  const std::string text =
      "row_id,engine_power,body,turbo,price\n"
      "a,150,sedan,false,20000\n"
      "b,180.5,coupe,true,25000\n"
      "c,200,\"suv, large\",1,31000\n";
  Table t = parse_table(text, civic_schema());
  ASSERT_EQ(t.rows(), 3u);
  EXPECT_EQ(t.columns[0].numbers[1], 180.5);
  EXPECT_EQ(t.columns[1].labels[2], "suv, large");
  EXPECT_EQ(t.columns[2].numbers[0], 0.0);
  EXPECT_EQ(t.columns[2].numbers[2], 1.0);
  EXPECT_EQ(t.target[2], 31000.0);
  EXPECT_EQ(t.row_ids[1], "b");
  EXPECT_FALSE(t.has_missing());
}

TEST(ParseTable, ColumnOrderInFileIsFree) {
  Table t = parse_table("price,turbo,body,engine_power\n100,true,x,3\n", civic_schema());
  EXPECT_EQ(t.columns[0].numbers[0], 3.0);
  EXPECT_EQ(t.row_ids[0], "0");
}

TEST(ParseTable, MissingColumnNamed) {
  auto msg = expect_error([] { parse_table("body,turbo,price\nx,true,1\n", civic_schema()); });
  EXPECT_NE(msg.find("engine_power"), std::string::npos);
}

TEST(ParseTable, BadBooleanReportsRowAndColumn) {
  auto msg = expect_error([] { parse_table("engine_power,body,turbo,price\n1,x,12.5,100\n", civic_schema()); });
  EXPECT_NE(msg.find("turbo"), std::string::npos);
  EXPECT_NE(msg.find("row"), std::string::npos);
}

TEST(ParseTable, EmptyFileAndBadTarget) {
  EXPECT_THROW(parse_table("", civic_schema()), Error);
  EXPECT_THROW(parse_table("engine_power,body,turbo,price\n", civic_schema()), Error);
  EXPECT_THROW(parse_table("engine_power,body,turbo,price\n1,x,true,-5\n", civic_schema()), Error);
  EXPECT_THROW(parse_table("engine_power,body,turbo,price\nabc,x,true,5\n", civic_schema()), Error);
}

TEST(ParseTable, EmptyFieldIsMissing) {
  Table t = parse_table("engine_power,body,turbo,price\n,x,true,5\n1,,false,\n", civic_schema());
  EXPECT_TRUE(t.columns[0].missing[0]);
  EXPECT_TRUE(t.columns[1].missing[1]);
  EXPECT_TRUE(t.target_missing[1]);
  EXPECT_TRUE(t.has_missing());
}

TEST(WriteTable, RoundTripIsBitExact) {
  auto [t, gt] = generate_synthetic_market(reference_market(50, 300.0, 3));
  const auto path = std::filesystem::temp_directory_path() / "shapcost_dataset_rt.csv";
  write_table(path, t);
  Table back = load_table(path, t.schema);
  EXPECT_EQ(back, t);
  std::filesystem::remove(path);
}

TEST(WriteTable, MissingCellsSurviveRoundTrip) {
  Table t = parse_table("row_id,engine_power,body,turbo,price\nq,,x,true,5\nr,2,,,\n", civic_schema());
  Table back = parse_table(format_table(t), civic_schema());
  EXPECT_EQ(back, t);
}

TEST(Clean, NoMissingIsIdentity) {
  Table t = parse_table("engine_power,body,turbo,price\n1,x,true,5\n2,y,false,6\n", civic_schema());
  EXPECT_EQ(clean(t, ImputationPolicy::drop_row), t);
  EXPECT_EQ(clean(t, ImputationPolicy::median_mode), t);
}

TEST(Clean, MedianImputation) {
  Table t = parse_table("engine_power,body,turbo,price\n1,x,true,5\n,x,false,6\n3,y,,7\n", civic_schema());
  Table c = clean(t, ImputationPolicy::median_mode);
  EXPECT_EQ(c.columns[0].numbers, (std::vector<double>{1, 2, 3}));
  EXPECT_FALSE(c.has_missing());
  EXPECT_EQ(clean(c, ImputationPolicy::median_mode), c);
}

TEST(Clean, ModeImputationForLabels) {
  Table t = parse_table("engine_power,body,turbo,price\n1,x,true,5\n2,,true,6\n3,x,false,7\n4,y,,8\n", civic_schema());
  Table c = clean(t, ImputationPolicy::median_mode);
  EXPECT_EQ(c.columns[1].labels[1], "x");
  EXPECT_EQ(c.columns[2].numbers[3], 1.0);
}

TEST(Clean, DropRowRemovesMissingTarget) {
  Table t = parse_table("row_id,engine_power,body,turbo,price\na,1,x,true,5\nb,2,x,true,\nc,3,y,false,7\n",
                        civic_schema());
  Table c = clean(t, ImputationPolicy::drop_row);
  EXPECT_EQ(c.rows(), 2u);
  EXPECT_EQ(c.row_ids, (std::vector<std::string>{"a", "c"}));
  EXPECT_EQ(clean(c, ImputationPolicy::drop_row), c);
  // missing targets are dropped under imputation too
  EXPECT_EQ(clean(t, ImputationPolicy::median_mode).rows(), 2u);
}

TEST(Clean, EntirelyMissingColumnUnderImpute) {
  Table t = parse_table("engine_power,body,turbo,price\n,x,true,5\n,y,false,6\n", civic_schema());
  EXPECT_THROW(clean(t, ImputationPolicy::median_mode), Error);
}

TEST(InferSchema, Kinds) {
  auto s = infer_schema("row_id,a,b,c,price\n1,1.5,x,true\n2,2,y,false,3\n");
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].kind, FeatureKind::numeric);
  EXPECT_EQ(s[1].kind, FeatureKind::categorical);
  EXPECT_EQ(s[2].kind, FeatureKind::boolean);
}

TEST(Schema, DuplicateNamesRejected) {
  EXPECT_THROW(validate_schema({{"a", FeatureKind::numeric, ""}, {"a", FeatureKind::boolean, ""}}), Error);
}

TEST(SyntheticMarket, HandExample) {
  SyntheticMarketSpec s;
  s.n_rows = 1;
  s.base_price = 1000;
  s.numeric = {{"x", 5, 5, 10, 0, ""}};
  auto [t, gt] = generate_synthetic_market(s);
  EXPECT_EQ(t.target[0], 1050.0);
  EXPECT_EQ(gt.terms.at(0, 0), 50.0);
}

TEST(SyntheticMarket, ZeroRowsRejected) {
  SyntheticMarketSpec s;
  s.n_rows = 0;
  EXPECT_THROW(generate_synthetic_market(s), Error);
}

TEST(SyntheticMarket, BadSpecsRejected) {
  auto s = reference_market(10);
  s.interactions.push_back({"engine_hp", "nope", 1.0});
  EXPECT_THROW(generate_synthetic_market(s), Error);
  s = reference_market(10);
  s.noise_sd = -1;
  EXPECT_THROW(generate_synthetic_market(s), Error);
}

TEST(SyntheticMarket, SameSeedIdentical) {
  auto a = generate_synthetic_market(reference_market(200, 300, 11));
  auto b = generate_synthetic_market(reference_market(200, 300, 11));
  auto c = generate_synthetic_market(reference_market(200, 300, 12));
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second.contributions, b.second.contributions);
  EXPECT_FALSE(a.first == c.first);
}

TEST(SyntheticMarket, NoiselessTargetEqualsTermSum) {
  auto [t, gt] = generate_synthetic_market(reference_market(300, 0.0, 5));
  for (std::size_t i = 0; i < t.rows(); ++i) {
    double y = gt.base_price;
    for (std::size_t k = 0; k < gt.terms.cols; ++k) y += gt.terms.at(i, k);
    EXPECT_EQ(t.target[i], y);
  }
}

TEST(SyntheticMarket, ContributionsSumToDeviationFromBaseline) {
  auto [t, gt] = generate_synthetic_market(reference_market(400, 250.0, 6));
  double mean_noiseless = 0.0;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < gt.contributions.cols; ++j) s += gt.contributions.at(i, j);
    EXPECT_NEAR(gt.baseline + s, t.target[i] - gt.noise[i], 1e-6);
    mean_noiseless += t.target[i] - gt.noise[i];
  }
  EXPECT_NEAR(mean_noiseless / static_cast<double>(t.rows()), gt.baseline, 1e-6);
  // each centred contribution has population mean zero
  for (std::size_t j = 0; j < gt.contributions.cols; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.rows(); ++i) s += gt.contributions.at(i, j);
    EXPECT_NEAR(s / static_cast<double>(t.rows()), 0.0, 1e-6);
  }
}

TEST(GroundTruthFile, HeaderAndRows) {
  auto [t, gt] = generate_synthetic_market(reference_market(3, 0.0, 1));
  auto text = format_ground_truth(gt);
  EXPECT_EQ(text.substr(0, 10), "row_id,age");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
}
