// Copyright 2026 The shapcost Authors. Licensed under the Apache License, Version 2.0.
#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <limits>

#include "shapcost/common.hpp"

using namespace shapcost;

TEST(CompensatedSum, RecoversSmallTermsLostByNaiveSum) {
  CompensatedSum s;
  s.add(1e16);
  s.add(1.0);
  s.add(-1e16);
  EXPECT_EQ(s.value(), 1.0);
}

TEST(CompensatedSum, SpanHelper) {
  std::vector<double> v{0.1, 0.2, 0.3};
  EXPECT_DOUBLE_EQ(compensated_sum(v), 0.6);
  EXPECT_DOUBLE_EQ(mean(v), 0.2);
  EXPECT_THROW(mean(std::vector<double>{}), Error);
}

TEST(FormatDouble, ShortestFormRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.123, std::numeric_limits<double>::max(), 0.0}) {
    auto back = parse_double(format_double(v));
    ASSERT_TRUE(back.has_value());
    EXPECT_EQ(*back, v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(ParseDouble, RejectsGarbage) {
  EXPECT_FALSE(parse_double("").has_value());
  EXPECT_FALSE(parse_double("12abc").has_value());
  EXPECT_FALSE(parse_double("abc").has_value());
  EXPECT_EQ(parse_double(" 12.5 ").value(), 12.5);
  EXPECT_EQ(parse_double("+3").value(), 3.0);
}

TEST(DeriveSeed, StreamsDifferAndAreStable) {
  EXPECT_NE(derive_seed(7, 1), derive_seed(7, 2));
  EXPECT_NE(derive_seed(7, 1), derive_seed(8, 1));
  EXPECT_EQ(derive_seed(7, 1), derive_seed(7, 1));
}

TEST(Fnv1a, KnownVector) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Matrix, RowViewsAndEquality) {
  Matrix m(2, 3);
  m.at(1, 2) = 5.0;
  EXPECT_EQ(m.row(1)[2], 5.0);
  Matrix n = m;
  EXPECT_EQ(m, n);
  n.at(0, 0) = 1.0;
  EXPECT_FALSE(m == n);
}

TEST(Files, AtomicWriteCreatesParentsAndLeavesNoTemp) {
  const auto dir = std::filesystem::temp_directory_path() / "shapcost_common_test";
  std::filesystem::remove_all(dir);
  const auto path = dir / "a" / "b.txt";
  write_file_atomic(path, "hello\n");
  EXPECT_EQ(read_file(path), "hello\n");
  write_file_atomic(path, "again");
  EXPECT_EQ(read_file(path), "again");
  std::size_t files = 0;
  for (auto& e : std::filesystem::directory_iterator(dir / "a")) files += e.is_regular_file();
  EXPECT_EQ(files, 1u);
  EXPECT_THROW(read_file(dir / "missing.txt"), Error);
  std::filesystem::remove_all(dir);
}

TEST(ParallelFor, VisitsEachIndexOnce) {
  for (std::size_t threads : {1u, 2u, 5u, 64u}) {
    std::vector<std::atomic<int>> seen(37);
    parallel_for(seen.size(), threads, [&](std::size_t i) { seen[i]++; });
    for (auto& s : seen) EXPECT_EQ(s.load(), 1);
  }
}

TEST(ParallelFor, PropagatesExceptions) {
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) {
                 if (i == 7) throw Error("boom");
               }),
               Error);
}
