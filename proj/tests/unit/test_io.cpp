#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "pinvnet/data.hpp"
#include "pinvnet/io.hpp"

using namespace pinvnet;

TEST(MatrixCsv, RoundTripIsExact) {
  Matrix m = fixtures::random_matrix(7, 4, 1) * 1e3;
  m(0, 0) = 1.0 / 3.0;
  m(1, 1) = -0.0;
  m(2, 2) = 5e-300;
  std::stringstream ss;
  write_matrix_csv(ss, m);
  EXPECT_EQ(read_matrix_csv(ss), m);
}

TEST(MatrixCsv, FormatNumber) {
  EXPECT_EQ(format_number(1.0), "1");
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(std::stod(format_number(2.0 / 3.0)), 2.0 / 3.0);
}

TEST(MatrixCsv, ParseErrorsNameTheLine) {
  std::istringstream ragged("1,2\n3,4\n5\n");
  try {
    read_matrix_csv(ragged);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::istringstream text("1,2\nx,4\n");
  EXPECT_THROW(read_matrix_csv(text), ParseError);
  std::istringstream empty_cell("1,,2\n");
  EXPECT_THROW(read_matrix_csv(empty_cell), ParseError);
  EXPECT_THROW(read_matrix_csv(std::string("/nonexistent/w.csv")), FileNotFound);
}

TEST(ReportJson, RandomInitFields) {
  const auto spec = NetworkSpec::from_structure(1, "3-1", Activation::softplus08(), true);
  TrainConfig cfg;
  cfg.init.variant = RandomInit{7, 0.5};
  const auto r = train(spec, gen_regression(0, 0, 0).train[0].x, gen_regression(0, 0, 0).train[0].y, cfg);
  const auto j = report_to_json(spec, cfg, r);
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"structure", "input_dim", "activation", "linear_output", "init", "seed",
                                            "c", "solve_order", "solve_residuals", "clamped_counts",
                                            "clamp_margin", "train_sse", "wall_time"}));
  EXPECT_EQ(j["structure"], "3-1");
  EXPECT_EQ(j["activation"], "softplus08");
  EXPECT_EQ(j["init"], "random");
  EXPECT_EQ(j["seed"], 7);
  EXPECT_EQ(j["c"], 0.5);
  EXPECT_EQ(j["solve_order"], (std::vector<int>{1, 2}));
  EXPECT_EQ(j["clamp_margin"], 1e-9);
  EXPECT_EQ(j["train_sse"], r.train_sse);
}

TEST(ReportJson, DataMatrixAndNoTime) {
  const Matrix x = fixtures::random_matrix(10, 2, 2);
  const Matrix y = fixtures::random_matrix(10, 1, 3);
  const auto spec = NetworkSpec::from_structure(2, "10-1", Activation::softplus08(), true);
  TrainConfig cfg;
  cfg.init.variant = DataMatrixInit{};
  cfg.clamp = false;
  const auto r = train(spec, x, y, cfg);
  const auto j = report_to_json(spec, cfg, r, false);
  EXPECT_FALSE(j.contains("wall_time"));
  EXPECT_EQ(j["init"], "data_matrix");
  EXPECT_TRUE(j["seed"].is_null());
  EXPECT_TRUE(j["c"].is_null());
  EXPECT_TRUE(j["clamp_margin"].is_null());
  EXPECT_EQ(j.dump(), report_to_json(spec, cfg, train(spec, x, y, cfg), false).dump());
}

TEST(VarianceCsv, Layout) {
  VarianceReport r;
  r.per_depth_mean = {2.5, 1.0};
  r.per_depth_std = {0.5, 0.25};
  r.probe_dim = {10, 100};
  std::ostringstream os;
  write_variance_csv(os, r);
  EXPECT_EQ(os.str(), "depth,mean,std,probe_dim\n1,2.5,0.5,10\n2,1,0.25,100\n");
}
