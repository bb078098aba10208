#include <gtest/gtest.h>

#include <set>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "pinvnet/network.hpp"
#include "pinvnet/pinv.hpp"

using namespace pinvnet;

namespace {

std::set<int> rows_of(const Mask& m, Eigen::Index col) {
  std::set<int> rows;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    if (m(i, col)) rows.insert(static_cast<int>(i) + 1);  // 1-indexed
  return rows;
}

}  // namespace

TEST(Structure, ParsesWidthsAndBands) {
  const auto shapes = parse_structure("150^r3-250-150-6");
  ASSERT_EQ(shapes.size(), 4u);
  EXPECT_EQ(shapes[0].width, 150u);
  EXPECT_EQ(shapes[0].band, std::optional<std::size_t>(3));
  EXPECT_FALSE(shapes[1].band);
  EXPECT_EQ(shapes[3].width, 6u);
}

TEST(Structure, RejectsMalformed) {
  for (const char* bad : {"", "8-", "-8", "8--1", "0-1", "a-1", "8^3-1", "8^r-1", "8^r2-1", "8^r0-1", "8^x3-1"}) {
    EXPECT_THROW(parse_structure(bad), ParseError) << bad;
  }
}

TEST(Structure, FormatRoundTrip) {
  for (const char* s : {"8-1", "1-1-1-8-1", "150^r3-250-150-6", "5^r1-7^r5-2"}) {
    const auto spec = NetworkSpec::from_structure(3, s, Activation::softplus08(), false);
    EXPECT_EQ(format_structure(spec), s);
    EXPECT_EQ(NetworkSpec::from_structure(3, format_structure(spec), Activation::softplus08(), false), spec);
  }
}

TEST(Augment, PrependsOnes) {
  Matrix x(1, 2);
  x << 2, 3;
  Matrix expected(1, 3);
  expected << 1, 2, 3;
  EXPECT_EQ(augment(x), expected);
  EXPECT_THROW(augment(Matrix(3, 0)), InvalidArgument);
  const Matrix r = fixtures::random_matrix(3, 2, 1);
  const Matrix a = augment(r);
  EXPECT_EQ(a.col(0), Vector::Ones(3));
  EXPECT_EQ(a.rightCols(2), r);
}

TEST(ReceptiveMask, BandedPatternForFourInputs) {
  const Mask m = receptive_mask(5, 4, 3, true);
  ASSERT_EQ(m.rows(), 5);
  ASSERT_EQ(m.cols(), 4);
  EXPECT_EQ(rows_of(m, 0), (std::set<int>{1, 2, 3}));
  EXPECT_EQ(rows_of(m, 1), (std::set<int>{2, 3, 4}));
  EXPECT_EQ(rows_of(m, 2), (std::set<int>{3, 4, 5}));
  EXPECT_EQ(rows_of(m, 3), (std::set<int>{3, 4, 5}));
}

TEST(ReceptiveMask, NoWrapAround) {
  const Mask m = receptive_mask(9, 8, 3, false);
  EXPECT_FALSE(m(8, 0));
  EXPECT_FALSE(m(0, 7));
  for (Eigen::Index j = 0; j < m.cols(); ++j) EXPECT_EQ(m.col(j).count(), 3);
}

TEST(ReceptiveMask, WideFieldIsFull) {
  EXPECT_TRUE(receptive_mask(5, 4, 5, true).all());
  EXPECT_TRUE(receptive_mask(5, 3, 7, false).all());
  EXPECT_FALSE(receptive_mask(5, 3, 3, false).all());
}

TEST(ReceptiveMask, SingleColumnSingleRow) {
  const Mask m = receptive_mask(7, 1, 1, false);
  EXPECT_EQ(m.count(), 1);
  EXPECT_TRUE(m(3, 0));
}

TEST(ReceptiveMask, CentresSpreadLinearly) {
  const Mask m = receptive_mask(11, 4, 1, true);  // d = 10, centres 0, 3, 6, 9
  EXPECT_EQ(rows_of(m, 0), std::set<int>{2});
  EXPECT_EQ(rows_of(m, 1), std::set<int>{5});
  EXPECT_EQ(rows_of(m, 2), std::set<int>{8});
  EXPECT_EQ(rows_of(m, 3), std::set<int>{11});
}

TEST(ReceptiveMask, RejectsEvenOrZeroField) {
  EXPECT_THROW(receptive_mask(5, 4, 2, true), InvalidArgument);
  EXPECT_THROW(receptive_mask(5, 4, 0, true), InvalidArgument);
}

TEST(WeightSet, ZeroesMaskedEntriesAndChecksShapes) {
  const auto spec = NetworkSpec::from_structure(4, "4^r3-2", Activation::softplus08(), false);
  const WeightSet w(spec, {Matrix::Ones(5, 4), Matrix::Ones(4, 2)});
  const Mask m = *w.mask(0);
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = 0; j < 4; ++j) EXPECT_EQ(w[0](i, j), m(i, j) ? 1.0 : 0.0);
  EXPECT_FALSE(w.mask(1));
  EXPECT_THROW(WeightSet(spec, {Matrix::Ones(4, 4), Matrix::Ones(4, 2)}), InvalidArgument);
  EXPECT_THROW(WeightSet(spec, {Matrix::Ones(5, 4)}), InvalidArgument);
}

TEST(Forward, SelectingIdentityReproducesInput) {
  const auto spec = NetworkSpec::from_structure(3, "3", Activation::identity(), false);
  Matrix w1 = Matrix::Zero(4, 3);
  w1.bottomRows(3) = Matrix::Identity(3, 3);
  const Matrix x = fixtures::random_matrix(6, 3, 2);
  EXPECT_EQ(forward(spec, WeightSet(spec, {w1}), x), x);
}

TEST(Forward, LinearOutputLeastSquaresFitsConsistentSystem) {
  const Matrix x = fixtures::random_matrix(12, 3, 3);
  const Matrix theta = fixtures::random_matrix(4, 2, 4);
  const Matrix y = augment(x) * theta;
  const auto spec = NetworkSpec::from_structure(3, "2", Activation::softplus08(), true);
  const WeightSet w(spec, {solve_least_squares(augment(x), y)});
  EXPECT_LT((forward(spec, w, x) - y).norm(), 1e-9);
}

TEST(Forward, ZeroWeightsGiveConstantOutput) {
  const auto spec = NetworkSpec::from_structure(2, "3-2", Activation::softplus08(), false);
  const WeightSet w(spec, {Matrix::Zero(3, 3), Matrix::Zero(3, 2)});
  const Matrix x = fixtures::random_matrix(5, 2, 5);
  const Matrix hidden = hidden_activation(spec, w, x, 1);
  EXPECT_TRUE(hidden.isApprox(Matrix::Constant(5, 3, std::log(1.8))));
  const Matrix out = forward(spec, w, x);
  EXPECT_TRUE(out.isApprox(Matrix::Constant(5, 2, oracle::softplus08(0.0))));
}

TEST(Forward, RejectsMismatchedShapes) {
  const auto spec = NetworkSpec::from_structure(2, "3-1", Activation::softplus08(), false);
  const WeightSet w(spec, {Matrix::Zero(3, 3), Matrix::Zero(3, 1)});
  EXPECT_THROW(forward(spec, w, Matrix::Ones(4, 3)), InvalidArgument);
  const auto other = NetworkSpec::from_structure(2, "4-1", Activation::softplus08(), false);
  EXPECT_THROW(forward(other, w, Matrix::Ones(4, 2)), InvalidArgument);
}

TEST(HiddenActivation, ZeroLayersIsAugmentedInput) {
  const auto spec = NetworkSpec::from_structure(2, "3", Activation::softplus08(), false);
  const WeightSet w(spec, {fixtures::random_matrix(3, 3, 6)});
  const Matrix x = fixtures::random_matrix(4, 2, 7);
  EXPECT_EQ(hidden_activation(spec, w, x, 0), augment(x));
  EXPECT_THROW(hidden_activation(spec, w, x, 1), InvalidArgument);
}

TEST(HiddenActivation, ComposesToForward) {
  for (bool linear : {false, true}) {
    const auto spec = NetworkSpec::from_structure(3, "5-4-2", Activation::softplus08(), linear);
    const WeightSet w(spec, {fixtures::random_matrix(4, 5, 8), fixtures::random_matrix(5, 4, 9),
                             fixtures::random_matrix(4, 2, 10)});
    const Matrix x = fixtures::random_matrix(6, 3, 11);
    Matrix out = hidden_activation(spec, w, x, 2) * w[2];
    if (!linear) out = apply(Activation::softplus08(), out);
    EXPECT_EQ(out, forward(spec, w, x));
  }
}

TEST(HiddenActivation, DataMatrixFirstLayerGivesActivatedProjector) {
  const Matrix x = fixtures::random_matrix(6, 2, 12);
  const Matrix w1 = pinv(augment(x));
  const auto spec = NetworkSpec::from_structure(2, "6-1", Activation::softplus08(), false);
  const WeightSet w(spec, {w1, Matrix::Ones(6, 1)});
  const Matrix expected = apply(Activation::softplus08(), augment(x) * w1);
  EXPECT_EQ(hidden_activation(spec, w, x, 1), expected);
  // the pre-activation is the projector onto the range of X
  EXPECT_LT((augment(x) * w1 - oracle::column_projector(augment(x))).norm(), 1e-10);
}

TEST(NetworkProperty, ForwardIsBitDeterministic) {
  const auto spec = NetworkSpec::from_structure(3, "7^r3-5-2", Activation::softplus08(), false);
  const WeightSet w(spec, {fixtures::random_matrix(4, 7, 13), fixtures::random_matrix(7, 5, 14),
                           fixtures::random_matrix(5, 2, 15)});
  const Matrix x = fixtures::random_matrix(9, 3, 16);
  EXPECT_EQ(forward(spec, w, x), forward(spec, w, x));
}

TEST(NetworkProperty, MaskedValuesDoNotMatter) {
  const auto spec = NetworkSpec::from_structure(6, "6^r3-2", Activation::softplus08(), false);
  const Matrix w1 = fixtures::random_matrix(7, 6, 17);
  const Mask m = *layer_mask(spec, 0);
  const Matrix noise = fixtures::random_matrix(7, 6, 18) * 100.0;
  const Matrix w1_dirty = m.select(w1, noise);
  const Matrix w2 = fixtures::random_matrix(6, 2, 19);
  const Matrix x = fixtures::random_matrix(10, 6, 20);
  EXPECT_EQ(forward(spec, WeightSet(spec, {w1, w2}), x), forward(spec, WeightSet(spec, {w1_dirty, w2}), x));
}
