#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "ammfm/errors.hpp"
#include "ammfm/ops.hpp"
#include "oracles.hpp"

namespace ammfm {
namespace {

using testing::gradcheck;
using testing::random_tensor;

constexpr int kTrials = 100;
constexpr double kTol = 1e-6;

std::vector<double> vals(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

std::size_t dim(Rng& rng, std::size_t max) { return 1 + rng.below(max); }

TEST(Conv1x1, IdentityWeightsReturnInput) {
  Rng rng(1);
  const auto x = random_tensor(Shape{3, 2, 4}, rng);
  std::vector<double> eye(16, 0.0);
  for (int i = 0; i < 4; ++i) eye[i * 4 + i] = 1.0;
  const auto y = ops::conv1x1(x, Tensor(Shape{4, 4}, eye), Tensor::zeros(Shape{4}));
  EXPECT_EQ(vals(y), vals(x));
}

TEST(Conv1x1, HandExample) {
  const Tensor x(Shape{1, 1, 2}, {3, 5});
  const auto y = ops::conv1x1(x, Tensor(Shape{2, 2}, {1, 0, 0, 2}), Tensor(Shape{2}, {1, 1}));
  EXPECT_EQ(vals(y), (std::vector<double>{4, 11}));
}

TEST(Conv1x1, Annihilation) {
  const auto x = Tensor::full(Shape{2, 2, 1}, 1.0);
  const auto y = ops::conv1x1(x, Tensor(Shape{1, 1}, {3}), Tensor(Shape{1}, {-3}));
  for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

TEST(Conv1x1, ChannelMismatchNamesAxis) {
  const auto x = Tensor::zeros(Shape{2, 2, 3});
  try {
    (void)ops::conv1x1(x, Tensor::zeros(Shape{4, 2}), Tensor::zeros(Shape{2}));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("axis"), std::string::npos) << e.what();
  }
}

TEST(Matmul, IdentityLeft) {
  Rng rng(2);
  const auto b = random_tensor(Shape{2, 3}, rng);
  EXPECT_EQ(vals(ops::matmul(Tensor(Shape{2, 2}, {1, 0, 0, 1}), b)), vals(b));
}

TEST(Matmul, HandExample) {
  const auto y = ops::matmul(Tensor(Shape{2, 2}, {1, 2, 3, 4}), Tensor(Shape{2, 1}, {5, 6}));
  EXPECT_EQ(y.shape(), (Shape{2, 1}));
  EXPECT_EQ(vals(y), (std::vector<double>{17, 39}));
}

TEST(Matmul, ZeroMatrix) {
  Rng rng(3);
  const auto y = ops::matmul(Tensor::zeros(Shape{3, 4}), random_tensor(Shape{4, 2}, rng));
  for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

TEST(Matmul, InnerMismatch) {
  EXPECT_THROW((void)ops::matmul(Tensor::zeros(Shape{2, 3}), Tensor::zeros(Shape{2, 3})),
               DimensionError);
}

TEST(Softmax, Examples) {
  EXPECT_EQ(vals(ops::softmax(Tensor(Shape{2}, {0, 0}))), (std::vector<double>{0.5, 0.5}));
  const auto p = ops::softmax(Tensor(Shape{2}, {std::log(1.0), std::log(3.0)}));
  EXPECT_NEAR(p[0], 0.25, 1e-15);
  EXPECT_NEAR(p[1], 0.75, 1e-15);
  EXPECT_EQ(vals(ops::softmax(Tensor(Shape{2}, {1000, 1000}))), (std::vector<double>{0.5, 0.5}));
}

TEST(Softmax, NonFiniteInputRejected) {
  EXPECT_THROW((void)ops::softmax(Tensor(Shape{2}, {0, NAN})), NumericError);
  EXPECT_THROW((void)ops::softmax(Tensor(Shape{2}, {INFINITY, 0})), NumericError);
}

TEST(Softmax, RowsSumToOneAndShiftInvariant) {
  Rng rng(4);
  for (int trial = 0; trial < kTrials; ++trial) {
    const auto n = dim(rng, 6);
    const auto m = dim(rng, 6);
    auto x = random_tensor(Shape{n, m}, rng);
    const auto p = ops::softmax(x);
    std::vector<double> shifted(x.values().begin(), x.values().end());
    for (std::size_t r = 0; r < n; ++r) {
      const double c = 50.0 * rng.normal();
      for (std::size_t k = 0; k < m; ++k) shifted[r * m + k] += c;
    }
    const auto q = ops::softmax(Tensor(Shape{n, m}, shifted));
    for (std::size_t r = 0; r < n; ++r) {
      double s = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        s += p[r * m + k];
        EXPECT_NEAR(p[r * m + k], q[r * m + k], 1e-12);
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(CrossEntropy, Examples) {
  EXPECT_NEAR(ops::cross_entropy(Tensor(Shape{3}, {0, 0, 0}), 1).item(), std::log(3.0), 1e-15);
  // -log(e^10 / (e^10 + e^-10)) = log(1 + e^-20)
  EXPECT_NEAR(ops::cross_entropy(Tensor(Shape{2}, {10, -10}), 0).item(), std::log1p(std::exp(-20.0)),
              1e-20);
  EXPECT_NEAR(ops::cross_entropy(Tensor(Shape{2}, {10, -10}), 0).item(), 2.06e-9, 1e-11);
  EXPECT_NEAR(ops::cross_entropy(Tensor(Shape{4}, {0, 0, 0, 0}), 2).item(), std::log(4.0), 1e-15);
}

TEST(CrossEntropy, TargetOutOfRange) {
  EXPECT_THROW((void)ops::cross_entropy(Tensor(Shape{3}, {0, 0, 0}), 3), IndexError);
}

TEST(Reshape, InverseIsIdentity) {
  Rng rng(5);
  const auto x = random_tensor(Shape{4, 3, 2}, rng);
  const auto y = ops::reshape(ops::reshape(x, Shape{12, 2}), Shape{4, 3, 2});
  EXPECT_EQ(y.shape(), x.shape());
  EXPECT_EQ(vals(y), vals(x));
  EXPECT_THROW((void)ops::reshape(x, Shape{5, 5}), DimensionError);
}

TEST(Add, NoBroadcasting) {
  EXPECT_THROW((void)ops::add(Tensor::zeros(Shape{2, 3}), Tensor::zeros(Shape{3})),
               DimensionError);
}

TEST(ResizeSpatial, PoolingAndRepetition) {
  const Tensor x(Shape{2, 2, 1}, {1, 2, 3, 4});
  EXPECT_EQ(ops::resize_spatial(x, 1, 1)[0], 2.5);
  const auto c = ops::resize_spatial(Tensor::full(Shape{4, 4, 2}, 0.7), 2, 2);
  for (double v : c.values()) EXPECT_DOUBLE_EQ(v, 0.7);
  const auto up = ops::resize_spatial(x, 4, 4);
  EXPECT_EQ(up[0], 1);
  EXPECT_EQ(up[1], 1);
  EXPECT_EQ(up[2], 2);
  EXPECT_EQ(up[15], 4);
  EXPECT_THROW((void)ops::resize_spatial(Tensor::zeros(Shape{3, 3, 1}), 2, 2), DimensionError);
}

TEST(Conv3x3, StrideTwoOutputShape) {
  const auto y = ops::conv3x3(Tensor::zeros(Shape{5, 7, 2}), Tensor::zeros(Shape{3, 3, 2, 4}),
                              Tensor::zeros(Shape{4}), 2);
  EXPECT_EQ(y.shape(), (Shape{3, 4, 4}));
}

TEST(Conv3x3, MatchesDirectSum) {
  Rng rng(6);
  const auto x = random_tensor(Shape{4, 5, 2}, rng);
  const auto w = random_tensor(Shape{3, 3, 2, 3}, rng);
  const auto b = random_tensor(Shape{3}, rng);
  const auto y = ops::conv3x3(x, w, b, 1);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      for (std::size_t o = 0; o < 3; ++o) {
        double s = b[o];
        for (int di = -1; di <= 1; ++di)
          for (int dj = -1; dj <= 1; ++dj) {
            const int ii = static_cast<int>(i) + di;
            const int jj = static_cast<int>(j) + dj;
            if (ii < 0 || jj < 0 || ii >= 4 || jj >= 5) continue;
            for (std::size_t c = 0; c < 2; ++c) {
              s += x[(ii * 5 + jj) * 2 + c] * w[(((di + 1) * 3 + (dj + 1)) * 2 + c) * 3 + o];
            }
          }
        EXPECT_NEAR(y[(i * 5 + j) * 3 + o], s, 1e-12);
      }
}

TEST(Concat, LastAxis) {
  const auto y = ops::concat(Tensor(Shape{2}, {1, 2}), Tensor(Shape{1}, {3}));
  EXPECT_EQ(vals(y), (std::vector<double>{1, 2, 3}));
}

// Finite-difference properties: every differentiable op, random shapes up to
// 4x4x8, at least 100 seeded trials each.

struct OpCase {
  const char* name;
  std::function<std::pair<std::function<Tensor()>, std::vector<Tensor>>(Rng&)> make;
};

std::vector<OpCase> op_cases() {
  return {
      {"add",
       [](Rng& r) {
         const Shape s{dim(r, 4), dim(r, 4), dim(r, 8)};
         auto a = random_tensor(s, r, true), b = random_tensor(s, r, true);
         const auto w = random_tensor(s, r);
         return std::pair{std::function<Tensor()>([=] { return ops::sum(ops::mul(ops::add(a, b), w)); }),
                          std::vector<Tensor>{a, b}};
       }},
      {"mul",
       [](Rng& r) {
         const Shape s{dim(r, 4), dim(r, 4), dim(r, 8)};
         auto a = random_tensor(s, r, true), b = random_tensor(s, r, true);
         return std::pair{std::function<Tensor()>([=] { return ops::sum(ops::mul(a, b)); }),
                          std::vector<Tensor>{a, b}};
       }},
      {"scale",
       [](Rng& r) {
         const Shape s{dim(r, 4), dim(r, 8)};
         auto a = random_tensor(s, r, true);
         const double f = r.normal();
         const auto w = random_tensor(s, r);
         return std::pair{std::function<Tensor()>([=] { return ops::sum(ops::mul(ops::scale(a, f), w)); }),
                          std::vector<Tensor>{a}};
       }},
      {"relu",
       [](Rng& r) {
         const Shape s{dim(r, 4), dim(r, 4), dim(r, 8)};
         auto a = random_tensor(s, r, true);
         const auto w = random_tensor(s, r);
         return std::pair{std::function<Tensor()>([=] { return ops::sum(ops::mul(ops::relu(a), w)); }),
                          std::vector<Tensor>{a}};
       }},
      {"reshape+transpose",
       [](Rng& r) {
         const auto n = dim(r, 4), m = dim(r, 8);
         auto a = random_tensor(Shape{n * m}, r, true);
         const auto w = random_tensor(Shape{m, n}, r);
         return std::pair{std::function<Tensor()>([=] {
                            return ops::sum(ops::mul(ops::transpose(ops::reshape(a, Shape{n, m})), w));
                          }),
                          std::vector<Tensor>{a}};
       }},
      {"matmul",
       [](Rng& r) {
         const auto m = dim(r, 4), k = dim(r, 8), p = dim(r, 4);
         auto a = random_tensor(Shape{m, k}, r, true), b = random_tensor(Shape{k, p}, r, true);
         const auto w = random_tensor(Shape{m, p}, r);
         return std::pair{std::function<Tensor()>([=] { return ops::sum(ops::mul(ops::matmul(a, b), w)); }),
                          std::vector<Tensor>{a, b}};
       }},
      {"softmax",
       [](Rng& r) {
         const Shape s{dim(r, 4), 1 + dim(r, 7)};
         auto a = random_tensor(s, r, true);
         const auto w = random_tensor(s, r);
         return std::pair{std::function<Tensor()>([=] { return ops::sum(ops::mul(ops::softmax(a), w)); }),
                          std::vector<Tensor>{a}};
       }},
      {"cross_entropy",
       [](Rng& r) {
         const auto k = 1 + dim(r, 7);
         auto a = random_tensor(Shape{k}, r, true);
         const auto target = r.below(k);
         return std::pair{std::function<Tensor()>([=] { return ops::cross_entropy(a, target); }),
                          std::vector<Tensor>{a}};
       }},
      {"conv1x1",
       [](Rng& r) {
         const auto ci = dim(r, 8), co = dim(r, 8);
         const Shape s{dim(r, 4), dim(r, 4), ci};
         auto x = random_tensor(s, r, true);
         auto w = random_tensor(Shape{ci, co}, r, true);
         auto b = random_tensor(Shape{co}, r, true);
         const auto ro = random_tensor(Shape{s[0], s[1], co}, r);
         return std::pair{std::function<Tensor()>([=] { return ops::sum(ops::mul(ops::conv1x1(x, w, b), ro)); }),
                          std::vector<Tensor>{x, w, b}};
       }},
      {"conv3x3",
       [](Rng& r) {
         const auto ci = dim(r, 8), co = dim(r, 4);
         const std::size_t stride = 1 + r.below(2);
         const Shape s{dim(r, 4), dim(r, 4), ci};
         auto x = random_tensor(s, r, true);
         auto w = random_tensor(Shape{3, 3, ci, co}, r, true);
         auto b = random_tensor(Shape{co}, r, true);
         const Shape os{(s[0] + stride - 1) / stride, (s[1] + stride - 1) / stride, co};
         const auto ro = random_tensor(os, r);
         return std::pair{std::function<Tensor()>([=] {
                            return ops::sum(ops::mul(ops::conv3x3(x, w, b, stride), ro));
                          }),
                          std::vector<Tensor>{x, w, b}};
       }},
      {"global_avg_pool",
       [](Rng& r) {
         const Shape s{dim(r, 4), dim(r, 4), dim(r, 8)};
         auto x = random_tensor(s, r, true);
         const auto ro = random_tensor(Shape{s[2]}, r);
         return std::pair{std::function<Tensor()>([=] { return ops::sum(ops::mul(ops::global_avg_pool(x), ro)); }),
                          std::vector<Tensor>{x}};
       }},
      {"fully_connected",
       [](Rng& r) {
         const auto d = dim(r, 8), k = dim(r, 5);
         auto x = random_tensor(Shape{d}, r, true);
         auto w = random_tensor(Shape{d, k}, r, true);
         auto b = random_tensor(Shape{k}, r, true);
         const auto ro = random_tensor(Shape{k}, r);
         return std::pair{std::function<Tensor()>([=] {
                            return ops::sum(ops::mul(ops::fully_connected(x, w, b), ro));
                          }),
                          std::vector<Tensor>{x, w, b}};
       }},
      {"concat",
       [](Rng& r) {
         const auto n = dim(r, 4), p = dim(r, 8), q = dim(r, 8);
         auto a = random_tensor(Shape{n, p}, r, true), b = random_tensor(Shape{n, q}, r, true);
         const auto ro = random_tensor(Shape{n, p + q}, r);
         return std::pair{std::function<Tensor()>([=] { return ops::sum(ops::mul(ops::concat(a, b), ro)); }),
                          std::vector<Tensor>{a, b}};
       }},
      {"resize_spatial",
       [](Rng& r) {
         // Square power-of-two sides so every factor is integral.
         const std::size_t sides[] = {1, 2, 4};
         const auto h = sides[r.below(3)], w = sides[r.below(3)];
         const auto th = sides[r.below(3)], tw = sides[r.below(3)];
         auto x = random_tensor(Shape{h, w, dim(r, 8)}, r, true);
         const auto ro = random_tensor(Shape{th, tw, x.shape()[2]}, r);
         return std::pair{std::function<Tensor()>([=] {
                            return ops::sum(ops::mul(ops::resize_spatial(x, th, tw), ro));
                          }),
                          std::vector<Tensor>{x}};
       }},
  };
}

class OpGradient : public ::testing::TestWithParam<std::size_t> {};

TEST_P(OpGradient, MatchesCentralDifferences) {
  const auto op = op_cases()[GetParam()];
  Rng rng = Rng(2024).split(op.name);
  double worst = 0.0;
  for (int trial = 0; trial < kTrials; ++trial) {
    Rng tr = rng.split(static_cast<std::uint64_t>(trial));
    auto [loss, inputs] = op.make(tr);
    const auto r = gradcheck(loss, inputs);
    worst = std::max(worst, r.max_relative_error);
    ASSERT_LT(r.max_relative_error, kTol) << op.name << " trial " << trial << " at " << r.worst;
  }
  RecordProperty("max_relative_error", std::to_string(worst));
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient, ::testing::Range<std::size_t>(0, 14),
                         [](const auto& info) {
                           std::string n = op_cases()[info.param].name;
                           for (auto& c : n)
                             if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
                           return n;
                         });

}  // namespace
}  // namespace ammfm
