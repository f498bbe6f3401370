#include "ammfm/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ammfm/errors.hpp"

namespace ammfm::ops {
namespace {

detail::Node& input(detail::Node& n, std::size_t i) { return *n.inputs[i]; }

std::string axis_msg(std::string_view op, std::string_view what) {
  return std::string(op) + ": " + std::string(what);
}

void require_same_shape(std::string_view op, const Tensor& a, const Tensor& b) {
  if (a.shape().rank() != b.shape().rank()) {
    throw DimensionError(axis_msg(op, "rank mismatch " + a.shape().str() + " vs " + b.shape().str()));
  }
  for (std::size_t axis = 0; axis < a.shape().rank(); ++axis) {
    if (a.shape()[axis] != b.shape()[axis]) {
      throw DimensionError(axis_msg(op, "axis " + std::to_string(axis) + " differs (" +
                                            a.shape().str() + " vs " + b.shape().str() + ")"));
    }
  }
}

void require_rank(std::string_view op, const Tensor& t, std::size_t rank, std::string_view name) {
  if (t.shape().rank() != rank) {
    throw DimensionError(axis_msg(op, std::string(name) + " must have rank " + std::to_string(rank) +
                                          ", got shape " + t.shape().str()));
  }
}

void require_axis(std::string_view op, std::string_view lhs, std::size_t lhs_size,
                  std::string_view rhs, std::size_t rhs_size) {
  if (lhs_size != rhs_size) {
    throw DimensionError(axis_msg(op, std::string(lhs) + " is " + std::to_string(lhs_size) +
                                          " but " + std::string(rhs) + " is " +
                                          std::to_string(rhs_size)));
  }
}

// Source rows contributing to output index `o` when resizing `in` -> `out`.
struct AxisWindow {
  std::size_t start;
  std::size_t count;
};

AxisWindow window(std::size_t o, std::size_t in, std::size_t out) {
  if (out <= in) {
    const auto f = in / out;
    return {o * f, f};
  }
  return {o / (out / in), 1};
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  std::vector<double> out(a.numel());
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return make_result("add", a.shape(), std::move(out), {a, b}, [](detail::Node& n) {
    for (std::size_t k = 0; k < 2; ++k) {
      auto& in = input(n, k);
      if (!in.requires_grad) continue;
      for (std::size_t i = 0; i < n.grad.size(); ++i) in.grad[i] += n.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  std::vector<double> out(a.numel());
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_result("mul", a.shape(), std::move(out), {a, b}, [](detail::Node& n) {
    auto& x = input(n, 0);
    auto& y = input(n, 1);
    if (x.requires_grad) {
      for (std::size_t i = 0; i < n.grad.size(); ++i) x.grad[i] += n.grad[i] * y.value[i];
    }
    if (y.requires_grad) {
      for (std::size_t i = 0; i < n.grad.size(); ++i) y.grad[i] += n.grad[i] * x.value[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.values().begin(), a.values().end());
  for (auto& v : out) v *= factor;
  return make_result("scale", a.shape(), std::move(out), {a}, [factor](detail::Node& n) {
    auto& x = input(n, 0);
    for (std::size_t i = 0; i < n.grad.size(); ++i) x.grad[i] += n.grad[i] * factor;
  });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.values()) total += v;
  return make_result("sum", Shape{1}, {total}, {a}, [](detail::Node& n) {
    auto& x = input(n, 0);
    for (auto& g : x.grad) g += n.grad[0];
  });
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.numel());
  const auto av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] > 0.0 ? av[i] : 0.0;
  return make_result("relu", a.shape(), std::move(out), {a}, [](detail::Node& n) {
    auto& x = input(n, 0);
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      if (x.value[i] > 0.0) x.grad[i] += n.grad[i];
    }
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape.numel() != a.numel()) {
    throw DimensionError("reshape: cannot view " + a.shape().str() + " as " + shape.str());
  }
  std::vector<double> out(a.values().begin(), a.values().end());
  return make_result("reshape", std::move(shape), std::move(out), {a}, [](detail::Node& n) {
    auto& x = input(n, 0);
    for (std::size_t i = 0; i < n.grad.size(); ++i) x.grad[i] += n.grad[i];
  });
}

Tensor transpose(const Tensor& a) {
  require_rank("transpose", a, 2, "input");
  const auto rows = a.shape()[0];
  const auto cols = a.shape()[1];
  std::vector<double> out(a.numel());
  const auto av = a.values();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = av[r * cols + c];
  return make_result("transpose", Shape{cols, rows}, std::move(out), {a},
                     [rows, cols](detail::Node& n) {
                       auto& x = input(n, 0);
                       for (std::size_t r = 0; r < rows; ++r)
                         for (std::size_t c = 0; c < cols; ++c)
                           x.grad[r * cols + c] += n.grad[c * rows + r];
                     });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank("matmul", a, 2, "left operand");
  require_rank("matmul", b, 2, "right operand");
  const auto m = a.shape()[0];
  const auto k = a.shape()[1];
  const auto p = b.shape()[1];
  require_axis("matmul", "left axis 1 (inner)", k, "right axis 0 (inner)", b.shape()[0]);

  std::vector<double> out(m * p, 0.0);
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * p;
    for (std::size_t j = 0; j < k; ++j) {
      const double aij = av[i * k + j];
      const double* brow = bv.data() + j * p;
      for (std::size_t c = 0; c < p; ++c) row[c] += aij * brow[c];
    }
  }
  return make_result("matmul", Shape{m, p}, std::move(out), {a, b}, [m, k, p](detail::Node& n) {
    auto& x = input(n, 0);
    auto& y = input(n, 1);
    if (x.requires_grad) {
      // dA = dC . B^T
      for (std::size_t i = 0; i < m; ++i) {
        const double* g = n.grad.data() + i * p;
        for (std::size_t j = 0; j < k; ++j) {
          const double* brow = y.value.data() + j * p;
          double acc = 0.0;
          for (std::size_t c = 0; c < p; ++c) acc += g[c] * brow[c];
          x.grad[i * k + j] += acc;
        }
      }
    }
    if (y.requires_grad) {
      // dB = A^T . dC
      for (std::size_t i = 0; i < m; ++i) {
        const double* g = n.grad.data() + i * p;
        for (std::size_t j = 0; j < k; ++j) {
          const double aij = x.value[i * k + j];
          double* grow = y.grad.data() + j * p;
          for (std::size_t c = 0; c < p; ++c) grow[c] += aij * g[c];
        }
      }
    }
  });
}

Tensor softmax(const Tensor& a) {
  const auto width = a.shape()[a.shape().rank() - 1];
  const auto rows = a.numel() / width;
  const auto av = a.values();
  std::vector<double> out(a.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = av.data() + r * width;
    double* o = out.data() + r * width;
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < width; ++c) {
      if (!std::isfinite(in[c])) {
        throw NumericError("softmax: non-finite input at row " + std::to_string(r) + ", column " +
                           std::to_string(c));
      }
      peak = std::max(peak, in[c]);
    }
    double total = 0.0;
    for (std::size_t c = 0; c < width; ++c) {
      o[c] = std::exp(in[c] - peak);
      total += o[c];
    }
    for (std::size_t c = 0; c < width; ++c) o[c] /= total;
  }
  return make_result("softmax", a.shape(), std::move(out), {a}, [rows, width](detail::Node& n) {
    auto& x = input(n, 0);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = n.value.data() + r * width;
      const double* g = n.grad.data() + r * width;
      double dot = 0.0;
      for (std::size_t c = 0; c < width; ++c) dot += g[c] * y[c];
      for (std::size_t c = 0; c < width; ++c) x.grad[r * width + c] += y[c] * (g[c] - dot);
    }
  });
}

Tensor cross_entropy(const Tensor& logits, std::size_t target) {
  const auto k = logits.numel();
  if (logits.shape().rank() != 1) {
    throw DimensionError("cross_entropy: logits must be rank 1, got " + logits.shape().str());
  }
  if (k < 2) {
    throw ContractError("cross_entropy: need at least 2 categories, got " + std::to_string(k));
  }
  if (target >= k) {
    throw IndexError("cross_entropy: target " + std::to_string(target) + " outside [0, " +
                     std::to_string(k) + ")");
  }
  const auto lv = logits.values();
  std::size_t arg = 0;
  for (std::size_t c = 0; c < k; ++c) {
    if (!std::isfinite(lv[c])) throw NumericError("cross_entropy: non-finite logit");
    if (lv[c] > lv[arg]) arg = c;
  }
  const double peak = lv[arg];
  // log-sum-exp split as log1p over the non-maximal terms keeps precision
  // when the prediction is nearly a point mass.
  double rest = 0.0;
  std::vector<double> probs(k);
  for (std::size_t c = 0; c < k; ++c) {
    probs[c] = std::exp(lv[c] - peak);
    if (c != arg) rest += probs[c];
  }
  const double loss = (peak - lv[target]) + std::log1p(rest);
  const double total = 1.0 + rest;
  for (auto& p : probs) p /= total;

  return make_result("cross_entropy", Shape{1}, {loss}, {logits},
                     [probs = std::move(probs), target](detail::Node& n) {
                       auto& x = input(n, 0);
                       const double g = n.grad[0];
                       for (std::size_t c = 0; c < probs.size(); ++c) {
                         x.grad[c] += g * (probs[c] - (c == target ? 1.0 : 0.0));
                       }
                     });
}

Tensor conv1x1(const Tensor& in, const Tensor& weight, const Tensor& bias) {
  require_rank("conv1x1", in, 3, "input");
  require_rank("conv1x1", weight, 2, "weight");
  require_rank("conv1x1", bias, 1, "bias");
  const auto h = in.shape()[0];
  const auto w = in.shape()[1];
  const auto ci = in.shape()[2];
  const auto co = weight.shape()[1];
  require_axis("conv1x1", "input axis 2 (channels)", ci, "weight axis 0 (C_in)", weight.shape()[0]);
  require_axis("conv1x1", "bias axis 0", bias.shape()[0], "weight axis 1 (C_out)", co);

  const auto positions = h * w;
  std::vector<double> out(positions * co);
  const auto xv = in.values();
  const auto wv = weight.values();
  const auto bv = bias.values();
  for (std::size_t p = 0; p < positions; ++p) {
    double* o = out.data() + p * co;
    std::copy(bv.begin(), bv.end(), o);
    const double* x = xv.data() + p * ci;
    for (std::size_t i = 0; i < ci; ++i) {
      const double xi = x[i];
      const double* wrow = wv.data() + i * co;
      for (std::size_t c = 0; c < co; ++c) o[c] += xi * wrow[c];
    }
  }
  return make_result("conv1x1", Shape{h, w, co}, std::move(out), {in, weight, bias},
                     [positions, ci, co](detail::Node& n) {
                       auto& x = input(n, 0);
                       auto& wt = input(n, 1);
                       auto& b = input(n, 2);
                       for (std::size_t p = 0; p < positions; ++p) {
                         const double* g = n.grad.data() + p * co;
                         if (b.requires_grad) {
                           for (std::size_t c = 0; c < co; ++c) b.grad[c] += g[c];
                         }
                         for (std::size_t i = 0; i < ci; ++i) {
                           const double* wrow = wt.value.data() + i * co;
                           if (x.requires_grad) {
                             double acc = 0.0;
                             for (std::size_t c = 0; c < co; ++c) acc += g[c] * wrow[c];
                             x.grad[p * ci + i] += acc;
                           }
                           if (wt.requires_grad) {
                             const double xi = x.value[p * ci + i];
                             double* gw = wt.grad.data() + i * co;
                             for (std::size_t c = 0; c < co; ++c) gw[c] += xi * g[c];
                           }
                         }
                       }
                     });
}

Tensor conv3x3(const Tensor& in, const Tensor& weight, const Tensor& bias, std::size_t stride) {
  require_rank("conv3x3", in, 3, "input");
  require_rank("conv3x3", weight, 4, "weight");
  require_rank("conv3x3", bias, 1, "bias");
  if (stride == 0) throw ContractError("conv3x3: stride must be positive");
  if (weight.shape()[0] != 3 || weight.shape()[1] != 3) {
    throw DimensionError("conv3x3: weight axes 0 and 1 must be 3, got " + weight.shape().str());
  }
  const auto h = in.shape()[0];
  const auto w = in.shape()[1];
  const auto ci = in.shape()[2];
  const auto co = weight.shape()[3];
  require_axis("conv3x3", "input axis 2 (channels)", ci, "weight axis 2 (C_in)", weight.shape()[2]);
  require_axis("conv3x3", "bias axis 0", bias.shape()[0], "weight axis 3 (C_out)", co);

  const auto ho = (h + stride - 1) / stride;
  const auto wo = (w + stride - 1) / stride;
  std::vector<double> out(ho * wo * co);
  const auto xv = in.values();
  const auto wv = weight.values();
  const auto bv = bias.values();

  // Visits every (output position, tap) pair whose input pixel is in bounds.
  auto for_each_tap = [=](auto&& fn) {
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        const std::size_t op = oy * wo + ox;
        for (std::size_t ky = 0; ky < 3; ++ky) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - 1;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t kx = 0; kx < 3; ++kx) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - 1;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
            fn(op, static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix), ky * 3 + kx);
          }
        }
      }
    }
  };

  for (std::size_t p = 0; p < ho * wo; ++p) std::copy(bv.begin(), bv.end(), out.data() + p * co);
  for_each_tap([&](std::size_t op, std::size_t ip, std::size_t tap) {
    double* o = out.data() + op * co;
    const double* x = xv.data() + ip * ci;
    const double* wtap = wv.data() + tap * ci * co;
    for (std::size_t i = 0; i < ci; ++i) {
      const double xi = x[i];
      const double* wrow = wtap + i * co;
      for (std::size_t c = 0; c < co; ++c) o[c] += xi * wrow[c];
    }
  });

  return make_result(
      "conv3x3", Shape{ho, wo, co}, std::move(out), {in, weight, bias},
      [for_each_tap, ci, co, positions = ho * wo](detail::Node& n) {
        auto& x = input(n, 0);
        auto& wt = input(n, 1);
        auto& b = input(n, 2);
        if (b.requires_grad) {
          for (std::size_t p = 0; p < positions; ++p)
            for (std::size_t c = 0; c < co; ++c) b.grad[c] += n.grad[p * co + c];
        }
        for_each_tap([&](std::size_t op, std::size_t ip, std::size_t tap) {
          const double* g = n.grad.data() + op * co;
          const double* wtap = wt.value.data() + tap * ci * co;
          for (std::size_t i = 0; i < ci; ++i) {
            const double* wrow = wtap + i * co;
            if (x.requires_grad) {
              double acc = 0.0;
              for (std::size_t c = 0; c < co; ++c) acc += g[c] * wrow[c];
              x.grad[ip * ci + i] += acc;
            }
            if (wt.requires_grad) {
              const double xi = x.value[ip * ci + i];
              double* gw = wt.grad.data() + (tap * ci + i) * co;
              for (std::size_t c = 0; c < co; ++c) gw[c] += xi * g[c];
            }
          }
        });
      });
}

Tensor global_avg_pool(const Tensor& in) {
  require_rank("global_avg_pool", in, 3, "input");
  const auto positions = in.shape()[0] * in.shape()[1];
  const auto c = in.shape()[2];
  std::vector<double> out(c, 0.0);
  const auto xv = in.values();
  for (std::size_t p = 0; p < positions; ++p)
    for (std::size_t k = 0; k < c; ++k) out[k] += xv[p * c + k];
  const double inv = 1.0 / static_cast<double>(positions);
  for (auto& v : out) v *= inv;
  return make_result("global_avg_pool", Shape{c}, std::move(out), {in},
                     [positions, c, inv](detail::Node& n) {
                       auto& x = input(n, 0);
                       for (std::size_t p = 0; p < positions; ++p)
                         for (std::size_t k = 0; k < c; ++k) x.grad[p * c + k] += n.grad[k] * inv;
                     });
}

Tensor fully_connected(const Tensor& in, const Tensor& weight, const Tensor& bias) {
  require_rank("fully_connected", in, 1, "input");
  require_rank("fully_connected", weight, 2, "weight");
  require_rank("fully_connected", bias, 1, "bias");
  const auto d = in.shape()[0];
  const auto k = weight.shape()[1];
  require_axis("fully_connected", "input axis 0", d, "weight axis 0", weight.shape()[0]);
  require_axis("fully_connected", "bias axis 0", bias.shape()[0], "weight axis 1", k);
  std::vector<double> out(bias.values().begin(), bias.values().end());
  const auto xv = in.values();
  const auto wv = weight.values();
  for (std::size_t i = 0; i < d; ++i) {
    const double xi = xv[i];
    const double* wrow = wv.data() + i * k;
    for (std::size_t c = 0; c < k; ++c) out[c] += xi * wrow[c];
  }
  return make_result("fully_connected", Shape{k}, std::move(out), {in, weight, bias},
                     [d, k](detail::Node& n) {
                       auto& x = input(n, 0);
                       auto& wt = input(n, 1);
                       auto& b = input(n, 2);
                       if (b.requires_grad)
                         for (std::size_t c = 0; c < k; ++c) b.grad[c] += n.grad[c];
                       for (std::size_t i = 0; i < d; ++i) {
                         const double* wrow = wt.value.data() + i * k;
                         if (x.requires_grad) {
                           double acc = 0.0;
                           for (std::size_t c = 0; c < k; ++c) acc += n.grad[c] * wrow[c];
                           x.grad[i] += acc;
                         }
                         if (wt.requires_grad) {
                           double* gw = wt.grad.data() + i * k;
                           for (std::size_t c = 0; c < k; ++c) gw[c] += x.value[i] * n.grad[c];
                         }
                       }
                     });
}

Tensor concat(const Tensor& a, const Tensor& b) {
  const auto rank = a.shape().rank();
  if (b.shape().rank() != rank) {
    throw DimensionError("concat: rank mismatch " + a.shape().str() + " vs " + b.shape().str());
  }
  for (std::size_t axis = 0; axis + 1 < rank; ++axis) {
    if (a.shape()[axis] != b.shape()[axis]) {
      throw DimensionError("concat: axis " + std::to_string(axis) + " differs (" + a.shape().str() +
                           " vs " + b.shape().str() + ")");
    }
  }
  const auto wa = a.shape()[rank - 1];
  const auto wb = b.shape()[rank - 1];
  const auto rows = a.numel() / wa;
  auto dims = a.shape().dims();
  dims.back() = wa + wb;
  std::vector<double> out;
  out.reserve(rows * (wa + wb));
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t r = 0; r < rows; ++r) {
    out.insert(out.end(), av.begin() + r * wa, av.begin() + (r + 1) * wa);
    out.insert(out.end(), bv.begin() + r * wb, bv.begin() + (r + 1) * wb);
  }
  return make_result("concat", Shape(std::move(dims)), std::move(out), {a, b},
                     [rows, wa, wb](detail::Node& n) {
                       auto& x = input(n, 0);
                       auto& y = input(n, 1);
                       for (std::size_t r = 0; r < rows; ++r) {
                         const double* g = n.grad.data() + r * (wa + wb);
                         if (x.requires_grad)
                           for (std::size_t c = 0; c < wa; ++c) x.grad[r * wa + c] += g[c];
                         if (y.requires_grad)
                           for (std::size_t c = 0; c < wb; ++c) y.grad[r * wb + c] += g[wa + c];
                       }
                     });
}

Tensor resize_spatial(const Tensor& in, std::size_t height, std::size_t width) {
  require_rank("resize_spatial", in, 3, "input");
  if (height == 0 || width == 0) throw DimensionError("resize_spatial: target size must be positive");
  const auto h = in.shape()[0];
  const auto w = in.shape()[1];
  const auto c = in.shape()[2];
  auto check = [](std::size_t from, std::size_t to, std::string_view axis) {
    const bool ok = to <= from ? from % to == 0 : to % from == 0;
    if (!ok) {
      throw DimensionError("resize_spatial: axis " + std::string(axis) + " cannot map " +
                           std::to_string(from) + " to " + std::to_string(to) +
                           " by an integral factor");
    }
  };
  check(h, height, "0 (height)");
  check(w, width, "1 (width)");

  if (h == height && w == width) return reshape(in, in.shape());

  std::vector<double> out(height * width * c, 0.0);
  const auto xv = in.values();
  for (std::size_t oy = 0; oy < height; ++oy) {
    const auto ry = window(oy, h, height);
    for (std::size_t ox = 0; ox < width; ++ox) {
      const auto rx = window(ox, w, width);
      const double inv = 1.0 / static_cast<double>(ry.count * rx.count);
      double* o = out.data() + (oy * width + ox) * c;
      for (std::size_t y = ry.start; y < ry.start + ry.count; ++y)
        for (std::size_t x = rx.start; x < rx.start + rx.count; ++x)
          for (std::size_t k = 0; k < c; ++k) o[k] += xv[(y * w + x) * c + k];
      for (std::size_t k = 0; k < c; ++k) o[k] *= inv;
    }
  }
  return make_result("resize_spatial", Shape{height, width, c}, std::move(out), {in},
                     [h, w, c, height, width](detail::Node& n) {
                       auto& x = input(n, 0);
                       for (std::size_t oy = 0; oy < height; ++oy) {
                         const auto ry = window(oy, h, height);
                         for (std::size_t ox = 0; ox < width; ++ox) {
                           const auto rx = window(ox, w, width);
                           const double inv = 1.0 / static_cast<double>(ry.count * rx.count);
                           const double* g = n.grad.data() + (oy * width + ox) * c;
                           for (std::size_t y = ry.start; y < ry.start + ry.count; ++y)
                             for (std::size_t xx = rx.start; xx < rx.start + rx.count; ++xx)
                               for (std::size_t k = 0; k < c; ++k)
                                 x.grad[(y * w + xx) * c + k] += g[k] * inv;
                         }
                       }
                     });
}

}  // namespace ammfm::ops
