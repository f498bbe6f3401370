#include "ammfm/augment.hpp"

#include <algorithm>
#include <cmath>

#include "ammfm/errors.hpp"

namespace ammfm::augment {
namespace {

struct Dims {
  std::size_t h, w, c;
};

Dims dims_of(const Tensor& image) {
  const auto& s = image.shape();
  if (s.rank() != 3) throw DimensionError("augment: expected H x W x C, got " + s.str());
  return {s[0], s[1], s[2]};
}

// Builds out(y, x) = in(src(y, x)) for an index map returning false when the
// source lies outside the image.
template <typename Map>
Tensor remap(const Tensor& image, std::size_t out_h, std::size_t out_w, Map src) {
  const auto d = dims_of(image);
  const auto in = image.values();
  std::vector<double> out(out_h * out_w * d.c, 0.0);
  for (std::size_t y = 0; y < out_h; ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      std::size_t sy = 0, sx = 0;
      if (!src(y, x, sy, sx)) continue;
      const auto* from = &in[(sy * d.w + sx) * d.c];
      std::copy(from, from + d.c, &out[(y * out_w + x) * d.c]);
    }
  }
  return Tensor(Shape{out_h, out_w, d.c}, std::move(out));
}

}  // namespace

Tensor flip_horizontal(const Tensor& image) {
  const auto d = dims_of(image);
  return remap(image, d.h, d.w, [&](std::size_t y, std::size_t x, std::size_t& sy, std::size_t& sx) {
    sy = y;
    sx = d.w - 1 - x;
    return true;
  });
}

Tensor flip_vertical(const Tensor& image) {
  const auto d = dims_of(image);
  return remap(image, d.h, d.w, [&](std::size_t y, std::size_t x, std::size_t& sy, std::size_t& sx) {
    sy = d.h - 1 - y;
    sx = x;
    return true;
  });
}

Tensor rotate90(const Tensor& image, int quarter_turns) {
  const auto d = dims_of(image);
  const int k = ((quarter_turns % 4) + 4) % 4;
  if (k == 0) return image.detach();
  if (k == 2) return flip_vertical(flip_horizontal(image));
  // Output is W x H. Counter-clockwise: out(y, x) = in(x, W - 1 - y).
  if (k == 1) {
    return remap(image, d.w, d.h, [&](std::size_t y, std::size_t x, std::size_t& sy, std::size_t& sx) {
      sy = x;
      sx = d.w - 1 - y;
      return true;
    });
  }
  return remap(image, d.w, d.h, [&](std::size_t y, std::size_t x, std::size_t& sy, std::size_t& sx) {
    sy = d.h - 1 - x;
    sx = y;
    return true;
  });
}

Tensor shift(const Tensor& image, int dy, int dx) {
  const auto d = dims_of(image);
  return remap(image, d.h, d.w, [&](std::size_t y, std::size_t x, std::size_t& sy, std::size_t& sx) {
    const auto ty = static_cast<long>(y) - dy;
    const auto tx = static_cast<long>(x) - dx;
    if (ty < 0 || tx < 0 || ty >= static_cast<long>(d.h) || tx >= static_cast<long>(d.w)) {
      return false;
    }
    sy = static_cast<std::size_t>(ty);
    sx = static_cast<std::size_t>(tx);
    return true;
  });
}

Tensor scale(const Tensor& image, double factor) {
  if (!(factor > 0.0)) throw ContractError("augment::scale: factor must be positive");
  const auto d = dims_of(image);
  const auto in = image.values();
  std::vector<double> out(in.size(), 0.0);
  const double cy = 0.5 * static_cast<double>(d.h) - 0.5;
  const double cx = 0.5 * static_cast<double>(d.w) - 0.5;
  auto at = [&](long y, long x, std::size_t ch) {
    if (y < 0 || x < 0 || y >= static_cast<long>(d.h) || x >= static_cast<long>(d.w)) return 0.0;
    return in[(static_cast<std::size_t>(y) * d.w + static_cast<std::size_t>(x)) * d.c + ch];
  };
  for (std::size_t y = 0; y < d.h; ++y) {
    const double fy = cy + (static_cast<double>(y) - cy) / factor;
    const double y0 = std::floor(fy);
    const double wy = fy - y0;
    for (std::size_t x = 0; x < d.w; ++x) {
      const double fx = cx + (static_cast<double>(x) - cx) / factor;
      const double x0 = std::floor(fx);
      const double wx = fx - x0;
      const auto iy = static_cast<long>(y0);
      const auto ix = static_cast<long>(x0);
      for (std::size_t ch = 0; ch < d.c; ++ch) {
        out[(y * d.w + x) * d.c + ch] =
            (1 - wy) * ((1 - wx) * at(iy, ix, ch) + wx * at(iy, ix + 1, ch)) +
            wy * ((1 - wx) * at(iy + 1, ix, ch) + wx * at(iy + 1, ix + 1, ch));
      }
    }
  }
  return Tensor(image.shape(), std::move(out));
}

Tensor brighten(const Tensor& image, double factor) {
  const auto in = image.values();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::clamp(in[i] * factor, 0.0, 1.0);
  return Tensor(image.shape(), std::move(out));
}

void AugmentConfig::validate() const {
  if (!(probability >= 0.0 && probability <= 1.0)) {
    throw ConfigError("augment: probability must lie in [0, 1]");
  }
  if (max_shift < 0) throw ConfigError("augment: max_shift must be >= 0");
  if (!(scale_range >= 0.0 && scale_range < 1.0)) {
    throw ConfigError("augment: scale_range must lie in [0, 1)");
  }
  if (!(brightness_range >= 0.0 && brightness_range < 1.0)) {
    throw ConfigError("augment: brightness_range must lie in [0, 1)");
  }
}

std::pair<Tensor, Tensor> augment_pair(const Tensor& clinical, const Tensor& dermoscopy,
                                       const AugmentConfig& config, Rng rng) {
  Tensor c = clinical;
  Tensor d = dermoscopy;
  auto both = [&](auto&& fn) {
    c = fn(c);
    d = fn(d);
  };
  // Draws happen whether or not a transform is enabled, so toggling one
  // augmentation does not shift the randomness of the others.
  const bool do_flip = rng.bernoulli(config.probability);
  const bool flip_axis = rng.bernoulli(0.5);
  const bool do_shift = rng.bernoulli(config.probability);
  const auto span = static_cast<std::size_t>(2 * config.max_shift + 1);
  const int dy = static_cast<int>(rng.below(span)) - config.max_shift;
  const int dx = static_cast<int>(rng.below(span)) - config.max_shift;
  const bool do_scale = rng.bernoulli(config.probability);
  const double zoom = rng.uniform(1.0 - config.scale_range, 1.0 + config.scale_range);
  const bool do_rotate = rng.bernoulli(config.probability);
  const int turns = 1 + static_cast<int>(rng.below(3));
  const bool do_brighten = rng.bernoulli(config.probability);
  const double gain = rng.uniform(1.0 - config.brightness_range, 1.0 + config.brightness_range);

  if (config.flip && do_flip) {
    both([&](const Tensor& t) { return flip_axis ? flip_horizontal(t) : flip_vertical(t); });
  }
  if (config.shift && do_shift) both([&](const Tensor& t) { return shift(t, dy, dx); });
  if (config.scale && do_scale) both([&](const Tensor& t) { return scale(t, zoom); });
  if (config.rotate && do_rotate && c.shape()[0] == c.shape()[1]) {
    both([&](const Tensor& t) { return rotate90(t, turns); });
  }
  if (config.brighten && do_brighten) both([&](const Tensor& t) { return brighten(t, gain); });
  return {c, d};
}

std::string_view to_string(TtaTransform transform) noexcept {
  switch (transform) {
    case TtaTransform::Identity: return "identity";
    case TtaTransform::FlipHorizontal: return "flip_h";
    case TtaTransform::FlipVertical: return "flip_v";
    case TtaTransform::Rotate90: return "rot90";
    case TtaTransform::Rotate180: return "rot180";
    case TtaTransform::Rotate270: return "rot270";
  }
  return "?";
}

TtaTransform parse_tta_transform(std::string_view text) {
  for (auto t : {TtaTransform::Identity, TtaTransform::FlipHorizontal, TtaTransform::FlipVertical,
                 TtaTransform::Rotate90, TtaTransform::Rotate180, TtaTransform::Rotate270}) {
    if (to_string(t) == text) return t;
  }
  throw ConfigError("unknown test-time transform '" + std::string(text) + "'");
}

Tensor apply(TtaTransform transform, const Tensor& image) {
  switch (transform) {
    case TtaTransform::Identity: return image;
    case TtaTransform::FlipHorizontal: return flip_horizontal(image);
    case TtaTransform::FlipVertical: return flip_vertical(image);
    case TtaTransform::Rotate90: return rotate90(image, 1);
    case TtaTransform::Rotate180: return rotate90(image, 2);
    case TtaTransform::Rotate270: return rotate90(image, 3);
  }
  return image;
}

std::vector<TtaTransform> default_tta() {
  return {TtaTransform::Identity, TtaTransform::FlipHorizontal, TtaTransform::FlipVertical};
}

}  // namespace ammfm::augment
