#pragma once

// Forward-pass runtime for the convolutional autoencoder: six stride-2
// convolutions down to a 4x4 bottleneck (at 256 px) and six stride-2
// transposed convolutions back to full resolution.
//
// Weight file, little-endian, no padding:
//   "CAEW" | u32 version = 1 | f32 leaky slope | u32 layer count
//   per layer: u8 kind (0 conv, 1 transposed) | u32 in | u32 out | u32 kernel
//              | u32 stride | u32 padding | u32 output_padding
//              | u8 activation (0 leaky_relu, 1 relu)
//              | f32 weight[out][in][kh][kw] | f32 bias[out]

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "relaynet/common.hpp"
#include "relaynet/image.hpp"

namespace relaynet::cnn {

enum class LayerKind : std::uint8_t { conv = 0, transposed_conv = 1 };
enum class Activation : std::uint8_t { leaky_relu = 0, relu = 1 };

struct LayerSpec {
  LayerKind kind = LayerKind::conv;
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 0;
  int stride = 2;
  int padding = 0;
  int output_padding = 0;
  Activation activation = Activation::leaky_relu;

  std::size_t weight_count() const {
    return static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel;
  }

  int output_size(int input) const {
    if (kind == LayerKind::conv) return (input + 2 * padding - kernel) / stride + 1;
    return (input - 1) * stride - 2 * padding + kernel + output_padding;
  }

  bool operator==(const LayerSpec&) const = default;
};

struct Layer {
  LayerSpec spec;
  std::vector<float> weight;  // [out][in][kh][kw]
  std::vector<float> bias;    // [out]
};

inline constexpr float kDefaultLeakySlope = 0.01f;
inline constexpr int kFeatureChannels = 128;

struct ModelWeights {
  float leaky_slope = kDefaultLeakySlope;
  std::vector<Layer> layers;
};

/// The 12-layer layout: conv k8 x2, conv k4 x4 (LeakyReLU), transposed k4 x4,
/// transposed k8 x2 (ReLU). Grayscale in and out; 128 channels elsewhere.
inline std::vector<LayerSpec> autoencoder_architecture(int features = kFeatureChannels) {
  std::vector<LayerSpec> specs;
  auto add = [&](LayerKind kind, int kernel, Activation act) {
    LayerSpec s;
    s.kind = kind;
    s.kernel = kernel;
    s.stride = 2;
    s.padding = kernel == 8 ? 3 : 1;
    s.output_padding = 0;
    s.activation = act;
    s.in_channels = features;
    s.out_channels = features;
    specs.push_back(s);
  };
  for (int i = 0; i < 2; ++i) add(LayerKind::conv, 8, Activation::leaky_relu);
  for (int i = 0; i < 4; ++i) add(LayerKind::conv, 4, Activation::leaky_relu);
  for (int i = 0; i < 4; ++i) add(LayerKind::transposed_conv, 4, Activation::relu);
  for (int i = 0; i < 2; ++i) add(LayerKind::transposed_conv, 8, Activation::relu);
  specs.front().in_channels = 1;
  specs.back().out_channels = 1;
  return specs;
}

inline ModelWeights zero_weights(int features = kFeatureChannels) {
  ModelWeights w;
  for (const auto& spec : autoencoder_architecture(features))
    w.layers.push_back({spec, std::vector<float>(spec.weight_count(), 0.0f),
                        std::vector<float>(static_cast<std::size_t>(spec.out_channels), 0.0f)});
  return w;
}

/// He-normal initialization scaled by fan-in (in * k * k, divided by
/// stride^2 for transposed layers); zero biases.
inline ModelWeights random_weights(std::uint64_t seed, int features = kFeatureChannels) {
  std::mt19937_64 rng(seed);
  ModelWeights w = zero_weights(features);
  for (auto& layer : w.layers) {
    const auto& s = layer.spec;
    double fan_in = static_cast<double>(s.in_channels) * s.kernel * s.kernel;
    if (s.kind == LayerKind::transposed_conv) fan_in /= static_cast<double>(s.stride * s.stride);
    std::normal_distribution<float> dist(0.0f, static_cast<float>(std::sqrt(2.0 / fan_in)));
    for (auto& v : layer.weight) v = dist(rng);
  }
  return w;
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

class ByteWriter {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  void need(std::size_t n, const char* what) const {
    if (data_.size() - pos_ < n) throw TruncationError(std::string("weight file truncated while reading ") + what);
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return data_[pos_++];
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  void floats(std::vector<float>& out, std::size_t count, const char* what) {
    need(count * 4, what);
    out.resize(count);
    for (auto& v : out) v = f32(what);
  }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline constexpr std::array<std::uint8_t, 4> kWeightMagic = {'C', 'A', 'E', 'W'};
inline constexpr std::uint32_t kWeightVersion = 1;

inline std::vector<std::uint8_t> serialize_weights(const ModelWeights& w) {
  detail::ByteWriter out;
  out.bytes(kWeightMagic.data(), kWeightMagic.size());
  out.u32(kWeightVersion);
  out.f32(w.leaky_slope);
  out.u32(static_cast<std::uint32_t>(w.layers.size()));
  for (const auto& layer : w.layers) {
    const auto& s = layer.spec;
    out.u8(static_cast<std::uint8_t>(s.kind));
    out.u32(static_cast<std::uint32_t>(s.in_channels));
    out.u32(static_cast<std::uint32_t>(s.out_channels));
    out.u32(static_cast<std::uint32_t>(s.kernel));
    out.u32(static_cast<std::uint32_t>(s.stride));
    out.u32(static_cast<std::uint32_t>(s.padding));
    out.u32(static_cast<std::uint32_t>(s.output_padding));
    out.u8(static_cast<std::uint8_t>(s.activation));
    for (float v : layer.weight) out.f32(v);
    for (float v : layer.bias) out.f32(v);
  }
  return out.take();
}

/// Parses and validates a weight file against the 12-layer architecture.
/// `features` only exists so tests can exercise narrow models.
inline ModelWeights load_weights(std::span<const std::uint8_t> bytes, int features = kFeatureChannels) {
  detail::ByteReader in(bytes);
  in.need(4, "magic");
  std::array<std::uint8_t, 4> magic{};
  for (auto& b : magic) b = in.u8("magic");
  if (magic != kWeightMagic) throw FormatError("bad weight-file magic");
  const std::uint32_t version = in.u32("version");
  if (version != kWeightVersion) throw FormatError("unsupported weight-file version " + std::to_string(version));

  ModelWeights w;
  w.leaky_slope = in.f32("leaky slope");
  if (!std::isfinite(w.leaky_slope)) throw FormatError("leaky slope is not finite");
  const std::uint32_t count = in.u32("layer count");
  const auto expected = autoencoder_architecture(features);
  if (count != expected.size())
    throw ArchitectureMismatch("expected " + std::to_string(expected.size()) + " layers, file has " +
                               std::to_string(count));
  for (std::uint32_t i = 0; i < count; ++i) {
    Layer layer;
    auto& s = layer.spec;
    const std::uint8_t kind = in.u8("layer kind");
    s.in_channels = static_cast<int>(in.u32("in_channels"));
    s.out_channels = static_cast<int>(in.u32("out_channels"));
    s.kernel = static_cast<int>(in.u32("kernel"));
    s.stride = static_cast<int>(in.u32("stride"));
    s.padding = static_cast<int>(in.u32("padding"));
    s.output_padding = static_cast<int>(in.u32("output_padding"));
    const std::uint8_t act = in.u8("activation");
    if (kind > 1 || act > 1)
      throw ArchitectureMismatch("layer " + std::to_string(i) + " has an unknown kind or activation code");
    s.kind = static_cast<LayerKind>(kind);
    s.activation = static_cast<Activation>(act);
    if (!(s == expected[i])) throw ArchitectureMismatch("layer " + std::to_string(i) + " does not match the architecture");
    in.floats(layer.weight, s.weight_count(), "weights");
    in.floats(layer.bias, static_cast<std::size_t>(s.out_channels), "bias");
    w.layers.push_back(std::move(layer));
  }
  if (in.remaining() != 0) throw FormatError("trailing bytes after the last layer");
  return w;
}

inline ModelWeights load_weights_file(const std::filesystem::path& path, int features = kFeatureChannels) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error("cannot open weight file " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  return load_weights(bytes, features);
}

inline void save_weights_file(const std::filesystem::path& path, const ModelWeights& w) {
  const auto bytes = serialize_weights(w);
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error("cannot open " + path.string() + " for writing");
  file.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

// ---------------------------------------------------------------------------
// Layer primitives (CHW float tensors)

struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  Tensor() = default;
  Tensor(int c, int h, int w) : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, 0.0f) {}

  float& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  float at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
};

namespace detail {
using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
}

/// Strided 2-D convolution via im2col and one GEMM.
inline Tensor conv2d(const Tensor& input, const LayerSpec& spec, std::span<const float> weight,
                     std::span<const float> bias) {
  const int k = spec.kernel;
  const int oh = spec.output_size(input.height);
  const int ow = spec.output_size(input.width);
  if (oh <= 0 || ow <= 0) throw IncompatibleResolution("input too small for convolution");
  const Eigen::Index patch = static_cast<Eigen::Index>(input.channels) * k * k;
  const Eigen::Index positions = static_cast<Eigen::Index>(oh) * ow;

  detail::RowMatrix cols = detail::RowMatrix::Zero(patch, positions);
  for (int c = 0; c < input.channels; ++c)
    for (int kh = 0; kh < k; ++kh)
      for (int kw = 0; kw < k; ++kw) {
        float* row = cols.data() + ((static_cast<Eigen::Index>(c) * k + kh) * k + kw) * positions;
        for (int y = 0; y < oh; ++y) {
          const int iy = y * spec.stride - spec.padding + kh;
          if (iy < 0 || iy >= input.height) continue;
          const float* src = &input.data[(static_cast<std::size_t>(c) * input.height + iy) * input.width];
          for (int x = 0; x < ow; ++x) {
            const int ix = x * spec.stride - spec.padding + kw;
            if (ix >= 0 && ix < input.width) row[static_cast<Eigen::Index>(y) * ow + x] = src[ix];
          }
        }
      }

  Tensor out(spec.out_channels, oh, ow);
  Eigen::Map<const detail::RowMatrix> w(weight.data(), spec.out_channels, patch);
  Eigen::Map<detail::RowMatrix> result(out.data.data(), spec.out_channels, positions);
  result.noalias() = w * cols;
  for (int o = 0; o < spec.out_channels; ++o) result.row(o).array() += bias[static_cast<std::size_t>(o)];
  return out;
}

/// Strided transposed convolution: one GEMM into column space, then col2im.
inline Tensor conv_transpose2d(const Tensor& input, const LayerSpec& spec, std::span<const float> weight,
                               std::span<const float> bias) {
  const int k = spec.kernel;
  const int oh = spec.output_size(input.height);
  const int ow = spec.output_size(input.width);
  const Eigen::Index kk = static_cast<Eigen::Index>(k) * k;
  const Eigen::Index positions = static_cast<Eigen::Index>(input.height) * input.width;

  // Reorder [out][in][kh][kw] into rows (out, kh, kw) x columns (in).
  detail::RowMatrix wt(spec.out_channels * kk, input.channels);
  for (int o = 0; o < spec.out_channels; ++o)
    for (int i = 0; i < input.channels; ++i)
      for (Eigen::Index t = 0; t < kk; ++t)
        wt(o * kk + t, i) = weight[(static_cast<std::size_t>(o) * input.channels + i) * kk + t];
  Eigen::Map<const detail::RowMatrix> x(input.data.data(), input.channels, positions);
  const detail::RowMatrix cols = wt * x;

  Tensor out(spec.out_channels, oh, ow);
  for (int o = 0; o < spec.out_channels; ++o) {
    float* plane = &out.data[static_cast<std::size_t>(o) * oh * ow];
    std::fill(plane, plane + static_cast<std::size_t>(oh) * ow, bias[static_cast<std::size_t>(o)]);
    for (int kh = 0; kh < k; ++kh)
      for (int kw = 0; kw < k; ++kw) {
        const float* row = cols.data() + (o * kk + kh * k + kw) * positions;
        for (int iy = 0; iy < input.height; ++iy) {
          const int y = iy * spec.stride - spec.padding + kh;
          if (y < 0 || y >= oh) continue;
          for (int ix = 0; ix < input.width; ++ix) {
            const int xo = ix * spec.stride - spec.padding + kw;
            if (xo >= 0 && xo < ow) plane[static_cast<std::size_t>(y) * ow + xo] += row[static_cast<Eigen::Index>(iy) * input.width + ix];
          }
        }
      }
  }
  return out;
}

inline void apply_activation(Tensor& t, Activation act, float leaky_slope) {
  if (act == Activation::relu) {
    for (auto& v : t.data) v = v > 0.0f ? v : 0.0f;
  } else {
    for (auto& v : t.data) v = v > 0.0f ? v : leaky_slope * v;
  }
}

inline Tensor apply_layer(const Tensor& input, const Layer& layer, float leaky_slope) {
  if (input.channels != layer.spec.in_channels) throw ArchitectureMismatch("channel count mismatch");
  Tensor out = layer.spec.kind == LayerKind::conv ? conv2d(input, layer.spec, layer.weight, layer.bias)
                                                  : conv_transpose2d(input, layer.spec, layer.weight, layer.bias);
  apply_activation(out, layer.spec.activation, leaky_slope);
  return out;
}

/// Per-layer output shapes (channels, height, width) of the last forward call.
struct ForwardTrace {
  std::vector<std::array<int, 3>> shapes;
};

/// Raw network output at the input resolution; no output clamp.
inline IntensityImage forward(const IntensityImage& img, const ModelWeights& w, ForwardTrace* trace = nullptr) {
  const int size = img.size();
  if (!is_admissible_resolution(size) || img.values.size() != static_cast<std::size_t>(size) * size)
    throw IncompatibleResolution("resolution " + std::to_string(size) + " is not of the form (N + 4) * 64");
  Tensor t(1, size, size);
  std::copy(img.values.begin(), img.values.end(), t.data.begin());
  if (trace) trace->shapes.clear();
  for (const auto& layer : w.layers) {
    t = apply_layer(t, layer, w.leaky_slope);
    if (trace) trace->shapes.push_back({t.channels, t.height, t.width});
  }
  if (t.channels != 1 || t.height != size || t.width != size)
    throw ArchitectureMismatch("network output shape does not match the input image");
  IntensityImage out(img.grid);
  std::copy(t.data.begin(), t.data.end(), out.values.begin());
  return out;
}

}  // namespace relaynet::cnn
