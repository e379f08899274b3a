#include "interir/unfolded_net.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <type_traits>

#include "interir/errors.hpp"
#include "interir/weights_io.hpp"

namespace interir {

namespace {

// [C,H,W] <-> [1,C,H,W] for the conv-based blocks.
Tensor lift(const Tensor& x) { return x.reshaped({1, x.dim(0), x.dim(1), x.dim(2)}); }
Tensor drop(const Tensor& x) { return x.reshaped({x.dim(1), x.dim(2), x.dim(3)}); }

Tensor ep(const Tensor& x, const EPBlockParams& p) { return drop(ep_block(lift(x), p)); }
Tensor convs3(const Tensor& x, const ConvsParams& p) { return drop(convs(lift(x), p)); }

std::size_t reflect_index(std::size_t i, std::size_t n) {
  if (n == 1) return 0;
  const std::size_t period = 2 * (n - 1);
  i %= period;
  return i < n ? i : period - i;
}

ConvsParams zero_convs(std::size_t c) {
  return {{Tensor({c, c, 3, 3}), Tensor({c})}, {Tensor({c, c, 3, 3}), Tensor({c})}};
}

ResmParams zero_resm(std::size_t c) {
  return {zero_ep_block(c), zero_ep_block(c), zero_ep_block(c), zero_ep_block(c),
          zero_convs(c), 0.0};
}

ConvsParams seed_convs(std::size_t c, Xoshiro256& rng) {
  ConvsParams p = zero_convs(c);
  kaiming_fill(p.first.weight, rng);
  kaiming_fill(p.second.weight, rng);
  return p;
}

ResmParams seed_resm(std::size_t c, Xoshiro256& rng) {
  ResmParams p;
  p.ep_in = seed_ep_block(c, rng);
  p.ep_f = seed_ep_block(c, rng);
  p.ep_mask = seed_ep_block(c, rng);
  p.ep_hf = seed_ep_block(c, rng);
  p.convs = seed_convs(c, rng);
  p.w_kappa = kDefaultWKappa;
  return p;
}

void check_model_shape(int n, std::size_t channels) {
  if (n < 1) throw SpecError("unfolded model needs n >= 1, got " + std::to_string(n));
  if (channels == 0 || channels % 2 != 0) {
    throw DimensionError("channel", "unfolded model needs an even channel count, got " +
                                        std::to_string(channels));
  }
}

// Reads a one-element meta tensor as a positive integer.
std::size_t meta_value(const std::map<std::string, const Tensor*>& by_name, const std::string& name,
                       const std::vector<std::string>& expected) {
  auto it = by_name.find(name);
  if (it == by_name.end()) throw MissingParameterError("weights: missing " + name, expected);
  const Tensor& t = *it->second;
  if (t.size() != 1 || !(t[0] >= 1.0) || t[0] != static_cast<double>(static_cast<std::size_t>(t[0]))) {
    throw SpecError("weights: " + name + " must be a single positive integer");
  }
  return static_cast<std::size_t>(t[0]);
}

const std::vector<std::string> kMetaNames = {"meta.n", "meta.channels"};

}  // namespace

Padding padding_for(std::size_t height, std::size_t width, std::size_t multiple) {
  return {(multiple - height % multiple) % multiple, (multiple - width % multiple) % multiple};
}

Tensor reflect_pad(const Tensor& x, Padding pad) {
  if (pad.bottom == 0 && pad.right == 0) return x;
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Tensor out({B, C, H + pad.bottom, W + pad.right});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t i = 0; i < H + pad.bottom; ++i)
        for (std::size_t j = 0; j < W + pad.right; ++j)
          out.at(b, c, i, j) = x.at(b, c, reflect_index(i, H), reflect_index(j, W));
  return out;
}

Tensor crop(const Tensor& x, std::size_t height, std::size_t width) {
  if (x.dim(2) == height && x.dim(3) == width) return x;
  Tensor out({x.dim(0), x.dim(1), height, width});
  for (std::size_t b = 0; b < x.dim(0); ++b)
    for (std::size_t c = 0; c < x.dim(1); ++c)
      for (std::size_t i = 0; i < height; ++i)
        for (std::size_t j = 0; j < width; ++j) out.at(b, c, i, j) = x.at(b, c, i, j);
  return out;
}

Tensor convs(const Tensor& x, const ConvsParams& p) {
  const ConvGeometry same{1, 1, 1};
  Tensor t = relu(conv2d(x, p.first.weight, p.first.bias, same));
  return relu(conv2d(t, p.second.weight, p.second.bias, same));
}

Tensor normalize_channels(const Tensor& m, bool* guard_used) {
  Tensor out = m;
  const auto norms = channel_frobenius(m);
  const std::size_t rows = m.dim(1), cols = m.dim(2);
  for (std::size_t c = 0; c < m.dim(0); ++c) {
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        if (norms[c] > 0.0) {
          out.at(c, i, j) /= norms[c];
        } else {
          out.at(c, i, j) = i == j ? 1.0 : 0.0;
        }
      }
    }
    if (norms[c] <= 0.0 && guard_used != nullptr) *guard_used = true;
  }
  return out;
}

UnfoldedInit init_unfolded(const Image& degraded, const UnfoldedModel& model) {
  const std::size_t feat_channels = degraded.channels() * kDownsample * kDownsample;
  if (feat_channels != model.channels) {
    throw DimensionError("channel", "model expects " + std::to_string(model.channels) +
                                        " feature channels, image gives " +
                                        std::to_string(feat_channels));
  }
  UnfoldedInit init;
  init.pad = padding_for(degraded.height(), degraded.width(), kDownsample);
  init.d_feat = drop(pixel_unshuffle(reflect_pad(degraded.pixels, init.pad), kDownsample));

  auto& s = init.state;
  s.image = init.d_feat;
  s.lambda = ep(s.image, model.init_block) + s.image;
  const Tensor image_t = channel_transpose(s.image);
  s.a = normalize_channels(channel_matmul(s.image, image_t), &init.identity_guard);
  s.b = normalize_channels(channel_matmul(image_t, s.image), &init.identity_guard);
  return init;
}

Tensor resm(const UnfoldedState& s, const Tensor& d_feat, const ResmParams& p, double eta,
            MaskVariant variant) {
  const Tensor e_in = ep(s.image, p.ep_in);
  const Tensor c = convs3(s.lambda + e_in, p.convs);

  const Tensor residual = d_feat - channel_matmul(channel_matmul(s.a, s.image), s.b);
  Tensor f = channel_matmul(channel_matmul(channel_transpose(s.a), residual),
                            channel_transpose(s.b));
  f += ep(e_in + s.lambda + p.w_kappa * c, p.ep_f);

  const Tensor ata = channel_matmul(channel_transpose(s.a), s.a);
  const Tensor bbt = channel_matmul(s.b, channel_transpose(s.b));
  Tensor h = channel_matmul(channel_matmul(ata, f), bbt);
  const Tensor e_hf = ep(f, p.ep_hf);
  if (variant == MaskVariant::kImageGate) {
    h += hadamard(ep(scalar_minus(1.0, c), p.ep_mask), e_hf);
  } else {
    const Tensor gate = scalar_minus(1.0, convs3(s.lambda + e_hf, p.convs));
    h += ep(hadamard(gate, e_hf), p.ep_mask);
  }
  return s.image - eta * h;
}

FactorPair dmum(const Tensor& image, const Tensor& b_prev, const Tensor& d_feat,
                const DmumParams& p) {
  const Tensor t = ep(concat(channel_matmul(image, b_prev), d_feat, 0), p.ep_a);
  auto [a0, a1] = split_half(t, 0);
  FactorPair out;
  out.a = normalize_channels(channel_matmul(a0, channel_transpose(a1)));
  const Tensor u = ep(concat(channel_matmul(out.a, image), d_feat, 0), p.ep_b);
  auto [b0, b1] = split_half(u, 0);
  out.b = normalize_channels(channel_matmul(channel_transpose(b0), b1));
  return out;
}

Tensor mum(const Tensor& lambda_prev, const Tensor& image, const MumParams& p) {
  const Tensor e = ep(image, p.ep);
  const Tensor sum_le = lambda_prev + e;
  return sum_le - convs3(sum_le, p.convs);
}

Image forward(const UnfoldedModel& model, const Image& degraded, const ForwardOptions& options) {
  UnfoldedInit init = init_unfolded(degraded, model);
  UnfoldedState& s = init.state;
  for (const auto& blk : model.ipblocks) {
    s.image = resm(s, init.d_feat, blk.resm, model.eta, options.mask_variant);
    FactorPair ab = dmum(s.image, s.b, init.d_feat, blk.dmum);
    s.a = std::move(ab.a);
    s.b = std::move(ab.b);
    s.lambda = mum(s.lambda, s.image, blk.mum);
  }
  s.image = resm(s, init.d_feat, model.final_resm, model.eta, options.mask_variant);

  const Tensor projected = conv2d(lift(s.image), model.out_proj.weight, model.out_proj.bias);
  const Tensor residual =
      crop(pixel_shuffle(projected, kDownsample), degraded.height(), degraded.width());
  Image out{degraded.pixels + residual};
  for (auto& v : out.pixels.data()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

UnfoldedModel zero_model(int n, std::size_t channels) {
  check_model_shape(n, channels);
  UnfoldedModel m;
  m.channels = channels;
  m.init_block = zero_ep_block(channels);
  for (int i = 0; i < n; ++i) {
    IPBlockParams blk;
    blk.resm = zero_resm(channels);
    blk.dmum = {zero_ep_block(2 * channels), zero_ep_block(2 * channels)};
    blk.mum = {zero_ep_block(channels), zero_convs(channels)};
    m.ipblocks.push_back(std::move(blk));
  }
  m.final_resm = zero_resm(channels);
  m.out_proj = {Tensor({channels, channels, 1, 1}), Tensor({channels})};
  return m;
}

UnfoldedModel seed_model(int n, std::size_t channels, std::uint64_t seed) {
  check_model_shape(n, channels);
  Xoshiro256 rng(seed);
  UnfoldedModel m;
  m.channels = channels;
  m.init_block = seed_ep_block(channels, rng);
  for (int i = 0; i < n; ++i) {
    IPBlockParams blk;
    blk.resm = seed_resm(channels, rng);
    blk.dmum.ep_a = seed_ep_block(2 * channels, rng);
    blk.dmum.ep_b = seed_ep_block(2 * channels, rng);
    blk.mum.ep = seed_ep_block(channels, rng);
    blk.mum.convs = seed_convs(channels, rng);
    m.ipblocks.push_back(std::move(blk));
  }
  m.final_resm = seed_resm(channels, rng);
  m.out_proj = {Tensor({channels, channels, 1, 1}), Tensor({channels})};
  kaiming_fill(m.out_proj.weight, rng);
  return m;
}

std::size_t parameter_count(const UnfoldedModel& model) {
  std::size_t count = 0;
  visit_model(model, [&count](const std::string&, const auto& v) {
    if constexpr (std::is_same_v<std::decay_t<decltype(v)>, Tensor>) {
      count += v.size();
    } else {
      ++count;
    }
  });
  return count;
}

std::vector<std::uint8_t> encode_weights(const UnfoldedModel& model) {
  NamedTensors tensors;
  tensors.emplace_back("meta.n", Tensor({1}, {static_cast<double>(model.n())}));
  tensors.emplace_back("meta.channels", Tensor({1}, {static_cast<double>(model.channels)}));
  visit_model(model, [&tensors](const std::string& name, const auto& v) {
    if constexpr (std::is_same_v<std::decay_t<decltype(v)>, Tensor>) {
      tensors.emplace_back(name, v);
    } else {
      tensors.emplace_back(name, Tensor({1}, {v}));
    }
  });
  return encode_tensors(tensors);
}

UnfoldedModel decode_weights(std::span<const std::uint8_t> bytes) {
  const NamedTensors tensors = decode_tensors(bytes);
  std::map<std::string, const Tensor*> by_name;
  for (const auto& [name, t] : tensors) {
    if (!by_name.emplace(name, &t).second) {
      throw SpecError("weights: duplicate tensor '" + name + "'");
    }
  }
  const std::size_t n = meta_value(by_name, "meta.n", kMetaNames);
  const std::size_t channels = meta_value(by_name, "meta.channels", kMetaNames);
  UnfoldedModel model = zero_model(static_cast<int>(n), channels);

  std::vector<std::string> expected = kMetaNames;
  visit_model(model, [&expected](const std::string& name, const auto&) { expected.push_back(name); });

  std::set<std::string> seen(kMetaNames.begin(), kMetaNames.end());
  visit_model(model, [&](const std::string& name, auto& v) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw MissingParameterError("weights: missing tensor " + name, expected);
    const Tensor& stored = *it->second;
    if constexpr (std::is_same_v<std::decay_t<decltype(v)>, Tensor>) {
      if (stored.shape() != v.shape()) {
        throw DimensionError("shape", "weights: " + name + " is " + shape_string(stored.shape()) +
                                          ", expected " + shape_string(v.shape()));
      }
      v = stored;
    } else {
      if (stored.size() != 1) {
        throw DimensionError("shape", "weights: scalar " + name + " has " +
                                          std::to_string(stored.size()) + " elements");
      }
      v = stored[0];
    }
    seen.insert(name);
  });
  for (const auto& [name, t] : tensors) {
    if (!seen.count(name)) throw MissingParameterError("weights: unexpected tensor " + name, expected);
  }
  return model;
}

void save_weights(const UnfoldedModel& model, const std::filesystem::path& path) {
  write_file(path, encode_weights(model));
}

UnfoldedModel load_weights(const std::filesystem::path& path) {
  return decode_weights(read_file(path));
}

bool bitwise_equal(const UnfoldedModel& a, const UnfoldedModel& b) {
  return a.channels == b.channels && a.n() == b.n() && encode_weights(a) == encode_weights(b);
}

}  // namespace interir
