#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "interir/ep_block.hpp"
#include "interir/image_io.hpp"

namespace interir {

inline constexpr std::size_t kDownsample = 4;
inline constexpr int kDefaultBlocks = 16;
inline constexpr double kDefaultWKappa = 0.1;

/// Two channel-preserving 3x3 convs, each followed by ReLU.
struct ConvsParams {
  ConvParams first;
  ConvParams second;
};

struct ResmParams {
  EPBlockParams ep_in;    // EP(I)
  EPBlockParams ep_f;     // outer EP of the F regularizer term
  EPBlockParams ep_mask;  // EP(1 - Convs(...))
  EPBlockParams ep_hf;    // EP(F)
  ConvsParams convs;
  double w_kappa = kDefaultWKappa;
};

struct DmumParams {
  EPBlockParams ep_a;  // 2C channels
  EPBlockParams ep_b;  // 2C channels
};

struct MumParams {
  EPBlockParams ep;
  ConvsParams convs;
};

struct IPBlockParams {
  ResmParams resm;
  DmumParams dmum;
  MumParams mum;
};

struct UnfoldedModel {
  std::size_t channels = 48;
  EPBlockParams init_block;
  std::vector<IPBlockParams> ipblocks;
  ResmParams final_resm;
  ConvParams out_proj;  // 1x1, channels -> channels
  double eta = 0.01;

  std::size_t n() const noexcept { return ipblocks.size(); }
};

/// Which mask term the RESM uses in H:
///   kImageGate:    EP_mask(1 - Convs(L + EP_in(I))) .* EP_hf(F)
///   kResidualGate: EP_mask((1 - Convs(L + EP_hf(F))) .* EP_hf(F))
enum class MaskVariant { kImageGate, kResidualGate };

struct ForwardOptions {
  MaskVariant mask_variant = MaskVariant::kImageGate;
};

/// Iterates of the unrolled solver, all [C, Hd, Wd] except A [C,Hd,Hd] and
/// B [C,Wd,Wd].
struct UnfoldedState {
  Tensor image;
  Tensor a;
  Tensor b;
  Tensor lambda;
};

struct Padding {
  std::size_t bottom = 0;
  std::size_t right = 0;
};

struct UnfoldedInit {
  UnfoldedState state;
  Tensor d_feat;
  Padding pad;
  bool identity_guard = false;
};

/// Reflect-pads bottom/right to a multiple of `multiple`. x is [B,C,H,W].
Tensor reflect_pad(const Tensor& x, Padding pad);
Padding padding_for(std::size_t height, std::size_t width, std::size_t multiple);
Tensor crop(const Tensor& x, std::size_t height, std::size_t width);

Tensor convs(const Tensor& x, const ConvsParams& p);

/// Per-channel M / |M|_F; zero-norm channels become identity.
Tensor normalize_channels(const Tensor& m, bool* guard_used = nullptr);

UnfoldedInit init_unfolded(const Image& degraded, const UnfoldedModel& model);

Tensor resm(const UnfoldedState& s, const Tensor& d_feat, const ResmParams& p, double eta,
            MaskVariant variant = MaskVariant::kImageGate);

struct FactorPair {
  Tensor a;
  Tensor b;
};
FactorPair dmum(const Tensor& image, const Tensor& b_prev, const Tensor& d_feat,
                const DmumParams& p);

Tensor mum(const Tensor& lambda_prev, const Tensor& image, const MumParams& p);

Image forward(const UnfoldedModel& model, const Image& degraded, const ForwardOptions& options = {});

/// Kaiming-initialized model; residual scales 0, W_kappa 0.1, tau 0, eta 0.01.
UnfoldedModel seed_model(int n, std::size_t channels, std::uint64_t seed);
/// Model with every parameter zero except eta.
UnfoldedModel zero_model(int n, std::size_t channels);

/// Calls visit(name, Tensor&) or visit(name, double&) for every parameter.
template <class Model, class Visitor>
void visit_model(Model& m, Visitor&& visit);

std::size_t parameter_count(const UnfoldedModel& model);

void save_weights(const UnfoldedModel& model, const std::filesystem::path& path);
UnfoldedModel load_weights(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_weights(const UnfoldedModel& model);
UnfoldedModel decode_weights(std::span<const std::uint8_t> bytes);

/// Exact equality of every parameter, bit for bit.
bool bitwise_equal(const UnfoldedModel& a, const UnfoldedModel& b);

// ---------------------------------------------------------------------------

template <class Params, class Visitor>
void visit_convs(Params& p, const std::string& prefix, Visitor&& visit) {
  visit_conv(p.first, prefix + ".conv1", visit);
  visit_conv(p.second, prefix + ".conv2", visit);
}

template <class Params, class Visitor>
void visit_resm(Params& p, const std::string& prefix, Visitor&& visit) {
  visit_ep_block(p.ep_in, prefix + ".ep_in", visit);
  visit_ep_block(p.ep_f, prefix + ".ep_f", visit);
  visit_ep_block(p.ep_mask, prefix + ".ep_mask", visit);
  visit_ep_block(p.ep_hf, prefix + ".ep_hf", visit);
  visit_convs(p.convs, prefix + ".convs", visit);
  visit(prefix + ".w_kappa", p.w_kappa);
}

template <class Model, class Visitor>
void visit_model(Model& m, Visitor&& visit) {
  visit_ep_block(m.init_block, "init", visit);
  for (std::size_t i = 0; i < m.ipblocks.size(); ++i) {
    auto& blk = m.ipblocks[i];
    const std::string prefix = "ipblock." + std::to_string(i);
    visit_resm(blk.resm, prefix + ".resm", visit);
    visit_ep_block(blk.dmum.ep_a, prefix + ".dmum.ep_a", visit);
    visit_ep_block(blk.dmum.ep_b, prefix + ".dmum.ep_b", visit);
    visit_ep_block(blk.mum.ep, prefix + ".mum.ep", visit);
    visit_convs(blk.mum.convs, prefix + ".mum.convs", visit);
  }
  visit_resm(m.final_resm, "final_resm", visit);
  visit_conv(m.out_proj, "out_proj", visit);
  visit("eta", m.eta);
}

}  // namespace interir
