#pragma once

#include <initializer_list>
#include <memory>
#include <span>
#include <vector>

#include "mvref/dhfs/tensor.hpp"

namespace mvref::dhfs {

// Conv(in, out, kernel, stride, padding) with bias. weight is (out, in, k, k) row-major.
struct ConvParams {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;
  int padding = 1;
  std::vector<double> weight;
  std::vector<double> bias;

  static ConvParams zeros(int in, int out, int kernel, int stride = 1, int padding = -1);
  std::size_t parameter_count() const { return weight.size() + bias.size(); }
  double& w(int o, int i, int ky, int kx) {
    return weight[((static_cast<std::size_t>(o) * in_channels + i) * kernel + ky) * kernel + kx];
  }
  double w(int o, int i, int ky, int kx) const {
    return weight[((static_cast<std::size_t>(o) * in_channels + i) * kernel + ky) * kernel + kx];
  }
};

// Zero-padded cross-correlation.
Tensor conv2d(const Tensor& x, const ConvParams& p);

Tensor relu(Tensor x);
Tensor leaky_relu(Tensor x, double slope);
Tensor add(const Tensor& a, const Tensor& b);
Tensor concat(std::initializer_list<const Tensor*> parts);

// (C r^2, H, W) -> (C, rH, rW); output channel c, sub-position (i, j) reads input
// channel c r^2 + i r + j.
Tensor pixel_shuffle(const Tensor& x, int r = 2);
Tensor pixel_unshuffle(const Tensor& x, int r = 2);

// Squeeze-excitation gate: avg-pool, 1x1 down, ReLU, 1x1 up, sigmoid.
struct ChannelAttentionParams {
  ConvParams down;
  ConvParams up;
};

// conv -> ReLU -> conv -> channel attention -> + input.
struct ResidualLayerParams {
  ConvParams conv1;
  ConvParams conv2;
  ChannelAttentionParams attention;

  static ResidualLayerParams zeros(int channels, int reduction);
};

// Per-channel gate values in (0, 1) for a feature map.
std::vector<double> channel_attention_gate(const Tensor& x, const ChannelAttentionParams& p);
Tensor residual_layer_ca(const Tensor& x, const ResidualLayerParams& p);
// "RB x N": N residual layers applied in sequence.
Tensor residual_block(Tensor x, std::span<const ResidualLayerParams> layers);

struct SelectionMaps {
  Tensor a_m;  // weight of the MVR-derived path
  Tensor a_n;  // weight of the NVR-derived path
};

// Two-way softmax over the channels of a (2, H, W) logit map.
SelectionMaps softmax_pair(const Tensor& logits);

using SharedConv = std::shared_ptr<const ConvParams>;
using SharedBody = std::shared_ptr<const std::vector<ResidualLayerParams>>;

struct RsmParams {
  SharedConv residue_m;  // concat(F_T, F_M) -> C
  SharedConv residue_n;  // concat(F_T, F_N) -> C; may alias residue_m
  SharedConv select_hidden;  // concat(F_T^m, F_T^n, F_T) -> C
  SharedConv select_logits;  // C -> 2
  SharedBody body;
  double leaky_slope = 0.2;
};

struct RsmOutput {
  Tensor features;
  SelectionMaps maps;
};

// F_T^m = F_T + Conv1(F_T, F_M); F_T^n = F_T + Conv1(F_T, F_N);
// (A_M, A_N) = softmax(Conv2(F_T^m, F_T^n, F_T)); out = RB(A_M F_T^m + A_N F_T^n).
RsmOutput rsm_forward(const Tensor& f_t, const Tensor& f_m_ref, const Tensor& f_n_ref,
                      const RsmParams& p);

struct AsmParams {
  SharedConv adapt_in_m;   // concat(F_M, F_T^rsm) -> ref channels
  SharedConv adapt_in_n;
  SharedConv adapt_out_m;  // ref channels -> C
  SharedConv adapt_out_n;
  SharedBody adapt_body_m;
  SharedBody adapt_body_n;
  RsmParams inner;
};

// F_M^a = RB(Conv2(F_M + Conv1(F_M, F_T^rsm))), likewise F_N^a; then RSM(F_M^a, F_N^a, F_T^rsm).
RsmOutput asm_forward(const Tensor& f_m_ref, const Tensor& f_n_ref, const Tensor& f_t_rsm,
                      const AsmParams& p);

}  // namespace mvref::dhfs
