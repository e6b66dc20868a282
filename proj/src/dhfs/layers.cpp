#include "mvref/dhfs/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mvref/parallel.hpp"

namespace mvref::dhfs {
namespace {

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }
int ceil_div(int a, int b) { return -floor_div(-a, b); }

}  // namespace

ConvParams ConvParams::zeros(int in, int out, int kernel, int stride, int padding) {
  MVREF_REQUIRE(in >= 1 && out >= 1 && kernel >= 1 && stride >= 1, "invalid convolution geometry");
  ConvParams p;
  p.in_channels = in;
  p.out_channels = out;
  p.kernel = kernel;
  p.stride = stride;
  p.padding = padding < 0 ? kernel / 2 : padding;
  p.weight.assign(static_cast<std::size_t>(out) * in * kernel * kernel, 0.0);
  p.bias.assign(out, 0.0);
  return p;
}

Tensor conv2d(const Tensor& x, const ConvParams& p) {
  if (x.channels() != p.in_channels) {
    throw InvalidArgument("conv2d: input has " + std::to_string(x.channels()) +
                          " channels, layer expects " + std::to_string(p.in_channels));
  }
  MVREF_REQUIRE(p.weight.size() == static_cast<std::size_t>(p.out_channels) * p.in_channels *
                                       p.kernel * p.kernel &&
                    p.bias.size() == static_cast<std::size_t>(p.out_channels),
                "conv2d: parameter arrays do not match the declared shape");
  const int k = p.kernel;
  const int s = p.stride;
  const int pad = p.padding;
  MVREF_REQUIRE(x.height() + 2 * pad >= k && x.width() + 2 * pad >= k,
                "conv2d: input smaller than the kernel");
  const int out_h = (x.height() + 2 * pad - k) / s + 1;
  const int out_w = (x.width() + 2 * pad - k) / s + 1;
  Tensor out(p.out_channels, out_h, out_w);

  parallel_for(p.out_channels, [&](int o) {
    auto dst = out.plane(o);
    std::fill(dst.begin(), dst.end(), p.bias[o]);
    for (int i = 0; i < p.in_channels; ++i) {
      const auto src = x.plane(i);
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const double wv = p.w(o, i, ky, kx);
          if (wv == 0.0) continue;
          // Output columns whose input column ox*s - pad + kx lies inside the image.
          const int ox_lo = std::max(0, ceil_div(pad - kx, s));
          const int ox_hi = std::min(out_w, floor_div(x.width() - 1 + pad - kx, s) + 1);
          for (int oy = 0; oy < out_h; ++oy) {
            const int iy = oy * s - pad + ky;
            if (iy < 0 || iy >= x.height()) continue;
            double* drow = dst.data() + static_cast<std::size_t>(oy) * out_w;
            const double* srow = src.data() + static_cast<std::size_t>(iy) * x.width();
            if (s == 1) {
              const int shift = kx - pad;
              for (int ox = ox_lo; ox < ox_hi; ++ox) drow[ox] += wv * srow[ox + shift];
            } else {
              for (int ox = ox_lo; ox < ox_hi; ++ox) drow[ox] += wv * srow[ox * s - pad + kx];
            }
          }
        }
      }
    }
  });
  return out;
}

Tensor relu(Tensor x) {
  for (double& v : x.data()) v = std::max(v, 0.0);
  return x;
}

Tensor leaky_relu(Tensor x, double slope) {
  for (double& v : x.data()) v = v >= 0.0 ? v : slope * v;
  return x;
}

Tensor add(const Tensor& a, const Tensor& b) {
  MVREF_REQUIRE(a.same_shape(b), "add: shape mismatch");
  Tensor out = a;
  auto d = out.data();
  const auto s = b.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
  return out;
}

Tensor concat(std::initializer_list<const Tensor*> parts) {
  MVREF_REQUIRE(parts.size() > 0, "concat: no inputs");
  const Tensor& first = **parts.begin();
  int channels = 0;
  for (const Tensor* t : parts) {
    if (!t->same_spatial(first)) {
      throw InvalidArgument("concat: spatial mismatch " + std::to_string(t->height()) + "x" +
                            std::to_string(t->width()) + " vs " + std::to_string(first.height()) +
                            "x" + std::to_string(first.width()));
    }
    channels += t->channels();
  }
  Tensor out(channels, first.height(), first.width());
  auto dst = out.data().begin();
  for (const Tensor* t : parts) dst = std::copy(t->data().begin(), t->data().end(), dst);
  return out;
}

Tensor pixel_shuffle(const Tensor& x, int r) {
  MVREF_REQUIRE(r >= 1, "pixel_shuffle: factor must be positive");
  MVREF_REQUIRE(x.channels() % (r * r) == 0, "pixel_shuffle: channels not divisible by r^2");
  const int c_out = x.channels() / (r * r);
  Tensor out(c_out, x.height() * r, x.width() * r);
  for (int c = 0; c < c_out; ++c)
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j)
        for (int y = 0; y < x.height(); ++y)
          for (int xx = 0; xx < x.width(); ++xx)
            out(c, y * r + i, xx * r + j) = x(c * r * r + i * r + j, y, xx);
  return out;
}

Tensor pixel_unshuffle(const Tensor& x, int r) {
  MVREF_REQUIRE(r >= 1, "pixel_unshuffle: factor must be positive");
  MVREF_REQUIRE(x.height() % r == 0 && x.width() % r == 0,
                "pixel_unshuffle: spatial size not divisible by r");
  const int h = x.height() / r;
  const int w = x.width() / r;
  Tensor out(x.channels() * r * r, h, w);
  for (int c = 0; c < x.channels(); ++c)
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j)
        for (int y = 0; y < h; ++y)
          for (int xx = 0; xx < w; ++xx) out(c * r * r + i * r + j, y, xx) = x(c, y * r + i, xx * r + j);
  return out;
}

ResidualLayerParams ResidualLayerParams::zeros(int channels, int reduction) {
  const int squeezed = std::max(1, channels / reduction);
  return {ConvParams::zeros(channels, channels, 3), ConvParams::zeros(channels, channels, 3),
          {ConvParams::zeros(channels, squeezed, 1), ConvParams::zeros(squeezed, channels, 1)}};
}

std::vector<double> channel_attention_gate(const Tensor& x, const ChannelAttentionParams& p) {
  MVREF_REQUIRE(p.down.in_channels == x.channels() && p.up.out_channels == x.channels() &&
                    p.down.out_channels == p.up.in_channels && p.down.kernel == 1 && p.up.kernel == 1,
                "channel attention: parameter shapes do not match the input");
  std::vector<double> pooled(x.channels());
  for (int c = 0; c < x.channels(); ++c) {
    double sum = 0.0;
    for (double v : x.plane(c)) sum += v;
    pooled[c] = sum / static_cast<double>(x.plane_size());
  }
  std::vector<double> hidden(p.down.out_channels);
  for (int o = 0; o < p.down.out_channels; ++o) {
    double acc = p.down.bias[o];
    for (int c = 0; c < x.channels(); ++c) acc += p.down.w(o, c, 0, 0) * pooled[c];
    hidden[o] = std::max(acc, 0.0);
  }
  std::vector<double> gate(x.channels());
  for (int c = 0; c < x.channels(); ++c) {
    double acc = p.up.bias[c];
    for (int h = 0; h < p.up.in_channels; ++h) acc += p.up.w(c, h, 0, 0) * hidden[h];
    gate[c] = 1.0 / (1.0 + std::exp(-acc));
  }
  return gate;
}

Tensor residual_layer_ca(const Tensor& x, const ResidualLayerParams& p) {
  Tensor r = conv2d(relu(conv2d(x, p.conv1)), p.conv2);
  const std::vector<double> gate = channel_attention_gate(r, p.attention);
  Tensor out = x;
  for (int c = 0; c < x.channels(); ++c) {
    auto dst = out.plane(c);
    const auto src = r.plane(c);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += gate[c] * src[i];
  }
  return out;
}

Tensor residual_block(Tensor x, std::span<const ResidualLayerParams> layers) {
  for (const auto& layer : layers) x = residual_layer_ca(x, layer);
  return x;
}

SelectionMaps softmax_pair(const Tensor& logits) {
  MVREF_REQUIRE(logits.channels() == 2, "selection logits must have two channels");
  SelectionMaps maps{Tensor(1, logits.height(), logits.width()),
                     Tensor(1, logits.height(), logits.width())};
  const auto lm = logits.plane(0);
  const auto ln = logits.plane(1);
  auto am = maps.a_m.plane(0);
  auto an = maps.a_n.plane(0);
  for (std::size_t i = 0; i < lm.size(); ++i) {
    const double top = std::max(lm[i], ln[i]);
    const double em = std::exp(lm[i] - top);
    const double en = std::exp(ln[i] - top);
    am[i] = em / (em + en);
    an[i] = en / (em + en);
  }
  return maps;
}

namespace {

Tensor blend(const SelectionMaps& maps, const Tensor& f_m, const Tensor& f_n) {
  Tensor out(f_m.channels(), f_m.height(), f_m.width());
  const auto am = maps.a_m.plane(0);
  const auto an = maps.a_n.plane(0);
  for (int c = 0; c < f_m.channels(); ++c) {
    auto dst = out.plane(c);
    const auto m = f_m.plane(c);
    const auto n = f_n.plane(c);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = am[i] * m[i] + an[i] * n[i];
  }
  return out;
}

void require_spatial(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_spatial(b)) throw InvalidArgument(std::string(what) + ": feature maps differ in spatial size");
}

}  // namespace

RsmOutput rsm_forward(const Tensor& f_t, const Tensor& f_m_ref, const Tensor& f_n_ref,
                      const RsmParams& p) {
  require_spatial(f_t, f_m_ref, "rsm");
  require_spatial(f_t, f_n_ref, "rsm");
  const Tensor f_tm = add(f_t, conv2d(concat({&f_t, &f_m_ref}), *p.residue_m));
  const Tensor f_tn = add(f_t, conv2d(concat({&f_t, &f_n_ref}), *p.residue_n));
  const Tensor hidden =
      leaky_relu(conv2d(concat({&f_tm, &f_tn, &f_t}), *p.select_hidden), p.leaky_slope);
  RsmOutput out;
  out.maps = softmax_pair(conv2d(hidden, *p.select_logits));
  out.features = residual_block(blend(out.maps, f_tm, f_tn), *p.body);
  return out;
}

RsmOutput asm_forward(const Tensor& f_m_ref, const Tensor& f_n_ref, const Tensor& f_t_rsm,
                      const AsmParams& p) {
  require_spatial(f_t_rsm, f_m_ref, "asm");
  require_spatial(f_t_rsm, f_n_ref, "asm");
  auto adapt = [&](const Tensor& ref, const ConvParams& in, const ConvParams& out_conv,
                   const std::vector<ResidualLayerParams>& body) {
    const Tensor residue = conv2d(concat({&ref, &f_t_rsm}), in);
    return residual_block(conv2d(add(ref, residue), out_conv), body);
  };
  const Tensor f_m_a = adapt(f_m_ref, *p.adapt_in_m, *p.adapt_out_m, *p.adapt_body_m);
  const Tensor f_n_a = adapt(f_n_ref, *p.adapt_in_n, *p.adapt_out_n, *p.adapt_body_n);
  return rsm_forward(f_t_rsm, f_m_a, f_n_a, p.inner);
}

}  // namespace mvref::dhfs
