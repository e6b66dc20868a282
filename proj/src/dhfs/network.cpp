#include "mvref/dhfs/network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <set>

#include <json.hpp>
#include <openssl/sha.h>

namespace mvref::dhfs {

using nlohmann::json;

void NetworkConfig::validate() const {
  MVREF_REQUIRE(v >= 1, "network V must be at least 1");
  MVREF_REQUIRE(base_channels >= 1, "base channel count must be positive");
  MVREF_REQUIRE(extractor_blocks >= 0 && trunk_blocks >= 0, "residual layer counts must be non-negative");
  for (int n : rem_blocks) MVREF_REQUIRE(n >= 0, "residual layer counts must be non-negative");
  MVREF_REQUIRE(attention_reduction >= 1, "attention reduction ratio must be positive");
  MVREF_REQUIRE(std::isfinite(leaky_slope), "leaky slope must be finite");
  MVREF_REQUIRE(sr_factor == 4, "the network upsamples by two PixelShuffle(2) stages; sr_factor must be 4");
}

NetworkConfig NetworkConfig::full() { return NetworkConfig{}; }

NetworkConfig NetworkConfig::toy() {
  NetworkConfig c;
  c.v = 2;
  c.base_channels = 8;
  return c;
}

std::string config_to_json(const NetworkConfig& c) {
  json j;
  j["v"] = c.v;
  j["base_channels"] = c.base_channels;
  j["extractor_blocks"] = c.extractor_blocks;
  j["trunk_blocks"] = c.trunk_blocks;
  j["rem_blocks"] = c.rem_blocks;
  j["attention_reduction"] = c.attention_reduction;
  j["leaky_slope"] = c.leaky_slope;
  j["sr_factor"] = c.sr_factor;
  j["share_branch_weights"] = c.share_branch_weights;
  return j.dump();
}

NetworkConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("network config: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("network config must be a JSON object");
  static const std::set<std::string> known{"v", "base_channels", "extractor_blocks", "trunk_blocks",
                                           "rem_blocks", "attention_reduction", "leaky_slope",
                                           "sr_factor", "share_branch_weights"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw FormatError("network config: unknown key '" + key + "'");
  }
  NetworkConfig c;
  try {
    c.v = j.value("v", c.v);
    c.base_channels = j.value("base_channels", c.base_channels);
    c.extractor_blocks = j.value("extractor_blocks", c.extractor_blocks);
    c.trunk_blocks = j.value("trunk_blocks", c.trunk_blocks);
    c.rem_blocks = j.value("rem_blocks", c.rem_blocks);
    c.attention_reduction = j.value("attention_reduction", c.attention_reduction);
    c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
    c.sr_factor = j.value("sr_factor", c.sr_factor);
    c.share_branch_weights = j.value("share_branch_weights", c.share_branch_weights);
  } catch (const json::exception& e) {
    throw FormatError(std::string("network config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

std::string row_id(int stage, int index) { return std::to_string(stage) + "-" + std::to_string(index); }

// Ids of the rows inside one REM, relative to the first residue conv.
// The 1x REM numbers its rows from 2-2 (2-0 and 2-1 are the LR input and trunk).
struct RemIds {
  int stage;
  int base;
  std::string at(int offset) const { return row_id(stage, base + offset); }
};

RemIds rem_ids(int k) { return {2 + k, k == 0 ? 2 : 0}; }

enum RemRow {
  kResidueM = 0,
  kResidueN = 2,
  kSelect = 4,
  kBody = 5,
  kAdaptInM = 6,
  kAdaptOutM = 7,
  kAdaptInN = 8,
  kAdaptOutN = 9,
  kInnerResidueM = 10,
  kInnerResidueN = 12,
  kInnerSelect = 14,
  kInnerBody = 15,
  kUpsample = 16,
};

}  // namespace

NetworkSpec::NetworkSpec(NetworkConfig config) : config_(config) {
  config_.validate();
  const int c = config_.base_channels;
  const bool share = config_.share_branch_weights;
  auto conv = [](std::string name, int in, int out, int k = 3, int s = 1, int p = 1) {
    return ConvShape{std::move(name), in, out, k, s, p};
  };
  auto row = [&](std::string id, std::vector<ConvShape> convs, int rb = 0, int rb_ch = 0,
                 std::string alias = {}) {
    layers_.push_back(LayerSpec{std::move(id), std::move(convs), rb, rb_ch, std::move(alias)});
  };

  // Feature extractor: MVR branch 1-1..1-3, NVR branch 1-5..1-7 (1-0 and 1-4 are the concats).
  const int in = config_.input_channels();
  const int eb = config_.extractor_blocks;
  for (int branch = 0; branch < 2; ++branch) {
    const int first = branch == 0 ? 1 : 5;
    auto alias = [&](int i) { return branch == 1 && share ? row_id(1, i) : std::string{}; };
    row(row_id(1, first), {conv("conv", in, c)}, eb, c, alias(1));
    row(row_id(1, first + 1), {conv("conv", c, 2 * c, 4, 2, 1)}, eb, 2 * c, alias(2));
    row(row_id(1, first + 2), {conv("conv", 2 * c, 4 * c, 4, 2, 1)}, eb, 4 * c, alias(3));
  }
  row("2-1", {conv("conv", 3, c)}, config_.trunk_blocks, c);

  for (int k = 0; k < 3; ++k) {
    const RemIds ids = rem_ids(k);
    const int ref = c << (2 - k);  // reference feature width at this scale: 4C, 2C, C
    const int nb = config_.rem_blocks[k];
    auto shared = [&](int of) { return share ? ids.at(of) : std::string{}; };
    auto selection = [&] { return std::vector<ConvShape>{conv("hidden", 3 * c, c), conv("logits", c, 2)}; };

    row(ids.at(kResidueM), {conv("conv", c + ref, c)});
    row(ids.at(kResidueN), {conv("conv", c + ref, c)}, 0, 0, shared(kResidueM));
    row(ids.at(kSelect), selection());
    row(ids.at(kBody), {}, nb, c);
    row(ids.at(kAdaptInM), {conv("conv", ref + c, ref)});
    row(ids.at(kAdaptOutM), {conv("conv", ref, c)}, nb, c);
    row(ids.at(kAdaptInN), {conv("conv", ref + c, ref)}, 0, 0, shared(kAdaptInM));
    row(ids.at(kAdaptOutN), {conv("conv", ref, c)}, nb, c, shared(kAdaptOutM));
    row(ids.at(kInnerResidueM), {conv("conv", 2 * c, c)});
    row(ids.at(kInnerResidueN), {conv("conv", 2 * c, c)}, 0, 0, shared(kInnerResidueM));
    row(ids.at(kInnerSelect), selection());
    row(ids.at(kInnerBody), {}, nb, c);
    if (k < 2) {
      row(ids.at(kUpsample), {conv("up", c, 4 * c), conv("post", c, c)});
    } else {
      row(ids.at(kUpsample), {conv("conv", c, 3)});
    }
  }
}

const LayerSpec& NetworkSpec::layer(const std::string& id) const {
  const auto it = std::find_if(layers_.begin(), layers_.end(), [&](const LayerSpec& l) { return l.id == id; });
  if (it == layers_.end()) throw InvalidArgument("no layer with id " + id);
  return *it;
}

std::size_t ParamShape::count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

namespace {

void conv_shapes(const std::string& prefix, int in, int out, int k, std::vector<ParamShape>& out_shapes) {
  using U = std::uint32_t;
  out_shapes.push_back({prefix + ".weight", {U(out), U(in), U(k), U(k)}});
  out_shapes.push_back({prefix + ".bias", {U(out)}});
}

int squeezed_channels(int channels, int reduction) { return std::max(1, channels / reduction); }

}  // namespace

std::vector<ParamShape> NetworkSpec::parameter_shapes() const {
  std::vector<ParamShape> shapes;
  for (const auto& l : layers_) {
    if (!l.alias_of.empty()) continue;
    for (const auto& cv : l.convs) conv_shapes(l.id + "." + cv.name, cv.in, cv.out, cv.kernel, shapes);
    const int ch = l.residual_channels;
    const int sq = squeezed_channels(ch, config_.attention_reduction);
    for (int i = 0; i < l.residual_layers; ++i) {
      const std::string p = l.id + ".rb." + std::to_string(i);
      conv_shapes(p + ".conv1", ch, ch, 3, shapes);
      conv_shapes(p + ".conv2", ch, ch, 3, shapes);
      conv_shapes(p + ".ca.down", ch, sq, 1, shapes);
      conv_shapes(p + ".ca.up", sq, ch, 1, shapes);
    }
  }
  std::sort(shapes.begin(), shapes.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  return shapes;
}

std::array<std::uint8_t, 32> NetworkSpec::hash() const {
  const std::string canon = config_to_json(config_);
  std::array<std::uint8_t, 32> out{};
  SHA256(reinterpret_cast<const unsigned char*>(canon.data()), canon.size(), out.data());
  return out;
}

std::uint64_t count_parameters(const NetworkSpec& spec) {
  std::uint64_t total = 0;
  for (const auto& s : spec.parameter_shapes()) total += s.count();
  return total;
}

Weights init_random(const NetworkSpec& spec, std::uint64_t seed) {
  Weights w;
  w.spec_hash = spec.hash();
  std::mt19937_64 rng(seed);
  for (const auto& shape : spec.parameter_shapes()) {
    ParamArray arr{shape.dims, std::vector<float>(shape.count(), 0.0f)};
    if (shape.dims.size() == 4) {
      const double fan_in = static_cast<double>(shape.dims[1]) * shape.dims[2] * shape.dims[3];
      double stddev = std::sqrt(2.0 / fan_in);
      if (shape.name.ends_with(".conv2.weight")) stddev *= 0.1;
      std::normal_distribution<double> normal(0.0, stddev);
      for (float& v : arr.values) v = static_cast<float>(normal(rng));
    }
    w.entries.emplace(shape.name, std::move(arr));
  }
  return w;
}

void check_weights(const NetworkSpec& spec, const Weights& w) {
  if (w.spec_hash != spec.hash()) throw InvalidArgument("weights were produced for a different network spec");
  const auto shapes = spec.parameter_shapes();
  for (const auto& s : shapes) {
    const auto it = w.entries.find(s.name);
    if (it == w.entries.end()) throw InvalidArgument("weights: missing parameter " + s.name);
    if (it->second.dims != s.dims) throw InvalidArgument("weights: shape mismatch for " + s.name);
    if (it->second.values.size() != s.count())
      throw InvalidArgument("weights: payload size mismatch for " + s.name);
  }
  if (w.entries.size() != shapes.size()) {
    std::set<std::string> expected;
    for (const auto& s : shapes) expected.insert(s.name);
    for (const auto& [name, _] : w.entries) {
      if (!expected.contains(name)) throw InvalidArgument("weights: unexpected parameter " + name);
    }
  }
}

namespace {

constexpr char kMagic[4] = {'D', 'H', 'F', 'S'};

template <typename T>
void put_le(std::ostream& os, T value) {
  static_assert(std::is_integral_v<T> || std::is_same_v<T, float>);
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  os.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& is, const char* what) {
  std::array<char, sizeof(T)> bytes;
  if (!is.read(bytes.data(), bytes.size())) throw FormatError(std::string("weights: truncated ") + what);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace

void save_weights(const Weights& w, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  os.write(kMagic, 4);
  put_le<std::uint32_t>(os, kWeightFormatVersion);
  os.write(reinterpret_cast<const char*>(w.spec_hash.data()), w.spec_hash.size());
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(w.entries.size()));
  for (const auto& [name, arr] : w.entries) {
    MVREF_REQUIRE(name.size() <= 0xFFFF, "parameter name too long: " + name);
    MVREF_REQUIRE(arr.dims.size() <= 0xFF, "parameter rank too large: " + name);
    put_le<std::uint16_t>(os, static_cast<std::uint16_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_le<std::uint8_t>(os, static_cast<std::uint8_t>(arr.dims.size()));
    for (auto d : arr.dims) put_le<std::uint32_t>(os, d);
    for (float v : arr.values) put_le<float>(os, v);
  }
  if (!os) throw FormatError("failed writing " + path.string());
}

Weights read_weights(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open weights file " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError(path.string() + " is not a DHFS weight file");
  const auto version = get_le<std::uint32_t>(is, "version");
  if (version != kWeightFormatVersion)
    throw FormatError("unsupported weight format version " + std::to_string(version));
  Weights w;
  if (!is.read(reinterpret_cast<char*>(w.spec_hash.data()), w.spec_hash.size()))
    throw FormatError("weights: truncated spec hash");
  const auto count = get_le<std::uint32_t>(is, "entry count");
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto len = get_le<std::uint16_t>(is, "name length");
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw FormatError("weights: truncated name");
    const auto rank = get_le<std::uint8_t>(is, "rank");
    ParamArray arr;
    std::size_t n = 1;
    for (int r = 0; r < rank; ++r) {
      arr.dims.push_back(get_le<std::uint32_t>(is, "dims"));
      n *= arr.dims.back();
    }
    arr.values.resize(n);
    for (auto& v : arr.values) v = get_le<float>(is, "payload");
    if (!w.entries.emplace(std::move(name), std::move(arr)).second)
      throw FormatError("weights: duplicate entry");
  }
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("weights: trailing bytes after last entry");
  return w;
}

Weights load_weights(const std::filesystem::path& path, const NetworkSpec& spec) {
  Weights w = read_weights(path);
  check_weights(spec, w);
  return w;
}

Tensor to_tensor(const ViewImage& img) {
  Tensor t(3, img.height(), img.width());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) t(c, y, x) = img.channel(x, y, c);
  return t;
}

ViewImage to_image(const Tensor& t) {
  MVREF_REQUIRE(t.channels() == 3, "image conversion needs a 3-channel tensor");
  ViewImage img(t.width(), t.height());
  for (int y = 0; y < t.height(); ++y)
    for (int x = 0; x < t.width(); ++x) img.set(x, y, Rgb{t(0, y, x), t(1, y, x), t(2, y, x)});
  return img;
}

namespace {

ConvParams conv_from(const Weights& w, const std::string& prefix, const ConvShape& shape) {
  ConvParams p = ConvParams::zeros(shape.in, shape.out, shape.kernel, shape.stride, shape.padding);
  const auto& weight = w.entries.at(prefix + ".weight").values;
  const auto& bias = w.entries.at(prefix + ".bias").values;
  std::copy(weight.begin(), weight.end(), p.weight.begin());
  std::copy(bias.begin(), bias.end(), p.bias.begin());
  return p;
}

}  // namespace

Network::Network(const NetworkSpec& spec, const Weights& weights) : spec_(spec) {
  check_weights(spec_, weights);
  const int reduction = spec_.config().attention_reduction;
  for (const auto& l : spec_.layers()) {
    if (!l.alias_of.empty()) continue;
    for (const auto& cv : l.convs) {
      const std::string key = l.id + "." + cv.name;
      convs_[key] = std::make_shared<const ConvParams>(conv_from(weights, key, cv));
    }
    auto body = std::make_shared<std::vector<ResidualLayerParams>>();
    const int ch = l.residual_channels;
    const int sq = squeezed_channels(ch, reduction);
    for (int i = 0; i < l.residual_layers; ++i) {
      const std::string p = l.id + ".rb." + std::to_string(i);
      body->push_back({conv_from(weights, p + ".conv1", {"", ch, ch, 3, 1, 1}),
                       conv_from(weights, p + ".conv2", {"", ch, ch, 3, 1, 1}),
                       {conv_from(weights, p + ".ca.down", {"", ch, sq, 1, 1, 0}),
                        conv_from(weights, p + ".ca.up", {"", sq, ch, 1, 1, 0})}});
    }
    bodies_[l.id] = std::move(body);
  }
  rebuild();
}

void Network::set_conv(const std::string& id, const std::string& conv, ConvParams params) {
  const LayerSpec& l = spec_.layer(id);
  const std::string canonical = l.alias_of.empty() ? id : l.alias_of;
  const auto it = convs_.find(canonical + "." + conv);
  if (it == convs_.end()) throw InvalidArgument("layer " + id + " has no conv named " + conv);
  if (params.in_channels != it->second->in_channels || params.out_channels != it->second->out_channels ||
      params.kernel != it->second->kernel) {
    throw InvalidArgument("replacement conv for " + id + "." + conv + " has the wrong shape");
  }
  it->second = std::make_shared<const ConvParams>(std::move(params));
  rebuild();
}

void Network::rebuild() {
  auto canonical = [&](const std::string& id) {
    const LayerSpec& l = spec_.layer(id);
    return l.alias_of.empty() ? id : l.alias_of;
  };
  auto conv = [&](const std::string& id, const std::string& name = "conv") {
    return convs_.at(canonical(id) + "." + name);
  };
  auto body = [&](const std::string& id) { return bodies_.at(canonical(id)); };

  for (int i = 0; i < 3; ++i) {
    extractor_m_[i] = {conv(row_id(1, 1 + i)), body(row_id(1, 1 + i))};
    extractor_n_[i] = {conv(row_id(1, 5 + i)), body(row_id(1, 5 + i))};
  }
  trunk_ = {conv("2-1"), body("2-1")};
  const double slope = spec_.config().leaky_slope;
  for (int k = 0; k < 3; ++k) {
    const RemIds ids = rem_ids(k);
    Rem& rem = rems_[k];
    rem.rsm = {conv(ids.at(kResidueM)),           conv(ids.at(kResidueN)),
               conv(ids.at(kSelect), "hidden"),   conv(ids.at(kSelect), "logits"),
               body(ids.at(kBody)),               slope};
    rem.asm_.adapt_in_m = conv(ids.at(kAdaptInM));
    rem.asm_.adapt_in_n = conv(ids.at(kAdaptInN));
    rem.asm_.adapt_out_m = conv(ids.at(kAdaptOutM));
    rem.asm_.adapt_out_n = conv(ids.at(kAdaptOutN));
    rem.asm_.adapt_body_m = body(ids.at(kAdaptOutM));
    rem.asm_.adapt_body_n = body(ids.at(kAdaptOutN));
    rem.asm_.inner = {conv(ids.at(kInnerResidueM)),         conv(ids.at(kInnerResidueN)),
                      conv(ids.at(kInnerSelect), "hidden"), conv(ids.at(kInnerSelect), "logits"),
                      body(ids.at(kInnerBody)),             slope};
    if (k < 2) {
      rem.up = conv(ids.at(kUpsample), "up");
      rem.post = conv(ids.at(kUpsample), "post");
    } else {
      rem.up.reset();
      rem.post = conv(ids.at(kUpsample));
    }
  }
}

std::array<Tensor, 3> Network::extract(const Tensor& x, const std::array<Stage, 3>& stages) const {
  const double slope = spec_.config().leaky_slope;
  std::array<Tensor, 3> feats;
  const Tensor* prev = &x;
  for (int i = 0; i < 3; ++i) {
    feats[i] = residual_block(leaky_relu(conv2d(*prev, *stages[i].conv), slope), *stages[i].body);
    check_finite(feats[i], "feature extractor stage " + std::to_string(i + 1));
    prev = &feats[i];
  }
  return feats;
}

namespace {

Tensor stack_references(const std::vector<ViewImage>& refs, const ViewImage& bicubic) {
  const int h = bicubic.height();
  const int w = bicubic.width();
  Tensor t(3 * static_cast<int>(refs.size()) + 3, h, w);
  int base = 0;
  auto put = [&](const ViewImage& img) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c) t(base + c, y, x) = img.channel(x, y, c);
    base += 3;
  };
  for (const auto& r : refs) put(r);
  put(bicubic);
  return t;
}

}  // namespace

ForwardResult Network::forward(const ViewImage& lr_input, const std::vector<ViewImage>& mvrs,
                               const std::vector<ViewImage>& nvrs, const ViewImage& bicubic) const {
  const NetworkConfig& cfg = spec_.config();
  const auto v = static_cast<std::size_t>(cfg.v);
  if (mvrs.size() != v || nvrs.size() != v) {
    throw InvalidArgument("network expects " + std::to_string(v) + " MVRs and NVRs, got " +
                          std::to_string(mvrs.size()) + " and " + std::to_string(nvrs.size()));
  }
  const int hr_w = cfg.sr_factor * lr_input.width();
  const int hr_h = cfg.sr_factor * lr_input.height();
  MVREF_REQUIRE(lr_input.width() >= 1 && lr_input.height() >= 1, "empty LR input");
  auto check_hr = [&](const ViewImage& img, const char* what) {
    if (img.width() != hr_w || img.height() != hr_h) {
      throw InvalidArgument(std::string(what) + " must be " + std::to_string(hr_w) + "x" +
                            std::to_string(hr_h) + " (SR factor times the LR input)");
    }
  };
  check_hr(bicubic, "bicubic input");
  for (const auto& r : mvrs) check_hr(r, "MVR");
  for (const auto& r : nvrs) check_hr(r, "NVR");

  const double slope = cfg.leaky_slope;
  const auto ref_m = extract(stack_references(mvrs, bicubic), extractor_m_);
  const auto ref_n = extract(stack_references(nvrs, bicubic), extractor_n_);
  Tensor f_t = residual_block(leaky_relu(conv2d(to_tensor(lr_input), *trunk_.conv), slope), *trunk_.body);
  check_finite(f_t, "LR trunk");

  ForwardResult result;
  static constexpr const char* kScale[3] = {"1x", "2x", "4x"};
  Tensor out;
  for (int k = 0; k < 3; ++k) {
    // Extractor outputs run HR -> LR; REMs run LR -> HR.
    const Tensor& fm = ref_m[2 - k];
    const Tensor& fn = ref_n[2 - k];
    RsmOutput raw = rsm_forward(f_t, fm, fn, rems_[k].rsm);
    check_finite(raw.features, std::string("RSM ") + kScale[k]);
    RsmOutput adapted = asm_forward(fm, fn, raw.features, rems_[k].asm_);
    check_finite(adapted.features, std::string("ASM ") + kScale[k]);
    result.selections.push_back({std::string("rsm@") + kScale[k], std::move(raw.maps)});
    result.selections.push_back({std::string("asm@") + kScale[k], std::move(adapted.maps)});
    if (k < 2) {
      f_t = conv2d(leaky_relu(pixel_shuffle(conv2d(adapted.features, *rems_[k].up), 2), slope),
                   *rems_[k].post);
      check_finite(f_t, std::string("upsampler ") + kScale[k]);
    } else {
      out = conv2d(adapted.features, *rems_[k].post);
      check_finite(out, "output conv");
    }
  }
  result.image = to_image(out);  // ViewImage clamps to [0, 1]
  return result;
}

}  // namespace mvref::dhfs
