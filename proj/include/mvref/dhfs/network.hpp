#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mvref/dhfs/layers.hpp"
#include "mvref/image.hpp"

namespace mvref::dhfs {

struct NetworkConfig {
  int v = 6;                     // references per kind (MVRs and NVRs)
  int base_channels = 64;        // feature width C; extractor scales use C, 2C, 4C
  int extractor_blocks = 3;      // residual layers after each extractor conv
  int trunk_blocks = 10;         // residual layers on the LR input view
  std::array<int, 3> rem_blocks{8, 6, 4};  // per REM at 1x, 2x, 4x
  int attention_reduction = 16;
  double leaky_slope = 0.2;
  int sr_factor = 4;
  // MVR and NVR paths share the feature extractor and the per-path residue /
  // adaptation layers.
  bool share_branch_weights = true;

  int input_channels() const { return 3 * v + 3; }
  void validate() const;

  // Full-width generator (64 base channels, V = 6).
  static NetworkConfig full();
  // Small configuration for tests.
  static NetworkConfig toy();
};

// Canonical JSON (sorted keys) and its inverse; unknown keys are rejected.
std::string config_to_json(const NetworkConfig& c);
NetworkConfig config_from_json(const std::string& text);

struct ConvShape {
  std::string name;  // sub-layer name within the table entry
  int in = 0, out = 0, kernel = 3, stride = 1, padding = 1;
};

// One row of the layer table, keyed by its id ("1-1" ... "4-16").
struct LayerSpec {
  std::string id;
  std::vector<ConvShape> convs;
  int residual_layers = 0;
  int residual_channels = 0;
  std::string alias_of;  // non-empty when parameters are shared with another row
};

struct ParamShape {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::size_t count() const;
};

class NetworkSpec {
 public:
  explicit NetworkSpec(NetworkConfig config);

  const NetworkConfig& config() const { return config_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  const LayerSpec& layer(const std::string& id) const;

  // Every stored parameter array, in name order. Aliased rows contribute nothing.
  std::vector<ParamShape> parameter_shapes() const;
  // SHA-256 over the canonical configuration.
  std::array<std::uint8_t, 32> hash() const;

 private:
  NetworkConfig config_;
  std::vector<LayerSpec> layers_;
};

std::uint64_t count_parameters(const NetworkSpec& spec);

struct ParamArray {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  friend bool operator==(const ParamArray&, const ParamArray&) = default;
};

struct Weights {
  std::array<std::uint8_t, 32> spec_hash{};
  std::map<std::string, ParamArray> entries;

  friend bool operator==(const Weights&, const Weights&) = default;
};

// He-normal (fan-in) weights, zero biases; the closing conv of each residual
// layer is scaled by 0.1. Deterministic for a given seed.
Weights init_random(const NetworkSpec& spec, std::uint64_t seed);

// Throws InvalidArgument unless every parameter of the network spec is present exactly
// once with matching dims and the hash matches.
void check_weights(const NetworkSpec& spec, const Weights& w);

inline constexpr std::uint32_t kWeightFormatVersion = 1;

void save_weights(const Weights& w, const std::filesystem::path& path);
Weights read_weights(const std::filesystem::path& path);
// read_weights + check_weights.
Weights load_weights(const std::filesystem::path& path, const NetworkSpec& spec);

struct NamedSelection {
  std::string site;  // e.g. "rsm@1x", "asm@4x"
  SelectionMaps maps;
};

struct ForwardResult {
  ViewImage image;
  std::vector<NamedSelection> selections;
};

Tensor to_tensor(const ViewImage& img);
ViewImage to_image(const Tensor& t);

// Resolved, immutable network ready for inference.
class Network {
 public:
  Network(const NetworkSpec& spec, const Weights& weights);

  const NetworkSpec& spec() const { return spec_; }

  ForwardResult forward(const ViewImage& lr_input, const std::vector<ViewImage>& mvrs,
                        const std::vector<ViewImage>& nvrs, const ViewImage& bicubic) const;

  // Replaces the named sub-conv of a table row; used to build probes.
  void set_conv(const std::string& id, const std::string& conv, ConvParams params);

 private:
  struct Stage {
    SharedConv conv;
    SharedBody body;
  };
  struct Rem {
    RsmParams rsm;
    AsmParams asm_;
    SharedConv up;    // C -> 4C before pixel shuffle (absent in the last REM)
    SharedConv post;  // C -> C after pixel shuffle, or the final C -> 3 conv
  };

  std::array<Tensor, 3> extract(const Tensor& x, const std::array<Stage, 3>& stages) const;
  void rebuild();

  NetworkSpec spec_;
  std::map<std::string, SharedConv> convs_;
  std::map<std::string, SharedBody> bodies_;
  std::array<Stage, 3> extractor_m_;
  std::array<Stage, 3> extractor_n_;
  Stage trunk_;
  std::array<Rem, 3> rems_;
};

}  // namespace mvref::dhfs
