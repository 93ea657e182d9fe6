#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "symbiotic/layers.hpp"
#include "symbiotic/rng.hpp"
#include "symbiotic/tensor.hpp"

namespace symbiotic {

// Procedural face-like scenes: a head ellipse with eyes, a mouth bar and an
// optional hairband stripe on a flat or textured background. Every attribute
// is a deterministic function of the drawn geometry and colors, so each one
// is local to a known region.
struct SynthSpec {
  std::size_t h = 32, w = 32;
  double missing_rate = 0.0;
  std::uint64_t seed = 0;
  double noise_sigma = 0.02;

  // geometry / appearance ranges (fractions of image size unless stated)
  double head_ax_lo = 0.22, head_ax_hi = 0.36;  // semi-axes
  double head_by_lo = 0.24, head_by_hi = 0.38;
  double eye_radius_lo = 1.0, eye_radius_hi = 2.6;  // pixels
  double eye_radius_large = 1.8;
  double head_lum_lo = 0.35, head_lum_hi = 0.85, head_lum_pale = 0.6;
  double eye_lum_lo = 0.05, eye_lum_hi = 0.65, eye_lum_dark = 0.35;
  double mouth_frac_lo = 0.3, mouth_frac_hi = 0.8, mouth_frac_wide = 0.5;
  double mouth_h_lo = 0.14, mouth_h_hi = 0.24;  // of the head semi-axis
  double hairband_rate = 0.5;
  double red_dominant_rate = 0.5;
  double mouth_open_rate = 0.4;
  double textured_rate = 0.5;
  double texture_amp = 0.22;

  static constexpr std::size_t kNumSegLabels = 5;
  static constexpr std::size_t kNumAttrs = 8;

  static const std::vector<std::string>& region_names();
  static const std::vector<std::string>& attribute_names();
  // analytic positive rate per attribute under the default ranges
  std::vector<double> analytic_positive_rates() const;

  nlohmann::ordered_json to_json() const;
  static SynthSpec from_json(const nlohmann::json& j);
};

enum : std::uint8_t {
  kRegionBackground = 0,
  kRegionHead = 1,
  kRegionEyes = 2,
  kRegionMouth = 3,
  kRegionHairband = 4,
};

// One annotation kind per sample: a label map or an attribute vector.
enum class AnnotationKind : std::uint8_t { kSeg = 0, kAttr = 1 };

struct Dataset {
  SynthSpec spec;
  std::size_t count = 0;
  Tensor images;                           // [N x 3 x H x W], values in [0,1]
  std::vector<std::uint8_t> seg_labels;    // N*H*W; all-255 rows for attr samples
  std::vector<std::uint8_t> attr_values;   // N*N_A
  std::vector<std::uint8_t> attr_present;  // N*N_A; all-0 rows for seg samples
  std::vector<AnnotationKind> kind;        // per sample

  std::vector<std::size_t> indices_of(AnnotationKind k) const;
  LabelMap label_map(std::size_t sample) const;  // single-sample view copy
};

// n samples with an exact stratified split: llround(n * seg_fraction) of
// them keep the label map, the rest keep the attribute vector.
Dataset generate(const SynthSpec& spec, std::size_t n, double seg_fraction);

// Directory layout: manifest.json plus STNS shards (images, seg_labels as
// the u8 variant, attrs, attrs_mask). The manifest carries the spec echo,
// counts and the sha256 of every shard.
void write_dataset(const Dataset& ds, const std::string& dir);
Dataset read_dataset(const std::string& dir);
nlohmann::ordered_json read_dataset_manifest(const std::string& dir);

std::string sha256_file(const std::string& path);
std::string sha256_bytes(const void* data, std::size_t len);

struct MixedBatch {
  Tensor images;  // [B x 3 x H x W]
  std::vector<std::size_t> seg_indices;   // positions within the batch
  std::vector<std::size_t> attr_indices;  // disjoint, union covers 0..B
  std::vector<std::size_t> sample_ids;    // dataset ids per batch row
  LabelMap seg_labels;                    // batch = |seg_indices|, aligned
  AttrTargets attr_labels;                // batch = |attr_indices|, aligned

  // Batch-level views used by the losses: label maps with attr rows fully
  // ignored, attribute targets with seg rows fully absent.
  LabelMap full_seg_labels() const;
  AttrTargets full_attr_targets() const;
};

// Draws B/2 per pool without replacement, reshuffling a pool at exhaustion
// (an epoch covers each sample exactly once per pool). When the dataset has
// a single annotation kind the sampler falls back to whole batches from
// that pool; require_mixed forbids the fallback.
class BatchSampler {
 public:
  BatchSampler(const Dataset& ds, std::size_t batch, std::uint64_t seed,
               bool require_mixed = false);

  MixedBatch next();
  std::size_t steps_per_epoch() const;
  bool mixed() const { return mixed_; }

 private:
  const Dataset& ds_;
  std::size_t batch_;
  bool mixed_;
  Rng rng_;
  std::vector<std::size_t> seg_pool_, attr_pool_;
  std::size_t seg_cursor_ = 0, attr_cursor_ = 0;

  std::size_t draw(std::vector<std::size_t>& pool, std::size_t& cursor);
};

}  // namespace symbiotic
