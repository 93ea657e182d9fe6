#include "symbiotic/data.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "symbiotic/errors.hpp"

namespace symbiotic {

namespace fs = std::filesystem;

const std::vector<std::string>& SynthSpec::region_names() {
  static const std::vector<std::string> names = {"background", "head", "eyes",
                                                 "mouth", "hairband"};
  return names;
}

const std::vector<std::string>& SynthSpec::attribute_names() {
  static const std::vector<std::string> names = {
      "hairband_present", "hairband_red",  "mouth_wide", "eyes_large",
      "head_pale",        "mouth_open",    "eyes_dark",  "background_textured"};
  return names;
}

std::vector<double> SynthSpec::analytic_positive_rates() const {
  auto frac_above = [](double lo, double hi, double thr) {
    if (thr <= lo) return 1.0;
    if (thr >= hi) return 0.0;
    return (hi - thr) / (hi - lo);
  };
  return {
      hairband_rate,
      hairband_rate * red_dominant_rate,
      frac_above(mouth_frac_lo, mouth_frac_hi, mouth_frac_wide),
      frac_above(eye_radius_lo, eye_radius_hi, eye_radius_large),
      frac_above(head_lum_lo, head_lum_hi, head_lum_pale),
      mouth_open_rate,
      1.0 - frac_above(eye_lum_lo, eye_lum_hi, eye_lum_dark),
      textured_rate,
  };
}

nlohmann::ordered_json SynthSpec::to_json() const {
  nlohmann::ordered_json j;
  j["h"] = h;
  j["w"] = w;
  j["n_s"] = kNumSegLabels;
  j["n_a"] = kNumAttrs;
  j["missing_rate"] = missing_rate;
  j["seed"] = seed;
  j["noise_sigma"] = noise_sigma;
  j["head_ax"] = {head_ax_lo, head_ax_hi};
  j["head_by"] = {head_by_lo, head_by_hi};
  j["eye_radius"] = {eye_radius_lo, eye_radius_hi};
  j["eye_radius_large"] = eye_radius_large;
  j["head_lum"] = {head_lum_lo, head_lum_hi};
  j["head_lum_pale"] = head_lum_pale;
  j["eye_lum"] = {eye_lum_lo, eye_lum_hi};
  j["eye_lum_dark"] = eye_lum_dark;
  j["mouth_frac"] = {mouth_frac_lo, mouth_frac_hi};
  j["mouth_frac_wide"] = mouth_frac_wide;
  j["mouth_height"] = {mouth_h_lo, mouth_h_hi};
  j["hairband_rate"] = hairband_rate;
  j["red_dominant_rate"] = red_dominant_rate;
  j["mouth_open_rate"] = mouth_open_rate;
  j["textured_rate"] = textured_rate;
  j["texture_amp"] = texture_amp;
  return j;
}

SynthSpec SynthSpec::from_json(const nlohmann::json& j) {
  SynthSpec s;
  auto pair = [&](const char* key, double& lo, double& hi) {
    if (j.contains(key)) {
      lo = j[key][0].get<double>();
      hi = j[key][1].get<double>();
    }
  };
  s.h = j.value("h", s.h);
  s.w = j.value("w", s.w);
  if (j.contains("n_s") && j["n_s"].get<std::size_t>() != kNumSegLabels) {
    throw ConfigError("generator supports exactly " +
                      std::to_string(kNumSegLabels) + " segment labels");
  }
  if (j.contains("n_a") && j["n_a"].get<std::size_t>() != kNumAttrs) {
    throw ConfigError("generator supports exactly " + std::to_string(kNumAttrs) +
                      " attributes");
  }
  s.missing_rate = j.value("missing_rate", s.missing_rate);
  s.seed = j.value("seed", s.seed);
  s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
  pair("head_ax", s.head_ax_lo, s.head_ax_hi);
  pair("head_by", s.head_by_lo, s.head_by_hi);
  pair("eye_radius", s.eye_radius_lo, s.eye_radius_hi);
  s.eye_radius_large = j.value("eye_radius_large", s.eye_radius_large);
  pair("head_lum", s.head_lum_lo, s.head_lum_hi);
  s.head_lum_pale = j.value("head_lum_pale", s.head_lum_pale);
  pair("eye_lum", s.eye_lum_lo, s.eye_lum_hi);
  s.eye_lum_dark = j.value("eye_lum_dark", s.eye_lum_dark);
  pair("mouth_frac", s.mouth_frac_lo, s.mouth_frac_hi);
  s.mouth_frac_wide = j.value("mouth_frac_wide", s.mouth_frac_wide);
  pair("mouth_height", s.mouth_h_lo, s.mouth_h_hi);
  s.hairband_rate = j.value("hairband_rate", s.hairband_rate);
  s.red_dominant_rate = j.value("red_dominant_rate", s.red_dominant_rate);
  s.mouth_open_rate = j.value("mouth_open_rate", s.mouth_open_rate);
  s.textured_rate = j.value("textured_rate", s.textured_rate);
  s.texture_amp = j.value("texture_amp", s.texture_amp);
  if (s.missing_rate < 0.0 || s.missing_rate >= 1.0) {
    throw ConfigError("missing_rate must lie in [0, 1)");
  }
  return s;
}

std::vector<std::size_t> Dataset::indices_of(AnnotationKind k) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < count; ++i) {
    if (kind[i] == k) out.push_back(i);
  }
  return out;
}

LabelMap Dataset::label_map(std::size_t sample) const {
  LabelMap m;
  m.batch = 1;
  m.h = spec.h;
  m.w = spec.w;
  std::size_t hw = spec.h * spec.w;
  m.labels.assign(seg_labels.begin() + sample * hw,
                  seg_labels.begin() + (sample + 1) * hw);
  return m;
}

namespace {

struct SampleScene {
  double bg_color[3];
  bool textured;
  double cx, cy, ax, by;
  double head_color[3];
  double eye_r;
  double eye_color[3];
  double mouth_frac, mouth_h;
  double mouth_color[3];
  bool mouth_open;
  bool hairband;
  bool red_dominant;
  double hb_color[3];
  std::uint8_t attrs[SynthSpec::kNumAttrs];
};

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// Fixed draw order and count per sample; every latent is drawn whether or
// not the scene uses it, so seeds stay aligned across variants.
SampleScene draw_scene(const SynthSpec& s, Rng& rng) {
  SampleScene sc{};
  sc.textured = rng.bernoulli(s.textured_rate);
  for (double& c : sc.bg_color) c = rng.uniform(0.05, 0.95);

  sc.cx = rng.uniform(0.42, 0.58) * static_cast<double>(s.w);
  sc.cy = rng.uniform(0.45, 0.60) * static_cast<double>(s.h);
  sc.ax = rng.uniform(s.head_ax_lo, s.head_ax_hi) * static_cast<double>(s.w);
  sc.by = rng.uniform(s.head_by_lo, s.head_by_hi) * static_cast<double>(s.h);

  double head_lum = rng.uniform(s.head_lum_lo, s.head_lum_hi);
  for (double& c : sc.head_color) c = head_lum + rng.uniform(-0.08, 0.08);

  sc.eye_r = rng.uniform(s.eye_radius_lo, s.eye_radius_hi);
  double eye_lum = rng.uniform(s.eye_lum_lo, s.eye_lum_hi);
  for (double& c : sc.eye_color) c = clamp01(eye_lum + rng.uniform(-0.04, 0.04));

  sc.mouth_frac = rng.uniform(s.mouth_frac_lo, s.mouth_frac_hi);
  sc.mouth_h = rng.uniform(s.mouth_h_lo, s.mouth_h_hi) * sc.by;
  sc.mouth_color[0] = rng.uniform(0.5, 0.9);
  sc.mouth_color[1] = rng.uniform(0.1, 0.4);
  sc.mouth_color[2] = rng.uniform(0.1, 0.4);
  sc.mouth_open = rng.bernoulli(s.mouth_open_rate);

  sc.hairband = rng.bernoulli(s.hairband_rate);
  sc.red_dominant = rng.bernoulli(s.red_dominant_rate);
  double dom = rng.uniform(0.65, 0.95);
  double off1 = rng.uniform(0.05, 0.35);
  double off2 = rng.uniform(0.05, 0.35);
  bool green_dominant = rng.bernoulli(0.5);
  if (sc.red_dominant) {
    sc.hb_color[0] = dom;
    sc.hb_color[1] = off1;
    sc.hb_color[2] = off2;
  } else if (green_dominant) {
    sc.hb_color[0] = off1;
    sc.hb_color[1] = dom;
    sc.hb_color[2] = off2;
  } else {
    sc.hb_color[0] = off1;
    sc.hb_color[1] = off2;
    sc.hb_color[2] = dom;
  }

  double head_mean =
      (sc.head_color[0] + sc.head_color[1] + sc.head_color[2]) / 3.0;
  double eye_mean = (sc.eye_color[0] + sc.eye_color[1] + sc.eye_color[2]) / 3.0;
  sc.attrs[0] = sc.hairband ? 1 : 0;
  sc.attrs[1] = (sc.hairband && sc.red_dominant) ? 1 : 0;
  sc.attrs[2] = sc.mouth_frac > s.mouth_frac_wide ? 1 : 0;
  sc.attrs[3] = sc.eye_r > s.eye_radius_large ? 1 : 0;
  sc.attrs[4] = head_mean > s.head_lum_pale ? 1 : 0;
  sc.attrs[5] = sc.mouth_open ? 1 : 0;
  sc.attrs[6] = eye_mean < s.eye_lum_dark ? 1 : 0;
  sc.attrs[7] = sc.textured ? 1 : 0;
  return sc;
}

void paint_scene(const SynthSpec& s, const SampleScene& sc, Rng& rng,
                 double* image, std::uint8_t* labels) {
  std::size_t h = s.h, w = s.w, hw = h * w;
  double band_top = sc.cy - 0.95 * sc.by;
  double band_bot = sc.cy - 0.60 * sc.by;
  double eye_y = sc.cy - 0.25 * sc.by;
  double eye_x_off = 0.45 * sc.ax;
  double mouth_cy = sc.cy + 0.45 * sc.by;
  double mouth_half_w = sc.mouth_frac * sc.ax;
  for (std::size_t y = 0; y < h; ++y) {
    double py = static_cast<double>(y) + 0.5;
    for (std::size_t x = 0; x < w; ++x) {
      double px = static_cast<double>(x) + 0.5;
      double exn = (px - sc.cx) / sc.ax;
      double eyn = (py - sc.cy) / sc.by;
      double e = exn * exn + eyn * eyn;
      const double* color = sc.bg_color;
      std::uint8_t label = kRegionBackground;
      if (e <= 1.0) {
        color = sc.head_color;
        label = kRegionHead;
        if (sc.hairband && py >= band_top && py <= band_bot) {
          color = sc.hb_color;
          label = kRegionHairband;
        }
        double dl = (px - (sc.cx - eye_x_off)) * (px - (sc.cx - eye_x_off)) +
                    (py - eye_y) * (py - eye_y);
        double dr = (px - (sc.cx + eye_x_off)) * (px - (sc.cx + eye_x_off)) +
                    (py - eye_y) * (py - eye_y);
        if (dl <= sc.eye_r * sc.eye_r || dr <= sc.eye_r * sc.eye_r) {
          color = sc.eye_color;
          label = kRegionEyes;
        } else if (std::abs(px - sc.cx) <= mouth_half_w &&
                   std::abs(py - mouth_cy) <= sc.mouth_h * 0.5) {
          color = sc.mouth_color;
          label = kRegionMouth;
        }
      }
      labels[y * w + x] = label;
      // texture jitter drawn for every pixel to keep the stream aligned
      double jitter = rng.uniform(-1.0, 1.0) * s.texture_amp;
      bool use_jitter = sc.textured && label == kRegionBackground;
      bool dark_half = sc.mouth_open && label == kRegionMouth && py < mouth_cy;
      for (std::size_t c = 0; c < 3; ++c) {
        double v = color[c];
        if (dark_half) v *= 0.35;
        if (use_jitter) v += jitter;
        image[c * hw + y * w + x] = clamp01(v + rng.normal(0.0, s.noise_sigma));
      }
    }
  }
}

std::size_t env_thread_cap() {
  const char* env = std::getenv("SYMBIOTIC_THREADS");
  if (!env) return 1;
  long v = std::strtol(env, nullptr, 10);
  return v > 1 ? static_cast<std::size_t>(v) : 1;
}

}  // namespace

Dataset generate(const SynthSpec& spec, std::size_t n, double seg_fraction) {
  if (n < 2) throw ConfigError("dataset needs at least 2 samples");
  if (!(seg_fraction > 0.0 && seg_fraction < 1.0)) {
    throw ConfigError("annotation split must lie strictly inside (0, 1)");
  }
  Dataset ds;
  ds.spec = spec;
  ds.count = n;
  std::size_t hw = spec.h * spec.w;
  ds.images = Tensor::zeros({n, 3, spec.h, spec.w});
  ds.seg_labels.assign(n * hw, LabelMap::kIgnore);
  ds.attr_values.assign(n * SynthSpec::kNumAttrs, 0);
  ds.attr_present.assign(n * SynthSpec::kNumAttrs, 0);
  ds.kind.assign(n, AnnotationKind::kAttr);

  // exact stratified split over a seeded permutation
  std::size_t n_seg = static_cast<std::size_t>(
      std::llround(seg_fraction * static_cast<double>(n)));
  n_seg = std::min(std::max<std::size_t>(n_seg, 1), n - 1);
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng split_rng(derive_seed(spec.seed, "split"));
  split_rng.shuffle(perm);
  for (std::size_t i = 0; i < n_seg; ++i) ds.kind[perm[i]] = AnnotationKind::kSeg;

  std::uint64_t sample_base = derive_seed(spec.seed, "samples");
  auto generate_range = [&](std::size_t lo, std::size_t hi) {
    std::vector<std::uint8_t> scratch_labels(hw);
    for (std::size_t i = lo; i < hi; ++i) {
      Rng rng(derive_seed(sample_base, static_cast<std::uint64_t>(i)));
      SampleScene sc = draw_scene(spec, rng);
      paint_scene(spec, sc, rng, ds.images.data() + i * 3 * hw,
                  scratch_labels.data());
      if (ds.kind[i] == AnnotationKind::kSeg) {
        std::copy(scratch_labels.begin(), scratch_labels.end(),
                  ds.seg_labels.begin() + i * hw);
      } else {
        for (std::size_t a = 0; a < SynthSpec::kNumAttrs; ++a) {
          bool missing = rng.bernoulli(spec.missing_rate);
          ds.attr_values[i * SynthSpec::kNumAttrs + a] = sc.attrs[a];
          ds.attr_present[i * SynthSpec::kNumAttrs + a] = missing ? 0 : 1;
        }
      }
    }
  };

  std::size_t threads = std::min(env_thread_cap(), n);
  if (threads <= 1) {
    generate_range(0, n);
  } else {
    std::vector<std::thread> pool;
    std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(generate_range, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  return ds;
}

std::string sha256_bytes(const void* data, std::size_t len) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int digest_len = 0;
  EVP_Digest(data, len, digest, &digest_len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(digest_len * 2);
  for (unsigned int i = 0; i < digest_len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string sha256_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CorruptDatasetError("cannot open " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (is) {
    is.read(buf, sizeof(buf));
    std::streamsize got = is.gcount();
    if (got > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(got));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int digest_len = 0;
  EVP_DigestFinal_ex(ctx, digest, &digest_len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < digest_len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

namespace {
constexpr int kDatasetVersion = 1;
const char* kShardNames[4] = {"images.stns", "seg_labels.stns", "attrs.stns",
                              "attrs_mask.stns"};
}  // namespace

void write_dataset(const Dataset& ds, const std::string& dir) {
  fs::create_directories(dir);
  std::size_t n = ds.count, hw = ds.spec.h * ds.spec.w;
  {
    std::ofstream os(fs::path(dir) / "images.stns", std::ios::binary);
    stns::write_f64(os, {n, 3, ds.spec.h, ds.spec.w}, ds.images.data());
  }
  {
    std::ofstream os(fs::path(dir) / "seg_labels.stns", std::ios::binary);
    stns::write_u8(os, {n, ds.spec.h, ds.spec.w}, ds.seg_labels.data());
  }
  {
    std::vector<double> vals(n * SynthSpec::kNumAttrs);
    for (std::size_t i = 0; i < vals.size(); ++i)
      vals[i] = static_cast<double>(ds.attr_values[i]);
    std::ofstream os(fs::path(dir) / "attrs.stns", std::ios::binary);
    stns::write_f64(os, {n, SynthSpec::kNumAttrs}, vals.data());
  }
  {
    std::vector<double> vals(n * SynthSpec::kNumAttrs);
    for (std::size_t i = 0; i < vals.size(); ++i)
      vals[i] = static_cast<double>(ds.attr_present[i]);
    std::ofstream os(fs::path(dir) / "attrs_mask.stns", std::ios::binary);
    stns::write_f64(os, {n, SynthSpec::kNumAttrs}, vals.data());
  }

  nlohmann::ordered_json manifest;
  manifest["version"] = kDatasetVersion;
  manifest["spec"] = ds.spec.to_json();
  std::size_t n_seg = ds.indices_of(AnnotationKind::kSeg).size();
  manifest["counts"] = {{"total", n}, {"seg", n_seg}, {"attr", n - n_seg}};
  nlohmann::ordered_json shards;
  for (const char* name : kShardNames) {
    shards[name] = sha256_file((fs::path(dir) / name).string());
  }
  manifest["shards"] = shards;
  std::ofstream os(fs::path(dir) / "manifest.json");
  os << manifest.dump(2) << "\n";
  (void)hw;
}

nlohmann::ordered_json read_dataset_manifest(const std::string& dir) {
  std::ifstream is(fs::path(dir) / "manifest.json");
  if (!is) throw CorruptDatasetError(dir + ": missing manifest.json");
  nlohmann::ordered_json manifest;
  try {
    is >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptDatasetError(dir + ": unreadable manifest: " + e.what());
  }
  return manifest;
}

Dataset read_dataset(const std::string& dir) {
  nlohmann::ordered_json manifest = read_dataset_manifest(dir);
  if (!manifest.contains("version") ||
      manifest["version"].get<int>() != kDatasetVersion) {
    throw VersionError(dir + ": unsupported dataset version");
  }
  for (const char* name : kShardNames) {
    std::string path = (fs::path(dir) / name).string();
    std::string expect = manifest["shards"][name].get<std::string>();
    std::string got = sha256_file(path);
    if (got != expect) {
      throw CorruptDatasetError(std::string(name) + ": checksum mismatch");
    }
  }
  Dataset ds;
  ds.spec = SynthSpec::from_json(manifest["spec"]);
  std::size_t hw = ds.spec.h * ds.spec.w;

  {
    std::ifstream is(fs::path(dir) / "images.stns", std::ios::binary);
    ds.images = stns::read_tensor(is, "images.stns");
  }
  {
    std::ifstream is(fs::path(dir) / "seg_labels.stns", std::ios::binary);
    stns::Record rec = stns::read(is, "seg_labels.stns");
    if (!rec.is_u8) throw CorruptDatasetError("seg_labels.stns: expected u8");
    ds.seg_labels = std::move(rec.u8);
  }
  auto read_bits = [&](const char* name) {
    std::ifstream is(fs::path(dir) / name, std::ios::binary);
    Tensor t = stns::read_tensor(is, name);
    std::vector<std::uint8_t> bits(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) bits[i] = t[i] != 0.0 ? 1 : 0;
    return bits;
  };
  ds.attr_values = read_bits("attrs.stns");
  ds.attr_present = read_bits("attrs_mask.stns");

  ds.count = ds.images.shape()[0];
  std::size_t expect_total = manifest["counts"]["total"].get<std::size_t>();
  if (ds.count != expect_total || ds.seg_labels.size() != ds.count * hw ||
      ds.attr_values.size() != ds.count * SynthSpec::kNumAttrs) {
    throw CorruptDatasetError(dir + ": manifest counts disagree with shards");
  }
  ds.kind.resize(ds.count);
  for (std::size_t i = 0; i < ds.count; ++i) {
    bool all_ignore = true;
    for (std::size_t t = 0; t < hw; ++t) {
      if (ds.seg_labels[i * hw + t] != LabelMap::kIgnore) {
        all_ignore = false;
        break;
      }
    }
    ds.kind[i] = all_ignore ? AnnotationKind::kAttr : AnnotationKind::kSeg;
  }
  return ds;
}

LabelMap MixedBatch::full_seg_labels() const {
  std::size_t b = images.shape()[0];
  LabelMap full;
  full.batch = b;
  full.h = seg_labels.h;
  full.w = seg_labels.w;
  full.labels.assign(b * full.h * full.w, LabelMap::kIgnore);
  std::size_t hw = full.h * full.w;
  for (std::size_t r = 0; r < seg_indices.size(); ++r) {
    std::copy(seg_labels.labels.begin() + r * hw,
              seg_labels.labels.begin() + (r + 1) * hw,
              full.labels.begin() + seg_indices[r] * hw);
  }
  return full;
}

AttrTargets MixedBatch::full_attr_targets() const {
  std::size_t b = images.shape()[0];
  AttrTargets full;
  full.batch = b;
  full.num_attrs = attr_labels.num_attrs;
  full.values.assign(b * full.num_attrs, 0);
  full.present.assign(b * full.num_attrs, 0);
  for (std::size_t r = 0; r < attr_indices.size(); ++r) {
    for (std::size_t a = 0; a < full.num_attrs; ++a) {
      full.values[attr_indices[r] * full.num_attrs + a] =
          attr_labels.values[r * full.num_attrs + a];
      full.present[attr_indices[r] * full.num_attrs + a] =
          attr_labels.present[r * full.num_attrs + a];
    }
  }
  return full;
}

BatchSampler::BatchSampler(const Dataset& ds, std::size_t batch,
                           std::uint64_t seed, bool require_mixed)
    : ds_(ds), batch_(batch), rng_(seed) {
  seg_pool_ = ds.indices_of(AnnotationKind::kSeg);
  attr_pool_ = ds.indices_of(AnnotationKind::kAttr);
  if (seg_pool_.empty() && attr_pool_.empty()) {
    throw ConfigError("dataset has no annotated samples");
  }
  mixed_ = !seg_pool_.empty() && !attr_pool_.empty();
  if (require_mixed && !mixed_) {
    throw ConfigError("mixed batches need both annotation pools non-empty");
  }
  if (mixed_ && batch % 2 != 0) {
    throw ConfigError("mixed batches need an even batch size");
  }
  if (batch == 0) throw ConfigError("batch size must be positive");
  rng_.shuffle(seg_pool_);
  rng_.shuffle(attr_pool_);
}

std::size_t BatchSampler::draw(std::vector<std::size_t>& pool,
                               std::size_t& cursor) {
  if (cursor >= pool.size()) {
    rng_.shuffle(pool);
    cursor = 0;
  }
  return pool[cursor++];
}

std::size_t BatchSampler::steps_per_epoch() const {
  if (mixed_) {
    std::size_t half = batch_ / 2;
    std::size_t largest = std::max(seg_pool_.size(), attr_pool_.size());
    return (largest + half - 1) / half;
  }
  std::size_t pool = std::max(seg_pool_.size(), attr_pool_.size());
  return (pool + batch_ - 1) / batch_;
}

MixedBatch BatchSampler::next() {
  std::size_t hw = ds_.spec.h * ds_.spec.w;
  MixedBatch b;
  std::vector<std::size_t> rows;
  if (mixed_) {
    std::size_t half = batch_ / 2;
    for (std::size_t i = 0; i < half; ++i) {
      rows.push_back(draw(seg_pool_, seg_cursor_));
      b.seg_indices.push_back(i);
    }
    for (std::size_t i = 0; i < half; ++i) {
      rows.push_back(draw(attr_pool_, attr_cursor_));
      b.attr_indices.push_back(half + i);
    }
  } else if (!seg_pool_.empty()) {
    for (std::size_t i = 0; i < batch_; ++i) {
      rows.push_back(draw(seg_pool_, seg_cursor_));
      b.seg_indices.push_back(i);
    }
  } else {
    for (std::size_t i = 0; i < batch_; ++i) {
      rows.push_back(draw(attr_pool_, attr_cursor_));
      b.attr_indices.push_back(i);
    }
  }

  std::size_t bsz = rows.size();
  b.images = Tensor::zeros({bsz, 3, ds_.spec.h, ds_.spec.w});
  for (std::size_t r = 0; r < bsz; ++r) {
    const double* src = ds_.images.data() + rows[r] * 3 * hw;
    std::copy(src, src + 3 * hw, b.images.data() + r * 3 * hw);
  }
  b.sample_ids = rows;

  b.seg_labels.batch = b.seg_indices.size();
  b.seg_labels.h = ds_.spec.h;
  b.seg_labels.w = ds_.spec.w;
  b.seg_labels.labels.resize(b.seg_indices.size() * hw);
  for (std::size_t r = 0; r < b.seg_indices.size(); ++r) {
    std::size_t id = rows[b.seg_indices[r]];
    std::copy(ds_.seg_labels.begin() + id * hw, ds_.seg_labels.begin() + (id + 1) * hw,
              b.seg_labels.labels.begin() + r * hw);
  }

  b.attr_labels.batch = b.attr_indices.size();
  b.attr_labels.num_attrs = SynthSpec::kNumAttrs;
  b.attr_labels.values.resize(b.attr_indices.size() * SynthSpec::kNumAttrs);
  b.attr_labels.present.resize(b.attr_indices.size() * SynthSpec::kNumAttrs);
  for (std::size_t r = 0; r < b.attr_indices.size(); ++r) {
    std::size_t id = rows[b.attr_indices[r]];
    for (std::size_t a = 0; a < SynthSpec::kNumAttrs; ++a) {
      b.attr_labels.values[r * SynthSpec::kNumAttrs + a] =
          ds_.attr_values[id * SynthSpec::kNumAttrs + a];
      b.attr_labels.present[r * SynthSpec::kNumAttrs + a] =
          ds_.attr_present[id * SynthSpec::kNumAttrs + a];
    }
  }
  return b;
}

}  // namespace symbiotic
