#include "symbiotic/training.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "symbiotic/errors.hpp"
#include "symbiotic/ops.hpp"

namespace symbiotic {

namespace fs = std::filesystem;

namespace {

MaskSource mask_source_from_string(const std::string& s) {
  if (s == "none") return MaskSource::kNone;
  if (s == "ground_truth_onehot") return MaskSource::kGroundTruthOnehot;
  if (s.rfind("pretrained_softmax", 0) == 0) return MaskSource::kPretrainedSoftmax;
  throw UsageError("unknown mask_source '" + s + "'");
}

}  // namespace

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  for (const char* key : {"variant", "epochs", "batch", "lr", "seed"}) {
    if (!j.contains(key)) {
      throw UsageError(std::string("config is missing required key '") + key +
                       "'");
    }
  }
  try {
    cfg.variant = variant_from_string(j["variant"].get<std::string>());
    cfg.epochs = j["epochs"].get<std::size_t>();
    cfg.batch = j["batch"].get<std::size_t>();
    cfg.lr = j["lr"].get<double>();
    cfg.momentum = j.value("momentum", cfg.momentum);
    cfg.seed = j["seed"].get<std::uint64_t>();
    cfg.seg_weight = j.value("seg_weight", cfg.seg_weight);
    cfg.attr_weight = j.value("attr_weight", cfg.attr_weight);
    if (j.contains("attr_pos_weight")) {
      cfg.attr_pos_weight = j["attr_pos_weight"].get<std::vector<double>>();
    }
    if (j.contains("mask_source")) {
      std::string src = j["mask_source"].get<std::string>();
      cfg.mask_source = mask_source_from_string(src);
      if (cfg.mask_source == MaskSource::kPretrainedSoftmax) {
        auto colon = src.find(':');
        if (colon == std::string::npos || colon + 1 >= src.size()) {
          throw UsageError(
              "mask_source pretrained_softmax needs ':<checkpoint path>'");
        }
        cfg.mask_checkpoint = src.substr(colon + 1);
      }
    }
    if (j.contains("init_mode")) {
      std::string init = j["init_mode"].get<std::string>();
      if (init == "scratch") {
        cfg.init_mode = InitMode::kScratch;
      } else if (init.rfind("from_checkpoint:", 0) == 0) {
        cfg.init_mode = InitMode::kFromCheckpoint;
        cfg.init_checkpoint = init.substr(std::string("from_checkpoint:").size());
      } else {
        throw UsageError("unknown init_mode '" + init + "'");
      }
    }
    cfg.eval_data = j.value("eval_data", cfg.eval_data);
    cfg.sa_kernel = j.value("sa_kernel", cfg.sa_kernel);
    if (j.contains("trunk")) {
      const auto& t = j["trunk"];
      cfg.trunk.stem_channels =
          t.value("stem_channels", cfg.trunk.stem_channels);
      cfg.trunk.block_channels =
          t.value("block_channels", cfg.trunk.block_channels);
      cfg.trunk.kernel = t.value("kernel", cfg.trunk.kernel);
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad config value: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

nlohmann::ordered_json TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["variant"] = variant_to_string(variant);
  j["epochs"] = epochs;
  j["batch"] = batch;
  j["lr"] = lr;
  j["momentum"] = momentum;
  j["seed"] = seed;
  j["seg_weight"] = seg_weight;
  j["attr_weight"] = attr_weight;
  if (!attr_pos_weight.empty()) j["attr_pos_weight"] = attr_pos_weight;
  switch (mask_source) {
    case MaskSource::kNone: j["mask_source"] = "none"; break;
    case MaskSource::kGroundTruthOnehot:
      j["mask_source"] = "ground_truth_onehot";
      break;
    case MaskSource::kPretrainedSoftmax:
      j["mask_source"] = "pretrained_softmax:" + mask_checkpoint;
      break;
  }
  j["init_mode"] = init_mode == InitMode::kScratch
                       ? "scratch"
                       : "from_checkpoint:" + init_checkpoint;
  if (!eval_data.empty()) j["eval_data"] = eval_data;
  j["sa_kernel"] = sa_kernel;
  j["trunk"] = {{"stem_channels", trunk.stem_channels},
                {"block_channels", trunk.block_channels},
                {"kernel", trunk.kernel}};
  return j;
}

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (batch == 0) throw ConfigError("batch must be positive");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (seg_weight < 0.0 || attr_weight < 0.0) {
    throw ConfigError("loss weights must be non-negative");
  }
  if (seg_weight == 0.0 && attr_weight == 0.0) {
    throw ConfigError("at least one of seg_weight, attr_weight must be > 0");
  }
  if (variant_needs_masks(variant) && mask_source == MaskSource::kNone) {
    throw ConfigError(variant_to_string(variant) + " requires a mask_source");
  }
  if (variant == Variant::kSa && mask_source != MaskSource::kNone) {
    throw ConfigError("sa learns its masks end-to-end; mask_source must be none");
  }
  if (seg_weight > 0.0 && !variant_has_seg_task(variant)) {
    throw ConfigError(variant_to_string(variant) +
                      " has no segmentation branch; set seg_weight to 0");
  }
}

nlohmann::ordered_json StepRecord::to_json() const {
  nlohmann::ordered_json j;
  j["step"] = step;
  if (l_s) j["l_S"] = *l_s; else j["l_S"] = nullptr;
  if (l_a) j["l_A"] = *l_a; else j["l_A"] = nullptr;
  j["total"] = total;
  j["grad_norm"] = grad_norm;
  return j;
}

void sgd_update(Tensor& param, Tensor& velocity, double lr, double momentum) {
  if (!param.has_grad()) return;
  const std::vector<double>& g = param.grad_vec();
  for (std::size_t i = 0; i < param.size(); ++i) {
    velocity[i] = momentum * velocity[i] + g[i];
    param[i] -= lr * velocity[i];
  }
}

SgdOptimizer::SgdOptimizer(std::vector<std::pair<std::string, Tensor>> params,
                           double lr, double momentum)
    : params_(std::move(params)), lr_(lr), momentum_(momentum) {
  for (auto& [name, t] : params_) {
    t.set_requires_grad(true);
    velocity_.push_back(Tensor::zeros(t.shape()));
  }
}

double SgdOptimizer::grad_norm() const {
  double acc = 0.0;
  for (const auto& [name, t] : params_) {
    if (!t.has_grad()) continue;
    for (double g : t.grad_vec()) acc += g * g;
  }
  return std::sqrt(acc);
}

void SgdOptimizer::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    sgd_update(params_[i].second, velocity_[i], lr_, momentum_);
    params_[i].second.zero_grad();
  }
}

MaskProvider MaskProvider::none() { return MaskProvider{}; }

MaskProvider MaskProvider::ground_truth(std::size_t num_labels) {
  MaskProvider p;
  p.source_ = MaskSource::kGroundTruthOnehot;
  p.num_labels_ = num_labels;
  return p;
}

MaskProvider MaskProvider::pretrained(const std::string& checkpoint_path) {
  MaskProvider p;
  p.source_ = MaskSource::kPretrainedSoftmax;
  p.frozen_ = std::make_shared<Model>(
      Model::from_checkpoint(Checkpoint::load(checkpoint_path)));
  if (!variant_has_seg_task(p.frozen_->variant)) {
    throw ConfigError("mask checkpoint variant " +
                      variant_to_string(p.frozen_->variant) +
                      " has no segmentation head");
  }
  p.frozen_->set_training(false);
  p.num_labels_ = p.frozen_->dims.num_seg_labels;
  return p;
}

Tensor MaskProvider::masks_for(const MixedBatch& batch) {
  if (source_ == MaskSource::kNone) return Tensor{};
  if (source_ == MaskSource::kGroundTruthOnehot) {
    if (batch.seg_indices.size() != batch.images.shape()[0]) {
      throw ConfigError(
          "mask_source ground_truth_onehot needs segmentation labels on every "
          "batch row");
    }
    LabelMap full = batch.full_seg_labels();
    return one_hot_masks(full, num_labels_).probs;
  }
  // frozen softmax at image resolution
  Model::Forward f =
      frozen_->forward(nullptr, batch.images, Tensor{}, /*need_seg=*/true);
  return softmax(nullptr, f.seg_logits, 1);
}

StepRecord train_step(TrainState& state, const MixedBatch& batch,
                      const TrainConfig& cfg, std::size_t step_index) {
  Graph g;
  state.model.set_training(true);
  bool want_seg = cfg.seg_weight > 0.0 && !batch.seg_indices.empty();
  bool want_attr = cfg.attr_weight > 0.0 && !batch.attr_indices.empty();
  if (!want_seg && !want_attr) {
    throw ConfigError("batch carries no trainable annotations for this config");
  }
  Tensor masks = state.masks.masks_for(batch);
  Model::Forward f = state.model.forward(&g, batch.images, masks, want_seg);

  StepRecord rec;
  rec.step = step_index;
  Tensor total;
  if (want_seg) {
    Tensor l_s = seg_loss(&g, f.seg_logits, batch.full_seg_labels());
    rec.l_s = l_s.item();
    total = mul_scalar(&g, l_s, cfg.seg_weight);
  }
  if (want_attr) {
    Tensor l_a =
        attr_loss(&g, f.attr_logits, batch.full_attr_targets(), state.pos_weight);
    rec.l_a = l_a.item();
    Tensor weighted = mul_scalar(&g, l_a, cfg.attr_weight);
    total = total.defined() ? add(&g, total, weighted) : weighted;
  }
  rec.total = total.item();
  if (!std::isfinite(rec.total)) {
    throw DivergenceError("non-finite loss at step " + std::to_string(step_index));
  }
  g.backward(total);
  rec.grad_norm = state.optimizer.grad_norm();
  state.optimizer.step();
  return rec;
}

namespace {

Tensor make_pos_weight(const TrainConfig& cfg, std::size_t num_attrs) {
  if (cfg.attr_pos_weight.empty()) return Tensor::full({num_attrs}, 1.0);
  if (cfg.attr_pos_weight.size() != num_attrs) {
    throw ConfigError("attr_pos_weight length must equal the attribute count");
  }
  return Tensor::from_data({num_attrs}, cfg.attr_pos_weight);
}

MaskProvider make_mask_provider(const TrainConfig& cfg, std::size_t num_labels) {
  switch (cfg.mask_source) {
    case MaskSource::kNone: return MaskProvider::none();
    case MaskSource::kGroundTruthOnehot:
      return MaskProvider::ground_truth(num_labels);
    case MaskSource::kPretrainedSoftmax:
      return MaskProvider::pretrained(cfg.mask_checkpoint);
  }
  throw ConfigError("bad mask source");
}

}  // namespace

TrainOutput train(const TrainConfig& cfg, const Dataset& train_ds,
                  const Dataset* eval_ds, const std::string& out_dir,
                  Model* model_out) {
  cfg.validate();
  ModelDims dims;
  dims.img_h = train_ds.spec.h;
  dims.img_w = train_ds.spec.w;
  dims.num_seg_labels = SynthSpec::kNumSegLabels;
  dims.num_attrs = SynthSpec::kNumAttrs;

  Model model = Model::init(cfg.variant, dims, cfg.seed, cfg.trunk, cfg.sa_kernel);
  if (cfg.init_mode == InitMode::kFromCheckpoint) {
    model.load_trunk(Checkpoint::load(cfg.init_checkpoint));
  }

  TrainState state{std::move(model),
                   SgdOptimizer({}, cfg.lr, cfg.momentum),
                   make_mask_provider(cfg, dims.num_seg_labels),
                   make_pos_weight(cfg, dims.num_attrs)};
  state.optimizer = SgdOptimizer(state.model.named_params(), cfg.lr, cfg.momentum);

  BatchSampler sampler(train_ds, cfg.batch, derive_seed(cfg.seed, "batching"));
  std::size_t steps_per_epoch = sampler.steps_per_epoch();

  TrainOutput out;
  std::ofstream log_stream;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    log_stream.open(fs::path(out_dir) / "train_log.jsonl");
  }

  std::size_t step = 0;
  std::string ckpt_path =
      out_dir.empty() ? "" : (fs::path(out_dir) / "checkpoint.sckp").string();
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t s = 0; s < steps_per_epoch; ++s, ++step) {
      MixedBatch batch = sampler.next();
      StepRecord rec;
      try {
        rec = train_step(state, batch, cfg, step);
      } catch (const DivergenceError& e) {
        std::string last = out.checkpoint_path.empty()
                               ? "no checkpoint written yet"
                               : "last good checkpoint: " + out.checkpoint_path;
        throw DivergenceError(std::string(e.what()) + " (" + last + ")");
      }
      if (log_stream.is_open()) log_stream << rec.to_json().dump() << "\n";
      out.log.push_back(std::move(rec));
    }
    if (!ckpt_path.empty()) {
      Checkpoint ckpt = state.model.to_checkpoint();
      ckpt.meta["config"] = cfg.to_json();
      ckpt.meta["epoch"] = epoch + 1;
      ckpt.save(ckpt_path);
      out.checkpoint_path = ckpt_path;
    }
  }

  if (eval_ds) {
    bool want_attr = cfg.attr_weight > 0.0;
    bool want_seg = cfg.seg_weight > 0.0 && variant_has_seg_task(cfg.variant);
    EvalOutput ev =
        evaluate(state.model, *eval_ds, state.masks, want_attr, want_seg);
    out.report = std::move(ev.report);
    out.has_report = true;
    if (!out_dir.empty()) {
      std::ofstream rs(fs::path(out_dir) / "report.json");
      rs << out.report.to_json().dump(2) << "\n";
    }
  }
  if (model_out) *model_out = std::move(state.model);
  return out;
}

EvalOutput evaluate(Model& model, const Dataset& ds, MaskProvider& masks,
                    bool want_attr, bool want_seg, std::size_t batch) {
  model.set_training(false);
  std::size_t n = ds.count;
  std::size_t na = SynthSpec::kNumAttrs;
  std::size_t ns = SynthSpec::kNumSegLabels;
  std::size_t hw = ds.spec.h * ds.spec.w;

  EvalOutput out;
  out.sample_ids.resize(n);
  out.scores.assign(n, std::vector<double>(na, 0.0));
  std::vector<std::size_t> conf(ns * ns, 0);

  for (std::size_t lo = 0; lo < n; lo += batch) {
    std::size_t hi = std::min(n, lo + batch);
    std::size_t bsz = hi - lo;
    MixedBatch mb;
    mb.images = Tensor::zeros({bsz, 3, ds.spec.h, ds.spec.w});
    mb.seg_labels.batch = 0;
    mb.seg_labels.h = ds.spec.h;
    mb.seg_labels.w = ds.spec.w;
    mb.attr_labels.batch = 0;
    mb.attr_labels.num_attrs = na;
    for (std::size_t r = 0; r < bsz; ++r) {
      std::size_t id = lo + r;
      const double* src = ds.images.data() + id * 3 * hw;
      std::copy(src, src + 3 * hw, mb.images.data() + r * 3 * hw);
      mb.sample_ids.push_back(id);
      if (ds.kind[id] == AnnotationKind::kSeg) {
        mb.seg_indices.push_back(r);
        mb.seg_labels.batch += 1;
        mb.seg_labels.labels.insert(mb.seg_labels.labels.end(),
                                    ds.seg_labels.begin() + id * hw,
                                    ds.seg_labels.begin() + (id + 1) * hw);
      } else {
        mb.attr_indices.push_back(r);
      }
    }

    Tensor mask_stack;
    if (variant_needs_masks(model.variant)) {
      mask_stack = masks.masks_for(mb);
    }
    Model::Forward f =
        model.forward(nullptr, mb.images, mask_stack, want_seg);

    if (f.attr_logits.defined()) {
      Tensor probs = sigmoid(nullptr, f.attr_logits);
      for (std::size_t r = 0; r < bsz; ++r) {
        out.sample_ids[lo + r] = lo + r;
        for (std::size_t a = 0; a < na; ++a) {
          out.scores[lo + r][a] = probs[r * na + a];
        }
      }
    }
    if (want_seg && f.seg_logits.defined() && !mb.seg_indices.empty()) {
      // argmax over label channels per pixel
      LabelMap pred;
      pred.batch = mb.seg_indices.size();
      pred.h = ds.spec.h;
      pred.w = ds.spec.w;
      pred.labels.resize(pred.batch * hw);
      for (std::size_t r = 0; r < mb.seg_indices.size(); ++r) {
        std::size_t row = mb.seg_indices[r];
        for (std::size_t t = 0; t < hw; ++t) {
          double best = f.seg_logits[(row * ns) * hw + t];
          std::uint8_t arg = 0;
          for (std::size_t s = 1; s < ns; ++s) {
            double v = f.seg_logits[(row * ns + s) * hw + t];
            if (v > best) {
              best = v;
              arg = static_cast<std::uint8_t>(s);
            }
          }
          pred.labels[r * hw + t] = arg;
        }
      }
      LabelMap gt;
      gt.batch = pred.batch;
      gt.h = pred.h;
      gt.w = pred.w;
      gt.labels = mb.seg_labels.labels;
      std::vector<std::size_t> c = seg_confusion(pred, gt, ns);
      for (std::size_t i = 0; i < conf.size(); ++i) conf[i] += c[i];
    }
  }

  EvalReport& report = out.report;
  if (want_attr) {
    report.has_attr = true;
    const auto& names = SynthSpec::attribute_names();
    double ap_sum = 0.0, err_sum = 0.0, bal_sum = 0.0;
    for (std::size_t a = 0; a < na; ++a) {
      std::vector<double> scores;
      std::vector<std::uint8_t> labels, present;
      for (std::size_t i = 0; i < n; ++i) {
        if (ds.kind[i] != AnnotationKind::kAttr) continue;
        scores.push_back(out.scores[i][a]);
        labels.push_back(ds.attr_values[i * na + a]);
        present.push_back(ds.attr_present[i * na + a]);
      }
      AttributeMetrics m;
      m.name = names[a];
      m.ap = average_precision(scores, labels, present);
      m.classification_error = classification_error(scores, labels, present, 0.5);
      m.balanced_accuracy = balanced_accuracy(scores, labels, present, 0.5);
      ap_sum += m.ap;
      err_sum += m.classification_error;
      bal_sum += m.balanced_accuracy;
      report.per_attribute.push_back(std::move(m));
    }
    report.macro_ap = ap_sum / static_cast<double>(na);
    report.macro_classification_error = err_sum / static_cast<double>(na);
    report.macro_balanced_accuracy = bal_sum / static_cast<double>(na);
  }
  if (want_seg) {
    report.has_seg = true;
    IouAccuracy ia = iou_and_class_accuracy(conf, ns);
    const auto& names = SynthSpec::region_names();
    for (std::size_t c = 0; c < ns; ++c) {
      SegClassMetrics m;
      m.name = names[c];
      m.iou = ia.iou[c];
      m.class_accuracy = ia.class_acc[c];
      m.valid = ia.valid[c];
      report.per_class_seg.push_back(std::move(m));
    }
    report.mean_iou = ia.mean_iou;
    report.mean_class_accuracy = ia.mean_class_acc;
  }
  return out;
}

void write_predictions(const std::string& path, const Predictions& preds) {
  std::ofstream os(path);
  if (!os) throw UsageError("cannot open " + path + " for writing");
  for (std::size_t i = 0; i < preds.sample_ids.size(); ++i) {
    nlohmann::ordered_json j;
    j["sample_id"] = preds.sample_ids[i];
    j["scores"] = preds.scores[i];
    os << j.dump() << "\n";
  }
}

Predictions read_predictions(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open predictions file " + path);
  Predictions p;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw CorruptDatasetError(path + ": bad prediction line: " + e.what());
    }
    p.sample_ids.push_back(j["sample_id"].get<std::size_t>());
    p.scores.push_back(j["scores"].get<std::vector<double>>());
  }
  return p;
}

Predictions ensemble_average(const Predictions& a, const Predictions& b) {
  if (a.sample_ids != b.sample_ids) {
    throw AlignmentError("prediction files carry different sample ids");
  }
  Predictions out;
  out.sample_ids = a.sample_ids;
  out.scores.resize(a.scores.size());
  for (std::size_t i = 0; i < a.scores.size(); ++i) {
    if (a.scores[i].size() != b.scores[i].size()) {
      throw AlignmentError("prediction rows disagree on attribute count");
    }
    out.scores[i].resize(a.scores[i].size());
    for (std::size_t k = 0; k < a.scores[i].size(); ++k) {
      out.scores[i][k] = 0.5 * (a.scores[i][k] + b.scores[i][k]);
    }
  }
  return out;
}

EvalReport evaluate_predictions(const Predictions& preds, const Dataset& ds) {
  std::size_t na = SynthSpec::kNumAttrs;
  EvalReport report;
  report.has_attr = true;
  const auto& names = SynthSpec::attribute_names();
  double ap_sum = 0.0, err_sum = 0.0, bal_sum = 0.0;
  for (std::size_t a = 0; a < na; ++a) {
    std::vector<double> scores;
    std::vector<std::uint8_t> labels, present;
    for (std::size_t r = 0; r < preds.sample_ids.size(); ++r) {
      std::size_t id = preds.sample_ids[r];
      if (id >= ds.count) {
        throw AlignmentError("prediction sample id " + std::to_string(id) +
                             " outside dataset");
      }
      if (ds.kind[id] != AnnotationKind::kAttr) continue;
      scores.push_back(preds.scores[r][a]);
      labels.push_back(ds.attr_values[id * na + a]);
      present.push_back(ds.attr_present[id * na + a]);
    }
    AttributeMetrics m;
    m.name = names[a];
    m.ap = average_precision(scores, labels, present);
    m.classification_error = classification_error(scores, labels, present, 0.5);
    m.balanced_accuracy = balanced_accuracy(scores, labels, present, 0.5);
    ap_sum += m.ap;
    err_sum += m.classification_error;
    bal_sum += m.balanced_accuracy;
    report.per_attribute.push_back(std::move(m));
  }
  report.macro_ap = ap_sum / static_cast<double>(na);
  report.macro_classification_error = err_sum / static_cast<double>(na);
  report.macro_balanced_accuracy = bal_sum / static_cast<double>(na);
  return report;
}

nlohmann::ordered_json TransferReport::to_json() const {
  nlohmann::ordered_json j;
  j["steps_per_arm"] = steps_per_arm;
  j["scratch_miou"] = scratch_miou;
  j["init_from_attr_miou"] = init_from_attr_miou;
  j["joint_sa_miou"] = joint_sa_miou;
  return j;
}

TransferReport pretrain_then_transfer(const TransferConfig& cfg) {
  Dataset attr_ds = read_dataset(cfg.attr_data);
  Dataset seg_ds = read_dataset(cfg.seg_data);
  Dataset eval_ds = read_dataset(cfg.eval_data);
  fs::create_directories(cfg.out_dir);

  auto arm_config = [&](Variant v, double seg_w, double attr_w) {
    TrainConfig c;
    c.variant = v;
    c.epochs = cfg.seg_epochs;
    c.batch = cfg.batch;
    c.lr = cfg.lr;
    c.momentum = cfg.momentum;
    c.seed = cfg.seed;
    c.seg_weight = seg_w;
    c.attr_weight = attr_w;
    return c;
  };

  TransferReport report;
  {
    BatchSampler probe(seg_ds, cfg.batch, 0);
    report.steps_per_arm = cfg.seg_epochs * probe.steps_per_epoch();
  }

  // arm 1: segmentation from scratch
  TrainConfig scratch = arm_config(Variant::kBaselineGap, 1.0, 0.0);
  TrainOutput scratch_out = train(scratch, seg_ds, &eval_ds,
                                  (fs::path(cfg.out_dir) / "scratch").string());
  report.scratch_miou = scratch_out.report.mean_iou;

  // pretrain an attribute-only baseline, then reuse its trunk
  TrainConfig pre = arm_config(Variant::kBaselineGap, 0.0, 1.0);
  pre.epochs = cfg.pretrain_epochs;
  std::string pre_dir = (fs::path(cfg.out_dir) / "pretrain").string();
  TrainOutput pre_out = train(pre, attr_ds, nullptr, pre_dir);

  TrainConfig warm = arm_config(Variant::kBaselineGap, 1.0, 0.0);
  warm.init_mode = InitMode::kFromCheckpoint;
  warm.init_checkpoint = pre_out.checkpoint_path;
  TrainOutput warm_out = train(warm, seg_ds, &eval_ds,
                               (fs::path(cfg.out_dir) / "init_from_attr").string());
  report.init_from_attr_miou = warm_out.report.mean_iou;

  // arm 3: joint symbiotic training on the same data and budget
  TrainConfig joint = arm_config(Variant::kSa, 1.0, 1.0);
  TrainOutput joint_out = train(joint, seg_ds, &eval_ds,
                                (fs::path(cfg.out_dir) / "joint_sa").string());
  report.joint_sa_miou = joint_out.report.mean_iou;

  std::ofstream os(fs::path(cfg.out_dir) / "transfer_report.json");
  os << report.to_json().dump(2) << "\n";
  return report;
}

}  // namespace symbiotic
