#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "symbiotic/data.hpp"
#include "symbiotic/metrics.hpp"
#include "symbiotic/model.hpp"

namespace symbiotic {

enum class MaskSource { kNone, kGroundTruthOnehot, kPretrainedSoftmax };
enum class InitMode { kScratch, kFromCheckpoint };

struct TrainConfig {
  Variant variant = Variant::kBaselineGap;
  std::size_t epochs = 1;
  std::size_t batch = 16;
  double lr = 0.05;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  double seg_weight = 1.0;
  double attr_weight = 1.0;
  std::vector<double> attr_pos_weight;  // empty = all ones
  MaskSource mask_source = MaskSource::kNone;
  std::string mask_checkpoint;
  InitMode init_mode = InitMode::kScratch;
  std::string init_checkpoint;
  std::string eval_data;  // held-out dataset directory, may be empty
  std::size_t sa_kernel = 3;
  BackboneConfig trunk;

  // UsageError on missing/ill-typed keys; ConfigError on invalid values.
  static TrainConfig from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
  void validate() const;
};

struct StepRecord {
  std::size_t step = 0;
  std::optional<double> l_s;
  std::optional<double> l_a;
  double total = 0.0;
  double grad_norm = 0.0;

  nlohmann::ordered_json to_json() const;
};

// v <- momentum * v + g; theta <- theta - lr * v. Consumes param.grad.
void sgd_update(Tensor& param, Tensor& velocity, double lr, double momentum);

class SgdOptimizer {
 public:
  SgdOptimizer(std::vector<std::pair<std::string, Tensor>> params, double lr,
               double momentum);
  void step();        // update from accumulated grads, then zero them
  double grad_norm() const;

 private:
  std::vector<std::pair<std::string, Tensor>> params_;
  std::vector<Tensor> velocity_;
  double lr_, momentum_;
};

// Supplies image-resolution mask stacks for the mask-consuming variants:
// one-hot ground truth (every batch row must carry a label map) or the
// frozen softmax output of a previously trained two-task checkpoint.
class MaskProvider {
 public:
  static MaskProvider none();
  static MaskProvider ground_truth(std::size_t num_labels);
  static MaskProvider pretrained(const std::string& checkpoint_path);

  Tensor masks_for(const MixedBatch& batch);
  MaskSource source() const { return source_; }

 private:
  MaskSource source_ = MaskSource::kNone;
  std::size_t num_labels_ = 0;
  std::shared_ptr<Model> frozen_;
};

struct TrainState {
  Model model;
  SgdOptimizer optimizer;
  MaskProvider masks;
  Tensor pos_weight;  // [N_A]
};

// One forward/backward/update over a batch; loss terms are routed by the
// batch's annotation content and the configured task weights.
StepRecord train_step(TrainState& state, const MixedBatch& batch,
                      const TrainConfig& cfg, std::size_t step_index);

struct TrainOutput {
  std::vector<StepRecord> log;
  EvalReport report;              // filled when eval dataset supplied
  bool has_report = false;
  std::string checkpoint_path;    // last checkpoint written, if any
};

// Full run: deterministic batches, per-epoch checkpoints when out_dir is
// non-empty, JSON-lines step log, final evaluation on the held-out set.
TrainOutput train(const TrainConfig& cfg, const Dataset& train_ds,
                  const Dataset* eval_ds, const std::string& out_dir,
                  Model* model_out = nullptr);

struct EvalOutput {
  EvalReport report;
  std::vector<std::size_t> sample_ids;       // every dataset sample, in order
  std::vector<std::vector<double>> scores;   // sigmoid probabilities [N][N_A]
};

EvalOutput evaluate(Model& model, const Dataset& ds, MaskProvider& masks,
                    bool want_attr, bool want_seg, std::size_t batch = 64);

struct Predictions {
  std::vector<std::size_t> sample_ids;
  std::vector<std::vector<double>> scores;
};

void write_predictions(const std::string& path, const Predictions& preds);
Predictions read_predictions(const std::string& path);
// Elementwise mean of aligned prediction files; AlignmentError on id mismatch.
Predictions ensemble_average(const Predictions& a, const Predictions& b);

// Evaluate attribute metrics for a prediction file against dataset labels
// (probability scores, threshold 0.5).
EvalReport evaluate_predictions(const Predictions& preds, const Dataset& ds);

struct TransferConfig {
  std::string attr_data;  // attribute-rich dataset for pretraining
  std::string seg_data;   // low-data segmentation dataset (mixed)
  std::string eval_data;  // held-out dataset with segmentation labels
  std::string out_dir;
  std::size_t pretrain_epochs = 4;
  std::size_t seg_epochs = 6;
  std::size_t batch = 16;
  double lr = 0.05;
  double momentum = 0.9;
  std::uint64_t seed = 0;
};

struct TransferReport {
  double scratch_miou = 0.0;
  double init_from_attr_miou = 0.0;
  double joint_sa_miou = 0.0;
  std::size_t steps_per_arm = 0;
  nlohmann::ordered_json to_json() const;
};

// Three arms under identical step budgets: segmentation from scratch,
// segmentation initialized from an attribute-pretrained trunk, and joint
// symbiotic training.
TransferReport pretrain_then_transfer(const TransferConfig& cfg);

}  // namespace symbiotic
