#include "symbiotic/cli.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "symbiotic/data.hpp"
#include "symbiotic/errors.hpp"
#include "symbiotic/gradcheck.hpp"
#include "symbiotic/mechanisms.hpp"
#include "symbiotic/training.hpp"

namespace symbiotic {
namespace cli {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Every artifact-writing command records exactly one run manifest. The
// manifest carries timestamps and is therefore excluded from byte-identity
// comparisons; all data artifacts stay deterministic.
struct RunManifest {
  nlohmann::ordered_json j;
  std::string started = utc_now();

  explicit RunManifest(const std::string& command) {
    j["command"] = command;
  }
  void finish(const std::string& path) {
    j["started_utc"] = started;
    j["finished_utc"] = utc_now();
    std::ofstream os(path);
    os << j.dump(2) << "\n";
  }
};

int cmd_gen_data(const std::string& spec_path, const std::string& out_dir,
                 std::size_t n, double split, std::uint64_t seed, bool force) {
  if (fs::exists(out_dir) && !force) {
    throw UsageError("output directory " + out_dir +
                     " already exists (use --force to overwrite)");
  }
  SynthSpec spec;
  if (!spec_path.empty()) {
    std::ifstream is(spec_path);
    if (!is) throw UsageError("cannot open spec file " + spec_path);
    nlohmann::json j;
    try {
      is >> j;
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("bad spec JSON: " + std::string(e.what()));
    }
    spec = SynthSpec::from_json(j);
  }
  spec.seed = seed;

  RunManifest manifest("gen-data");
  Dataset ds = generate(spec, n, split);
  write_dataset(ds, out_dir);

  manifest.j["spec"] = spec.to_json();
  manifest.j["n"] = n;
  manifest.j["split"] = split;
  manifest.j["seed"] = seed;
  manifest.j["dataset_manifest_sha256"] =
      sha256_file((fs::path(out_dir) / "manifest.json").string());
  manifest.j["artifacts"] = {(fs::path(out_dir) / "manifest.json").string()};
  manifest.finish((fs::path(out_dir) / "run_manifest.json").string());
  std::cout << "wrote " << ds.count << " samples to " << out_dir << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir, const std::string& eval_override) {
  std::ifstream is(config_path);
  if (!is) throw UsageError("cannot open config file " + config_path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("bad config JSON: " + std::string(e.what()));
  }
  TrainConfig cfg = TrainConfig::from_json(j);
  if (!eval_override.empty()) cfg.eval_data = eval_override;

  RunManifest manifest("train");
  Dataset train_ds = read_dataset(data_dir);
  Dataset eval_ds;
  const Dataset* eval_ptr = nullptr;
  if (!cfg.eval_data.empty()) {
    eval_ds = read_dataset(cfg.eval_data);
    eval_ptr = &eval_ds;
  } else {
    // no held-out set configured; report on the training data
    eval_ptr = &train_ds;
  }
  TrainOutput out = train(cfg, train_ds, eval_ptr, out_dir);

  manifest.j["config"] = cfg.to_json();
  manifest.j["data"] = data_dir;
  manifest.j["eval_split"] = cfg.eval_data.empty() ? "train" : "held_out";
  manifest.j["seed"] = cfg.seed;
  manifest.j["dataset_manifest_sha256"] =
      sha256_file((fs::path(data_dir) / "manifest.json").string());
  manifest.j["steps"] = out.log.size();
  if (out.has_report) {
    nlohmann::ordered_json metrics;
    if (out.report.has_attr) metrics["macro_ap"] = out.report.macro_ap;
    if (out.report.has_seg) metrics["mean_iou"] = out.report.mean_iou;
    manifest.j["final_metrics"] = metrics;
  }
  manifest.j["artifacts"] = {out.checkpoint_path,
                             (fs::path(out_dir) / "train_log.jsonl").string(),
                             (fs::path(out_dir) / "report.json").string()};
  manifest.finish((fs::path(out_dir) / "run_manifest.json").string());
  std::cout << "trained " << variant_to_string(cfg.variant) << " for "
            << out.log.size() << " steps\n";
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& preds_path,
             const std::string& data_dir, const std::string& out_path,
             const std::string& write_preds) {
  if (ckpt_path.empty() == preds_path.empty()) {
    throw UsageError("eval needs exactly one of --checkpoint or --predictions");
  }
  RunManifest manifest("eval");
  Dataset ds = read_dataset(data_dir);
  EvalReport report;
  if (!ckpt_path.empty()) {
    Checkpoint ckpt = Checkpoint::load(ckpt_path);
    Model model = Model::from_checkpoint(ckpt);
    TrainConfig cfg;
    if (ckpt.meta.contains("config")) {
      cfg = TrainConfig::from_json(ckpt.meta["config"]);
    }
    MaskProvider masks = MaskProvider::none();
    if (variant_needs_masks(model.variant)) {
      if (cfg.mask_source == MaskSource::kGroundTruthOnehot) {
        masks = MaskProvider::ground_truth(model.dims.num_seg_labels);
      } else if (cfg.mask_source == MaskSource::kPretrainedSoftmax) {
        masks = MaskProvider::pretrained(cfg.mask_checkpoint);
      } else {
        throw ConfigError("checkpoint variant needs a mask source");
      }
    }
    bool want_attr = cfg.attr_weight > 0.0;
    bool want_seg = cfg.seg_weight > 0.0 && variant_has_seg_task(model.variant);
    EvalOutput out = evaluate(model, ds, masks, want_attr, want_seg);
    report = out.report;
    if (!write_preds.empty()) {
      Predictions preds;
      preds.sample_ids = out.sample_ids;
      preds.scores = out.scores;
      write_predictions(write_preds, preds);
    }
    manifest.j["checkpoint"] = ckpt_path;
  } else {
    report = evaluate_predictions(read_predictions(preds_path), ds);
    manifest.j["predictions"] = preds_path;
  }
  {
    std::ofstream os(out_path);
    if (!os) throw UsageError("cannot open " + out_path + " for writing");
    os << report.to_json().dump(2) << "\n";
  }
  manifest.j["data"] = data_dir;
  manifest.j["dataset_manifest_sha256"] =
      sha256_file((fs::path(data_dir) / "manifest.json").string());
  nlohmann::ordered_json metrics;
  if (report.has_attr) metrics["macro_ap"] = report.macro_ap;
  if (report.has_seg) metrics["mean_iou"] = report.mean_iou;
  manifest.j["final_metrics"] = metrics;
  manifest.j["artifacts"] = {out_path};
  manifest.finish(out_path + ".manifest.json");
  std::cout << "report written to " << out_path << "\n";
  return 0;
}

int cmd_gradcheck(const std::string& module, std::uint64_t seed) {
  auto results = gradcheck::run_suite(seed, module);
  bool all_pass = true;
  std::printf("%-20s %12s %8s %6s\n", "op", "max_rel_err", "checked", "status");
  for (const auto& r : results) {
    std::printf("%-20s %12.3e %8zu %6s\n", r.name.c_str(), r.max_rel_err,
                r.checked, r.pass ? "pass" : "FAIL");
    all_pass = all_pass && r.pass;
  }
  return all_pass ? 0 : 1;
}

int cmd_footprint(const std::string& mechanism, long long ns, long long na,
                  long long c, long long h, long long w) {
  Mechanism mech = mechanism_from_string(mechanism);
  std::size_t formula = footprint_formula(mech, ns, na, c, h, w);
  std::size_t instrumented = footprint_instrumented(mech, ns, na, c, h, w);
  nlohmann::ordered_json j;
  j["mechanism"] = mechanism;
  j["formula_elements"] = formula;
  j["instrumented_elements"] = instrumented;
  j["match"] = formula == instrumented;
  std::cout << j.dump() << "\n";
  if (formula != instrumented) {
    std::cerr << "footprint mismatch: formula " << formula << " vs instrumented "
              << instrumented << "\n";
    return 1;
  }
  return 0;
}

int cmd_inspect_phi(const std::string& ckpt_path, const std::string& which,
                    const std::string& out_path) {
  if (which != "phi_s" && which != "phi_a") {
    throw UsageError("--which must be phi_s or phi_a");
  }
  RunManifest manifest("inspect-phi");
  Checkpoint ckpt = Checkpoint::load(ckpt_path);
  Model model = Model::from_checkpoint(ckpt);
  if (model.variant != Variant::kSa) {
    throw VersionError("checkpoint variant " + variant_to_string(model.variant) +
                       " carries no embedding kernels");
  }
  const Conv2dParams& phi =
      which == "phi_s" ? model.sa.phi_s.phi : model.sa.phi_a.phi;
  auto matrix = inspect_phi(phi);
  std::vector<std::string> rows;
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    rows.push_back("ch" + std::to_string(i));
  }
  const auto& cols = which == "phi_s" ? SynthSpec::region_names()
                                      : SynthSpec::attribute_names();
  std::ofstream os(out_path);
  if (!os) throw UsageError("cannot open " + out_path + " for writing");
  write_phi_csv(os, matrix, rows, cols);
  manifest.j["checkpoint"] = ckpt_path;
  manifest.j["which"] = which;
  manifest.j["rows"] = matrix.size();
  manifest.j["artifacts"] = {out_path};
  manifest.finish(out_path + ".manifest.json");
  std::cout << "wrote " << matrix.size() << " rows to " << out_path << "\n";
  return 0;
}

int cmd_ensemble(const std::string& a_path, const std::string& b_path,
                 const std::string& out_path) {
  RunManifest manifest("ensemble");
  Predictions merged =
      ensemble_average(read_predictions(a_path), read_predictions(b_path));
  write_predictions(out_path, merged);
  manifest.j["a"] = a_path;
  manifest.j["b"] = b_path;
  manifest.j["rows"] = merged.sample_ids.size();
  manifest.j["artifacts"] = {out_path};
  manifest.finish(out_path + ".manifest.json");
  std::cout << "averaged " << merged.sample_ids.size() << " predictions\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"semantic-segmentation-guided attribute prediction toolkit"};
  app.require_subcommand(1);

  // gen-data
  std::string gd_spec, gd_out;
  std::size_t gd_n = 1000;
  double gd_split = 0.5;
  std::uint64_t gd_seed = 0;
  bool gd_force = false;
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  gen->add_option("--spec", gd_spec, "generator spec JSON file");
  gen->add_option("--out", gd_out, "output directory")->required();
  gen->add_option("--n", gd_n, "sample count")->required();
  gen->add_option("--split", gd_split, "fraction of seg-annotated samples")
      ->required();
  gen->add_option("--seed", gd_seed, "master seed")->required();
  gen->add_flag("--force", gd_force, "overwrite an existing directory");

  // train
  std::string tr_config, tr_data, tr_out, tr_eval;
  auto* tr = app.add_subcommand("train", "train a model variant");
  tr->add_option("--config", tr_config, "TrainConfig JSON file")->required();
  tr->add_option("--data", tr_data, "training dataset directory")->required();
  tr->add_option("--out", tr_out, "output directory")->required();
  tr->add_option("--eval-data", tr_eval, "held-out dataset directory override");

  // eval
  std::string ev_ckpt, ev_preds, ev_data, ev_out, ev_write_preds;
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint or predictions");
  ev->add_option("--checkpoint", ev_ckpt, "model checkpoint");
  ev->add_option("--predictions", ev_preds, "prediction JSONL file");
  ev->add_option("--data", ev_data, "dataset directory")->required();
  ev->add_option("--out", ev_out, "report JSON path")->required();
  ev->add_option("--write-preds", ev_write_preds, "also write predictions JSONL");

  // gradcheck
  std::string gc_module = "all";
  std::uint64_t gc_seed = 0;
  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  gc->add_option("--module", gc_module, "op name or 'all'");
  gc->add_option("--seed", gc_seed, "random seed");

  // footprint
  std::string fp_mech;
  long long fp_ns = 0, fp_na = 0, fp_c = 0, fp_h = 0, fp_w = 0;
  auto* fp = app.add_subcommand("footprint", "mechanism memory accounting");
  fp->add_option("--mechanism", fp_mech, "ssp or sa")->required();
  fp->add_option("--ns", fp_ns, "semantic label count")->required();
  fp->add_option("--na", fp_na, "attribute count")->required();
  fp->add_option("--c", fp_c, "channel count")->required();
  fp->add_option("--h", fp_h, "height")->required();
  fp->add_option("--w", fp_w, "width")->required();

  // inspect-phi
  std::string ip_ckpt, ip_which, ip_out;
  auto* ip = app.add_subcommand("inspect-phi", "embedding kernel CSV");
  ip->add_option("--checkpoint", ip_ckpt, "model checkpoint")->required();
  ip->add_option("--which", ip_which, "phi_s or phi_a")->required();
  ip->add_option("--out", ip_out, "CSV output path")->required();

  // ensemble
  std::string en_a, en_b, en_out;
  auto* en = app.add_subcommand("ensemble", "average two prediction files");
  en->add_option("--a", en_a, "first predictions file")->required();
  en->add_option("--b", en_b, "second predictions file")->required();
  en->add_option("--out", en_out, "output predictions file")->required();

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) {
      return cmd_gen_data(gd_spec, gd_out, gd_n, gd_split, gd_seed, gd_force);
    }
    if (tr->parsed()) return cmd_train(tr_config, tr_data, tr_out, tr_eval);
    if (ev->parsed()) {
      return cmd_eval(ev_ckpt, ev_preds, ev_data, ev_out, ev_write_preds);
    }
    if (gc->parsed()) return cmd_gradcheck(gc_module, gc_seed);
    if (fp->parsed()) {
      return cmd_footprint(fp_mech, fp_ns, fp_na, fp_c, fp_h, fp_w);
    }
    if (ip->parsed()) return cmd_inspect_phi(ip_ckpt, ip_which, ip_out);
    if (en->parsed()) return cmd_ensemble(en_a, en_b, en_out);
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    // data/shape/value problems share one exit code
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace cli
}  // namespace symbiotic
