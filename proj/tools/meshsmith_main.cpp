#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "meshsmith/delaunay.hpp"
#include "meshsmith/driver.hpp"
#include "meshsmith/svg.hpp"
#include "meshsmith/training.hpp"

namespace ms = meshsmith;

namespace {

// --seed beats MESHSMITH_SEED beats the built-in default
std::uint64_t effective_seed(const CLI::Option* opt, std::uint64_t flag_value) {
  if (opt->count() > 0) return flag_value;
  if (const char* env = std::getenv("MESHSMITH_SEED"))
    return std::strtoull(env, nullptr, 10);
  return flag_value;
}

std::string basename_of(const std::string& path) {
  return std::filesystem::path(path).filename().string();
}

void print_table(const std::string& mesh_name,
                 const std::vector<ms::ExperimentSummary>& rows) {
  std::printf("%-14s %-16s %8s %8s %8s %8s %9s %9s %10s %8s\n", "mesh", "algo",
              "a_min", "a_mean", "b_max", "b_mean", "invq_min", "invq_mean",
              "s/node", "q_hat");
  for (const ms::ExperimentSummary& s : rows)
    std::printf("%-14s %-16s %8.3f %8.3f %8.3f %8.3f %9.4f %9.4f %10.3e %8.4f\n",
                mesh_name.c_str(), s.algo.c_str(), s.report.min_angle_min,
                s.report.min_angle_mean, s.report.max_angle_max,
                s.report.max_angle_mean, s.report.inv_ar_min,
                s.report.inv_ar_mean, s.s_per_node, s.weighted);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ms::Error(ms::ErrorCode::IoError, "cannot write '" + path + "'");
  out << text;
  if (!out) throw ms::Error(ms::ErrorCode::IoError, "write failed on '" + path + "'");
}

ms::SmootherContext load_context(const std::string& algo,
                                 const std::string& model_path,
                                 ms::ModelParams& gparams, ms::NnModel& nmodel) {
  ms::SmootherContext ctx;
  if (algo == "gmsnet") {
    gparams = ms::load_checkpoint(model_path);
    ctx.gmsnet = &gparams;
  } else if (algo == "nn") {
    nmodel = ms::load_nn_checkpoint(model_path);
    ctx.nn = &nmodel;
    for (int d : nmodel.missing_degrees())
      std::fprintf(stderr, "warning: degree %d has no trained net, ring-mean fallback\n", d);
  }
  return ctx;
}

const std::vector<std::string> kAlgoNames = {
    "laplacian", "smart-laplacian", "angle", "cvt", "optim", "nn", "gmsnet"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"meshsmith: 2D triangular mesh smoothing toolkit"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "generate a Delaunay mesh dataset");
  std::string gen_out;
  ms::DatasetSpec spec;
  std::string gen_split = "6:2:2";
  std::uint64_t gen_seed = 0;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--count", spec.mesh_count, "number of meshes");
  gen->add_option("--nodes-min", spec.node_count_min, "min nodes per mesh");
  gen->add_option("--nodes-max", spec.node_count_max, "max nodes per mesh");
  gen->add_option("--side-min", spec.side_min, "min square side");
  gen->add_option("--side-max", spec.side_max, "max square side");
  gen->add_option("--split", gen_split, "train:val:test ratio");
  auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "RNG seed");
  gen->callback([&] {
    int a = 0, b = 0, c = 0;
    if (std::sscanf(gen_split.c_str(), "%d:%d:%d", &a, &b, &c) != 3 || a < 0 ||
        b < 0 || c < 0 || a + b + c <= 0)
      throw CLI::ValidationError("--split", "expected three ratios like 6:2:2");
    spec.split = {a, b, c};
    spec.seed = effective_seed(gen_seed_opt, gen_seed);
    ms::Dataset ds = ms::build_dataset(spec);
    ms::write_dataset(ds, spec, gen_out);
    std::printf("wrote %d meshes to %s (train/val/test = %zu/%zu/%zu)\n",
                spec.mesh_count, gen_out.c_str(), ds.train.size(),
                ds.val.size(), ds.test.size());
  });

  // train
  auto* train = app.add_subcommand("train", "train the graph smoothing model");
  std::string tr_dataset, tr_out, tr_trace, tr_loss = "metric";
  ms::TrainConfig tcfg;
  train->add_option("--dataset", tr_dataset, "dataset manifest")->required();
  train->add_option("--out", tr_out, "checkpoint path")->required();
  train->add_option("--trace", tr_trace, "trace CSV path (default <out>.trace.csv)");
  train->add_option("--loss", tr_loss, "training objective")
      ->check(CLI::IsMember({"metric", "minmax", "ar", "cos"}));
  train->add_option("--epochs", tcfg.epochs, "epochs")->check(CLI::PositiveNumber);
  train->add_option("--batch", tcfg.batch_size, "nodes per mesh per epoch")
      ->check(CLI::PositiveNumber);
  train->add_option("--hidden", tcfg.hidden_dim, "hidden width");
  train->add_option("--lr", tcfg.initial_lr, "initial learning rate");
  auto* tr_seed_opt = train->add_option("--seed", tcfg.seed, "RNG seed");
  train->callback([&] {
    tcfg.loss_kind = ms::parse_loss_kind(tr_loss);
    tcfg.seed = effective_seed(tr_seed_opt, tcfg.seed);
    const ms::Dataset ds = ms::load_dataset(tr_dataset);
    const ms::TrainResult r = ms::train_gmsnet(ds, tcfg);
    for (const ms::EpochStats& e : r.trace.epochs)
      std::fprintf(stderr, "epoch %d train %.6g val %.6g lr %.3g trunc %ld\n",
                   e.epoch, e.train_loss, e.val_loss, e.lr, e.truncations);
    ms::save_checkpoint(r.params, tr_out);
    const std::string trace_path =
        tr_trace.empty() ? tr_out + ".trace.csv" : tr_trace;
    write_text(trace_path, ms::trace_to_csv(r.trace));
    double best = r.trace.epochs.front().val_loss;
    int best_epoch = 1;
    for (const ms::EpochStats& e : r.trace.epochs)
      if (e.val_loss < best) best = e.val_loss, best_epoch = e.epoch;
    std::printf("best validation loss %.17g (epoch %d)\n", best, best_epoch);
    std::printf("checkpoint %s\ntrace %s\n", tr_out.c_str(), trace_path.c_str());
  });

  // train-nn
  auto* tnn = app.add_subcommand("train-nn", "train the supervised baseline");
  std::string nn_dataset, nn_out;
  ms::NnTrainConfig ncfg;
  tnn->add_option("--dataset", nn_dataset, "dataset manifest")->required();
  tnn->add_option("--out", nn_out, "checkpoint path")->required();
  tnn->add_option("--hidden", ncfg.hidden, "hidden width");
  tnn->add_option("--epochs", ncfg.epochs, "Adam steps per degree")
      ->check(CLI::PositiveNumber);
  tnn->add_option("--lr", ncfg.lr, "learning rate");
  auto* nn_seed_opt = tnn->add_option("--seed", ncfg.seed, "RNG seed");
  tnn->callback([&] {
    ncfg.seed = effective_seed(nn_seed_opt, ncfg.seed);
    const ms::Dataset ds = ms::load_dataset(nn_dataset);
    const std::vector<ms::LabeledStar> labels = ms::nn_generate_labels(ds.train);
    const ms::NnModel model = ms::train_nn_baseline(labels, ncfg);
    for (int d : model.missing_degrees())
      std::fprintf(stderr, "warning: degree %d has no samples, ring-mean fallback\n", d);
    ms::save_nn_checkpoint(model, nn_out);
    const int trained =
        static_cast<int>(model.nets.size() - model.missing_degrees().size());
    std::printf("trained %d degree nets on %zu labels\ncheckpoint %s\n",
                trained, labels.size(), nn_out.c_str());
  });

  // smooth
  auto* smooth = app.add_subcommand("smooth", "smooth a mesh");
  std::string sm_mesh, sm_algo, sm_out, sm_model;
  int sm_sweeps = 100;
  smooth->add_option("--mesh", sm_mesh, "input .m2d")->required();
  smooth->add_option("--algo", sm_algo, "smoother")
      ->required()
      ->check(CLI::IsMember(kAlgoNames));
  smooth->add_option("--out", sm_out, "output .m2d")->required();
  smooth->add_option("--sweeps", sm_sweeps, "sweep cap")->check(CLI::PositiveNumber);
  smooth->add_option("--model", sm_model, "checkpoint for nn/gmsnet");
  smooth->callback([&] {
    if ((sm_algo == "gmsnet" || sm_algo == "nn") && sm_model.empty())
      throw CLI::ValidationError("--model",
                                 "required for algo '" + sm_algo + "'");
    const ms::Mesh mesh = ms::load_m2d(sm_mesh);
    ms::ModelParams gparams;
    ms::NnModel nmodel;
    const ms::SmootherContext ctx = load_context(sm_algo, sm_model, gparams, nmodel);
    const ms::SmoothRunResult r = ms::smooth_mesh(mesh, sm_algo, sm_sweeps, ctx);
    ms::save_m2d(r.mesh, sm_out);
    std::printf("sweeps %d\nweighted_quality %.17g -> %.17g\n", r.sweeps,
                ms::weighted_quality(ms::quality_report(mesh)),
                ms::weighted_quality(ms::quality_report(r.mesh)));
  });

  // bench
  auto* bench = app.add_subcommand("bench", "run the benchmark protocol");
  std::string be_mesh, be_algo, be_model, be_csv;
  int be_runs = 10;
  bench->add_option("--mesh", be_mesh, "input .m2d")->required();
  bench->add_option("--algo", be_algo, "smoother")
      ->required()
      ->check(CLI::IsMember(kAlgoNames));
  bench->add_option("--runs", be_runs, "runs to rank")->check(CLI::PositiveNumber);
  bench->add_option("--model", be_model, "checkpoint for nn/gmsnet");
  bench->add_option("--csv", be_csv, "also write the CSV rows to a file");
  bench->callback([&] {
    if ((be_algo == "gmsnet" || be_algo == "nn") && be_model.empty())
      throw CLI::ValidationError("--model",
                                 "required for algo '" + be_algo + "'");
    const ms::Mesh mesh = ms::load_m2d(be_mesh);
    ms::ModelParams gparams;
    ms::NnModel nmodel;
    const ms::SmootherContext ctx = load_context(be_algo, be_model, gparams, nmodel);
    const ms::ExperimentResult r = ms::run_experiment(mesh, be_algo, be_runs, ctx);
    const std::string name = basename_of(be_mesh);
    const ms::ExperimentSummary input = ms::summarize_mesh("input", mesh);
    print_table(name, {input, r.summary});
    std::string csv = ms::experiment_csv_header();
    csv += ms::experiment_csv_row(name, input);
    csv += ms::experiment_csv_row(name, r.summary);
    std::printf("\n%s", csv.c_str());
    if (!be_csv.empty()) write_text(be_csv, csv);
  });

  // render
  auto* render = app.add_subcommand("render", "render a mesh to SVG");
  std::string re_mesh, re_out;
  render->add_option("--mesh", re_mesh, "input .m2d")->required();
  render->add_option("--out", re_out, "output .svg")->required();
  render->callback([&] { ms::render_svg(ms::load_m2d(re_mesh), re_out); });

  // report
  auto* report = app.add_subcommand("report", "print quality metrics and histogram");
  std::string rp_mesh;
  report->add_option("--mesh", rp_mesh, "input .m2d")->required();
  report->callback([&] {
    const ms::Mesh mesh = ms::load_m2d(rp_mesh);
    const ms::QualityReport q = ms::quality_report(mesh);
    std::printf("metric,value\n");
    std::printf("element_count,%ld\n", q.element_count);
    std::printf("min_angle_min,%.17g\n", q.min_angle_min);
    std::printf("min_angle_mean,%.17g\n", q.min_angle_mean);
    std::printf("max_angle_max,%.17g\n", q.max_angle_max);
    std::printf("max_angle_mean,%.17g\n", q.max_angle_mean);
    std::printf("inv_ar_min,%.17g\n", q.inv_ar_min);
    std::printf("inv_ar_mean,%.17g\n", q.inv_ar_mean);
    std::printf("weighted_quality,%.17g\n", ms::weighted_quality(q));
    std::printf("\nbin_lo,bin_hi,count\n");
    for (int b = 0; b < 20; ++b)
      std::printf("%g,%g,%ld\n", 0.05 * b, 0.05 * (b + 1), q.histogram[b]);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const ms::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
