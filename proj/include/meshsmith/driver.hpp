#pragma once

#include <functional>
#include <string>
#include <vector>

#include "meshsmith/mesh.hpp"
#include "meshsmith/model.hpp"
#include "meshsmith/smoothers.hpp"
#include "meshsmith/training.hpp"

namespace meshsmith {

/// Node-update rule: proposed position for a star's free node.
using SmootherFn = std::function<Vec2(const StarPolygon&)>;

/// Model-backed smoothers need their checkpoints loaded up front; the
/// classical rules ignore the context. The pointers must outlive the
/// returned function.
struct SmootherContext {
  const ModelParams* gmsnet = nullptr;
  const NnModel* nn = nullptr;
  OptimConfig optim;
};

/// laplacian | smart-laplacian | angle | cvt | optim | nn | gmsnet.
/// Throws UnknownSmoother for anything else, including a model-backed name
/// whose model is missing from the context.
SmootherFn make_smoother(const std::string& name, const SmootherContext& ctx = {});

struct SmoothRunResult {
  Mesh mesh;
  int sweeps = 0;
  std::vector<QualityReport> trace;  // one report per executed sweep
  double s_per_node = 0;             // update wall time / node updates
  long truncations = 0;              // proposals clipped or rejected
};

/// Sequential sweeps: interior nodes in ascending index order, every
/// proposal shift-truncated and written back immediately, so later nodes in
/// a sweep see earlier updates. A smoother error skips that node for the
/// sweep. Stops once a sweep's max displacement drops under 1e-8 x the
/// mesh bbox extent, or after max_sweeps.
SmoothRunResult smooth_mesh(const Mesh& mesh, const std::string& smoother,
                            int max_sweeps = 100,
                            const SmootherContext& ctx = {});

struct ExperimentSummary {
  std::string algo;
  QualityReport report;
  double weighted = 0;
  double s_per_node = 0;
  int sweeps = 0;
  long truncations = 0;
};

struct ExperimentResult {
  SmoothRunResult best;
  ExperimentSummary summary;
};

/// Quality row for a mesh as it stands (no smoothing, zero timing).
ExperimentSummary summarize_mesh(const std::string& algo, const Mesh& mesh);

/// Benchmark protocol: up to `runs` smoothing runs ranked by
/// weighted_quality, best returned. Every built-in smoother is
/// deterministic, so a single run stands for all of them.
ExperimentResult run_experiment(const Mesh& mesh, const std::string& smoother,
                                int runs = 10, const SmootherContext& ctx = {});

std::string experiment_csv_header();
std::string experiment_csv_row(const std::string& mesh_name,
                               const ExperimentSummary& summary);

}  // namespace meshsmith
