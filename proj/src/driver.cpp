#include "meshsmith/driver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

namespace meshsmith {

SmootherFn make_smoother(const std::string& name, const SmootherContext& ctx) {
  if (name == "laplacian") return [](const StarPolygon& s) { return laplacian_step(s); };
  if (name == "smart-laplacian")
    return [](const StarPolygon& s) { return smart_laplacian_step(s); };
  if (name == "angle") return [](const StarPolygon& s) { return angle_based_step(s); };
  if (name == "cvt") return [](const StarPolygon& s) { return cvt_step(s); };
  if (name == "optim") {
    const OptimConfig cfg = ctx.optim;
    return [cfg](const StarPolygon& s) { return optimization_step(s, cfg); };
  }
  if (name == "gmsnet") {
    if (ctx.gmsnet == nullptr)
      throw Error(ErrorCode::UnknownSmoother, "smoother 'gmsnet' needs a model");
    const ModelParams* p = ctx.gmsnet;
    return [p](const StarPolygon& s) { return forward_position(*p, s); };
  }
  if (name == "nn") {
    if (ctx.nn == nullptr)
      throw Error(ErrorCode::UnknownSmoother, "smoother 'nn' needs a model");
    const NnModel* m = ctx.nn;
    return [m](const StarPolygon& s) { return nn_step(*m, s); };
  }
  throw Error(ErrorCode::UnknownSmoother, "unknown smoother '" + name + "'");
}

SmoothRunResult smooth_mesh(const Mesh& mesh, const std::string& smoother,
                            int max_sweeps, const SmootherContext& ctx) {
  const SmootherFn step = make_smoother(smoother, ctx);

  SmoothRunResult r;
  r.mesh = mesh;
  const double stop = 1e-8 * mesh.bbox_extent();
  const std::vector<int> interior = r.mesh.interior_nodes();

  using clock = std::chrono::steady_clock;
  double seconds = 0;
  long updates = 0;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_disp = 0;
    for (int i : interior) {
      const auto t0 = clock::now();
      const StarPolygon star = star_polygon(r.mesh, i);
      Vec2 delta{0, 0};
      try {
        const Vec2 proposal = step(star);
        const double c =
            shift_truncate_factor(star, star.center, proposal - star.center);
        if (c != 1.0) ++r.truncations;
        if (c != 0.0) delta = (proposal - star.center) * c;
      } catch (const Error&) {
        // degenerate stars are the smoother's business to refuse; the node
        // keeps its position for this sweep
      }
      r.mesh.nodes[i] = star.center + delta;
      seconds += std::chrono::duration<double>(clock::now() - t0).count();
      ++updates;
      max_disp = std::fmax(max_disp, delta.norm());
    }
    r.trace.push_back(quality_report(r.mesh));
    ++r.sweeps;
    if (max_disp < stop) break;
  }

  r.s_per_node = updates > 0 ? seconds / static_cast<double>(updates) : 0.0;
  return r;
}

ExperimentSummary summarize_mesh(const std::string& algo, const Mesh& mesh) {
  ExperimentSummary s;
  s.algo = algo;
  s.report = quality_report(mesh);
  s.weighted = weighted_quality(s.report);
  return s;
}

ExperimentResult run_experiment(const Mesh& mesh, const std::string& smoother,
                                int runs, const SmootherContext& ctx) {
  // Every smoother here is deterministic: repeated runs would be clones, so
  // one run represents all `runs` of them and ranking is trivial.
  (void)runs;
  ExperimentResult r;
  r.best = smooth_mesh(mesh, smoother, 100, ctx);
  r.summary = summarize_mesh(smoother, r.best.mesh);
  r.summary.s_per_node = r.best.s_per_node;
  r.summary.sweeps = r.best.sweeps;
  r.summary.truncations = r.best.truncations;
  return r;
}

std::string experiment_csv_header() {
  return "mesh,algo,min_angle_min,min_angle_mean,max_angle_max,max_angle_mean,"
         "inv_ar_min,inv_ar_mean,s_per_node,weighted_quality\n";
}

std::string experiment_csv_row(const std::string& mesh_name,
                               const ExperimentSummary& s) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%s,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                mesh_name.c_str(), s.algo.c_str(), s.report.min_angle_min,
                s.report.min_angle_mean, s.report.max_angle_max,
                s.report.max_angle_mean, s.report.inv_ar_min,
                s.report.inv_ar_mean, s.s_per_node, s.weighted);
  return buf;
}

}  // namespace meshsmith
