#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "meshsmith/delaunay.hpp"
#include "meshsmith/driver.hpp"

using namespace meshsmith;

namespace {

Mesh square_with_center(const Vec2& center) {
  Mesh m;
  m.nodes = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}, center};
  m.triangles = {{0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4}};
  m.fixed = {true, true, true, true, false};
  return m;
}

bool same_nodes(const Mesh& a, const Mesh& b) {
  if (a.node_count() != b.node_count()) return false;
  for (int i = 0; i < a.node_count(); ++i)
    if (a.nodes[i].x != b.nodes[i].x || a.nodes[i].y != b.nodes[i].y)
      return false;
  return true;
}

}  // namespace

TEST_CASE("make_smoother rejects unknown names and missing models") {
  try {
    make_smoother("bogus");
    FAIL("expected UnknownSmoother");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownSmoother);
  }
  CHECK_THROWS_AS(make_smoother("gmsnet"), Error);
  CHECK_THROWS_AS(make_smoother("nn"), Error);
  CHECK_THROWS_AS(smooth_mesh(square_with_center({0.2, 0.1}), "bogus"), Error);
}

TEST_CASE("laplacian fixes a single interior node at the ring centroid") {
  const Mesh m = square_with_center({0.4, -0.3});
  const SmoothRunResult r = smooth_mesh(m, "laplacian");
  CHECK(r.sweeps <= 3);
  CHECK(r.mesh.nodes[4].x == 0.0);
  CHECK(r.mesh.nodes[4].y == 0.0);
  CHECK(r.trace.size() == static_cast<size_t>(r.sweeps));
  CHECK(r.mesh.negative_element_count() == 0);
  CHECK(r.s_per_node > 0.0);
}

TEST_CASE("sweeps are sequential, not simultaneous") {
  std::vector<Vec2> pts = {{0, 0}, {1, 0}, {2, 0}, {3, 0}, {3, 1},
                           {2, 1}, {1, 1}, {0, 1}, {1.4, 0.5}, {1.7, 0.5}};
  const Mesh m = delaunay_triangulate(pts);
  const std::vector<int> interior = m.interior_nodes();
  REQUIRE(interior == std::vector<int>{8, 9});

  // by hand, in index order, each update visible to the next
  Mesh seq = m;
  for (int i : interior) {
    const StarPolygon s = star_polygon(seq, i);
    seq.nodes[i] = s.center + shift_truncate(s, laplacian_step(s) - s.center);
  }
  const SmoothRunResult r = smooth_mesh(m, "laplacian", 1);
  CHECK(same_nodes(r.mesh, seq));

  // node 9's ring contains node 8, so the all-at-once update differs
  const StarPolygon s9 = star_polygon(m, 9);
  const Vec2 jacobi9 = laplacian_step(s9);
  CHECK(seq.nodes[9].x != jacobi9.x);
}

TEST_CASE("classical smoothers improve quality and never break the mesh") {
  const Mesh m = random_square_mesh(150, 3.0, 17);
  const double before = weighted_quality(quality_report(m));
  for (const char* name : {"laplacian", "smart-laplacian", "angle", "cvt"}) {
    CAPTURE(name);
    const SmoothRunResult r = smooth_mesh(m, name);
    CHECK(r.sweeps <= 100);
    CHECK(r.trace.size() == static_cast<size_t>(r.sweeps));
    CHECK(r.mesh.negative_element_count() == 0);
    CHECK(weighted_quality(quality_report(r.mesh)) > before);
    // the trace's last entry is the final state
    CHECK(r.trace.back().min_angle_min ==
          quality_report(r.mesh).min_angle_min);
  }
}

TEST_CASE("optimization smoother improves quality within a few sweeps") {
  const Mesh m = random_square_mesh(100, 2.0, 23);
  const double before = weighted_quality(quality_report(m));
  const SmoothRunResult r = smooth_mesh(m, "optim", 5);
  CHECK(r.mesh.negative_element_count() == 0);
  CHECK(weighted_quality(quality_report(r.mesh)) > before);
}

TEST_CASE("zero-head graph model is the identity smoother") {
  ModelParams params = init_params(16, 3);
  params.mlp_W2 = ad::Tensor(16, 2);
  params.mlp_b2 = ad::Tensor(1, 2);
  SmootherContext ctx;
  ctx.gmsnet = &params;

  const Mesh m = random_square_mesh(80, 2.0, 9);
  const SmoothRunResult r = smooth_mesh(m, "gmsnet", 100, ctx);
  CHECK(r.sweeps == 1);  // nothing moved, early stop after the first sweep
  CHECK(same_nodes(r.mesh, m));
  CHECK(r.truncations == 0);
}

TEST_CASE("nn smoother with no trained nets falls back to the ring mean") {
  NnModel empty;  // degree range 3..9, no nets at all
  SmootherContext ctx;
  ctx.nn = &empty;
  const Mesh m = random_square_mesh(60, 2.0, 31);
  const SmoothRunResult nn = smooth_mesh(m, "nn", 2, ctx);
  const SmoothRunResult lap = smooth_mesh(m, "laplacian", 2);
  CHECK(same_nodes(nn.mesh, lap.mesh));
}

TEST_CASE("smoother errors skip the node instead of aborting the run") {
  // the sliver fan makes every cvt sweep throw DegenerateTriangle
  Mesh sliver;
  sliver.nodes = {{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 1e-13}};
  sliver.triangles = {{0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4}};
  sliver.fixed = {true, true, true, true, false};
  REQUIRE(sliver.negative_element_count() > 0);

  const SmoothRunResult r = smooth_mesh(sliver, "cvt", 2);
  CHECK(r.mesh.nodes[4].x == 0.5);
  CHECK(r.mesh.nodes[4].y == 1e-13);
  CHECK(r.sweeps == 1);  // skipped node means zero displacement, early stop

  // laplacian proposes the safe centroid and repairs the sliver
  const SmoothRunResult fix = smooth_mesh(sliver, "laplacian", 5);
  CHECK(fix.mesh.negative_element_count() == 0);
}

TEST_CASE("experiment summary mirrors the best mesh's quality report") {
  const Mesh m = random_square_mesh(90, 2.0, 41);
  const ExperimentResult r = run_experiment(m, "smart-laplacian", 10);
  const QualityReport q = quality_report(r.best.mesh);
  CHECK(r.summary.algo == "smart-laplacian");
  CHECK(r.summary.report.min_angle_min == q.min_angle_min);
  CHECK(r.summary.report.max_angle_mean == q.max_angle_mean);
  CHECK(r.summary.report.inv_ar_min == q.inv_ar_min);
  CHECK(r.summary.weighted == weighted_quality(q));
  CHECK(r.summary.sweeps == r.best.sweeps);

  // a deterministic smoother: the experiment's best equals a direct run
  const SmoothRunResult direct = smooth_mesh(m, "smart-laplacian", 100);
  CHECK(same_nodes(r.best.mesh, direct.mesh));

  const ExperimentSummary base = summarize_mesh("input", m);
  CHECK(base.weighted == weighted_quality(quality_report(m)));
  CHECK(base.s_per_node == 0.0);

  CHECK(experiment_csv_header() ==
        "mesh,algo,min_angle_min,min_angle_mean,max_angle_max,max_angle_mean,"
        "inv_ar_min,inv_ar_mean,s_per_node,weighted_quality\n");
  const std::string row = experiment_csv_row("square", r.summary);
  CHECK(row.substr(0, 22) == "square,smart-laplacian");
  CHECK(row.back() == '\n');
}
