#include "srcid/mesh.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <sstream>

namespace srcid {
namespace {

// Exhaustive point location: barycentric coordinates against every triangle.
std::optional<std::size_t> brute_force_locate(const StructuredTriMesh& mesh, Point2 p, std::array<double, 3>& bary) {
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const Point2 a = mesh.nodes()[tri[0]], b = mesh.nodes()[tri[1]], c = mesh.nodes()[tri[2]];
    const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    const double l1 = ((p.x - a.x) * (c.y - a.y) - (c.x - a.x) * (p.y - a.y)) / det;
    const double l2 = ((b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y)) / det;
    const double l0 = 1.0 - l1 - l2;
    if (l0 >= -1e-14 && l1 >= -1e-14 && l2 >= -1e-14) {
      bary = {l0, l1, l2};
      return t;
    }
  }
  return std::nullopt;
}

TEST(Mesh, SmallestMesh) {
  const auto mesh = build_mesh(1);
  EXPECT_EQ(mesh.num_nodes(), 4u);
  EXPECT_EQ(mesh.num_triangles(), 2u);
  EXPECT_EQ(mesh.boundary_edges().size(), 4u);
}

TEST(Mesh, RejectsZeroDivisions) { EXPECT_THROW(build_mesh(0), ConfigError); }

TEST(Mesh, MeshSizeOfFinestExperimentMesh) {
  const auto mesh = build_mesh(128);
  EXPECT_DOUBLE_EQ(mesh.h(), std::sqrt(2.0) * std::pow(2.0, -7));
}

TEST(Mesh, CountsAreasAndOrientation) {
  for (std::size_t n : {1u, 2u, 3u, 8u, 17u}) {
    const auto mesh = build_mesh(n);
    EXPECT_EQ(mesh.num_nodes(), (n + 1) * (n + 1));
    EXPECT_EQ(mesh.num_triangles(), 2 * n * n);
    double total = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
      EXPECT_GT(mesh.signed_area(t), 0.0);
      total += mesh.signed_area(t);
    }
    EXPECT_NEAR(total, 1.0, 1e-13);
  }
}

TEST(Mesh, EdgesAreConforming) {
  const auto mesh = build_mesh(6, BoundaryTagging{BoundaryTag::Impedance, BoundaryTag::Neumann,
                                                  BoundaryTag::Impedance, BoundaryTag::Neumann});
  std::map<std::pair<std::size_t, std::size_t>, int> edge_count;
  for (const auto& tri : mesh.triangles())
    for (int a = 0; a < 3; ++a) {
      auto e = std::minmax(tri[a], tri[(a + 1) % 3]);
      ++edge_count[{e.first, e.second}];
    }
  std::map<std::pair<std::size_t, std::size_t>, int> boundary;
  for (const auto& be : mesh.boundary_edges()) {
    auto e = std::minmax(be.nodes[0], be.nodes[1]);
    ++boundary[{e.first, e.second}];
  }
  for (const auto& [e, count] : edge_count) {
    if (boundary.count(e)) {
      EXPECT_EQ(count, 1);
      EXPECT_EQ(boundary[e], 1);  // exactly one tag per boundary edge
    } else {
      EXPECT_EQ(count, 2);
    }
  }
  EXPECT_EQ(boundary.size(), 24u);
  int neumann = 0;
  for (const auto& be : mesh.boundary_edges()) neumann += be.tag == BoundaryTag::Neumann;
  EXPECT_EQ(neumann, 12);
}

TEST(Mesh, ElementsAreCongruent) {
  // h_T / rho_T is one constant over the mesh.
  const auto mesh = build_mesh(5);
  std::optional<double> ratio;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const Point2 a = mesh.nodes()[tri[0]], b = mesh.nodes()[tri[1]], c = mesh.nodes()[tri[2]];
    const double la = distance(b, c), lb = distance(a, c), lc = distance(a, b);
    const double diam = std::max({la, lb, lc});
    const double inradius = 2.0 * mesh.signed_area(t) / (la + lb + lc);
    if (!ratio) ratio = diam / inradius;
    EXPECT_NEAR(diam / inradius, *ratio, 1e-10);
    EXPECT_NEAR(diam, mesh.h(), 1e-14);
  }
}

TEST(Mesh, LocateCornerNode) {
  const auto mesh = build_mesh(4);
  const auto loc = mesh.locate({0.0, 0.0});
  EXPECT_EQ(loc.triangle, 0u);
  EXPECT_EQ(mesh.triangles()[loc.triangle][0], 0u);
  EXPECT_DOUBLE_EQ(loc.bary[0], 1.0);
  EXPECT_DOUBLE_EQ(loc.bary[1], 0.0);
  EXPECT_DOUBLE_EQ(loc.bary[2], 0.0);
}

TEST(Mesh, LocateOutsideThrows) {
  const auto mesh = build_mesh(4);
  EXPECT_THROW(mesh.locate({2.0, 2.0}), DomainError);
  EXPECT_THROW(mesh.hat_values({-0.1, 0.5}), DomainError);
}

TEST(Mesh, LocateAgreesWithExhaustiveScan) {
  const auto mesh = build_mesh(7);
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const Point2 p{u(gen), u(gen)};
    std::array<double, 3> bary{};
    const auto expected = brute_force_locate(mesh, p, bary);
    ASSERT_TRUE(expected.has_value());
    const auto loc = mesh.locate(p);
    EXPECT_EQ(loc.triangle, *expected);
    for (int a = 0; a < 3; ++a) EXPECT_NEAR(loc.bary[a], bary[a], 1e-12);
  }
}

TEST(Mesh, BoundaryPointsResolveToLowestIndexTriangle) {
  const auto mesh = build_mesh(4);
  // Nodes and points on shared edges touch several triangles.
  for (Point2 p : {Point2{0.5, 0.5}, Point2{0.25, 0.6}, Point2{0.3, 0.75}, Point2{0.375, 0.375}, Point2{1.0, 1.0}}) {
    std::array<double, 3> bary{};
    const auto expected = brute_force_locate(mesh, p, bary);
    EXPECT_EQ(mesh.locate(p).triangle, *expected);
  }
}

TEST(Mesh, HatValuesAtNodeIsUnitVector) {
  const auto mesh = build_mesh(4);
  const auto hv = mesh.hat_values({0.5, 0.25});
  const auto node = mesh.node_index(2, 1);
  double at_node = 0.0, other = 0.0;
  for (int a = 0; a < 3; ++a) (hv.nodes[a] == node ? at_node : other) += hv.values[a];
  EXPECT_DOUBLE_EQ(at_node, 1.0);
  EXPECT_DOUBLE_EQ(other, 0.0);
}

TEST(Mesh, HatValuesPartitionOfUnityAndLinearExactness) {
  const auto mesh = build_mesh(9);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double a0 = 0.7, bx = -1.3, by = 2.2;
  std::vector<double> nodal(mesh.num_nodes());
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) nodal[i] = a0 + bx * mesh.nodes()[i].x + by * mesh.nodes()[i].y;
  for (int i = 0; i < 200; ++i) {
    const Point2 p{u(gen), u(gen)};
    const auto hv = mesh.hat_values(p);
    double sum = 0.0;
    for (double v : hv.values) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-15);
    EXPECT_NEAR(hv.interpolate(nodal), a0 + bx * p.x + by * p.y, 1e-13);
  }
}

TEST(Mesh, InterpolationIsContinuousAcrossEdges) {
  const auto mesh = build_mesh(6);
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> nodal(mesh.num_nodes());
  for (auto& v : nodal) v = u(gen);
  // Points on the cell diagonals and grid lines, approached from both sides.
  for (int trial = 0; trial < 50; ++trial) {
    const double s = 0.5 * (u(gen) + 1.0);
    const std::size_t i = trial % 6, j = (trial / 6) % 6;
    const Point2 on_diag{(static_cast<double>(i) + s) / 6.0, (static_cast<double>(j) + s) / 6.0};
    const Point2 on_line{static_cast<double>(i) / 6.0, (static_cast<double>(j) + s) / 6.0};
    for (Point2 p : {on_diag, on_line}) {
      const double eps = 1e-13;
      const double left = mesh.hat_values({std::clamp(p.x - eps, 0.0, 1.0), p.y}).interpolate(nodal);
      const double right = mesh.hat_values({std::clamp(p.x + eps, 0.0, 1.0), p.y}).interpolate(nodal);
      EXPECT_NEAR(left, right, 1e-11);
      EXPECT_NEAR(mesh.hat_values(p).interpolate(nodal), left, 1e-11);
    }
  }
}

TEST(Mesh, CsvDumpHasHeaders) {
  const auto mesh = build_mesh(2);
  std::ostringstream nodes, elements;
  mesh.write_csv(nodes, elements);
  EXPECT_EQ(nodes.str().substr(0, 9), "node,x,y\n");
  EXPECT_EQ(elements.str().substr(0, 18), "triangle,n0,n1,n2\n");
}

}  // namespace
}  // namespace srcid
