#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "srcid/error.hpp"
#include "srcid/mesh.hpp"
#include "srcid/sources.hpp"

namespace srcid {

using RealSparse = Eigen::SparseMatrix<double>;
using ComplexSparse = Eigen::SparseMatrix<Complex>;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kSolverTolerance = 1e-10;

/// Physical parameters of the time-harmonic problem with impedance walls.
struct HelmholtzParams {
  double zeta = 30.0;        // angular frequency
  double c = 5.0;            // speed of sound
  double rho = 1.0;          // fluid density
  double alpha_zeta = 1.0;   // viscous wall constant
  double beta_zeta = 1.0 / 30.0;  // elastic wall constant

  /// Wall impedance beta + (alpha / zeta) i.
  Complex gamma() const { return {beta_zeta, alpha_zeta / zeta}; }
  double wavenumber() const { return zeta / c; }
  /// Coefficient i zeta rho / gamma of the impedance boundary term.
  Complex impedance_coefficient() const { return Complex(0.0, zeta * rho) / gamma(); }

  void validate() const {
    if (!(zeta > 0.0)) throw ConfigError("helmholtz: zeta must be positive");
    if (!(c > 0.0)) throw ConfigError("helmholtz: c must be positive");
    if (!(rho > 0.0)) throw ConfigError("helmholtz: rho must be positive");
    if (!(alpha_zeta > 0.0)) throw ConfigError("helmholtz: alpha_zeta must be positive");
    if (beta_zeta == 0.0) throw ConfigError("helmholtz: beta_zeta must be non-zero");
  }
};

/// Boundary data g on the Neumann faces; an empty function means g = 0.
using NeumannData = std::function<Complex(Point2)>;

namespace detail {

template <class Fn>
void for_each_triangle(const StructuredTriMesh& mesh, Fn&& fn) {
  const auto& nodes = mesh.nodes();
  for (const auto& tri : mesh.triangles()) fn(tri, std::array{nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]});
}

inline RealSparse from_upper_triplets(std::size_t n, std::vector<Eigen::Triplet<double>>& upper) {
  const std::size_t count = upper.size();
  for (std::size_t k = 0; k < count; ++k) {
    const auto& t = upper[k];
    if (t.row() != t.col()) upper.emplace_back(t.col(), t.row(), t.value());
  }
  RealSparse m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  m.setFromTriplets(upper.begin(), upper.end());
  return m;
}

inline void push_pair(std::vector<Eigen::Triplet<double>>& out, std::size_t a, std::size_t b, double v) {
  // One entry per unordered pair; the transpose is mirrored from the same value.
  if (a <= b)
    out.emplace_back(static_cast<int>(a), static_cast<int>(b), v);
  else
    out.emplace_back(static_cast<int>(b), static_cast<int>(a), v);
}

}  // namespace detail

/// Stiffness matrix  K_ij = int grad phi_j . grad phi_i.
inline RealSparse stiffness_matrix(const StructuredTriMesh& mesh) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(6 * mesh.num_triangles());
  detail::for_each_triangle(mesh, [&](const auto& tri, const auto& p) {
    // Edge opposite vertex a, rotated, is 2|T| grad phi_a.
    std::array<Point2, 3> e;
    for (int a = 0; a < 3; ++a) e[a] = p[(a + 2) % 3] - p[(a + 1) % 3];
    const double area = 0.5 * std::abs(e[2].x * (-e[1].y) - (-e[1].x) * e[2].y);
    for (int a = 0; a < 3; ++a)
      for (int b = a; b < 3; ++b)
        detail::push_pair(t, tri[a], tri[b], (e[a].x * e[b].x + e[a].y * e[b].y) / (4.0 * area));
  });
  return detail::from_upper_triplets(mesh.num_nodes(), t);
}

/// Mass matrix  M_ij = int phi_j phi_i  (exact P1 element formula).
inline RealSparse mass_matrix(const StructuredTriMesh& mesh) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(6 * mesh.num_triangles());
  detail::for_each_triangle(mesh, [&](const auto& tri, const auto& p) {
    const double area = 0.5 * std::abs((p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y));
    for (int a = 0; a < 3; ++a)
      for (int b = a; b < 3; ++b) detail::push_pair(t, tri[a], tri[b], area / 12.0 * (a == b ? 2.0 : 1.0));
  });
  return detail::from_upper_triplets(mesh.num_nodes(), t);
}

/// Boundary mass  int_{Gamma_tag} phi_j phi_i dS  over edges carrying `tag`.
inline RealSparse boundary_mass_matrix(const StructuredTriMesh& mesh, BoundaryTag tag) {
  std::vector<Eigen::Triplet<double>> t;
  const auto& nodes = mesh.nodes();
  for (const auto& edge : mesh.boundary_edges()) {
    if (edge.tag != tag) continue;
    const double len = distance(nodes[edge.nodes[0]], nodes[edge.nodes[1]]);
    detail::push_pair(t, edge.nodes[0], edge.nodes[0], len / 3.0);
    detail::push_pair(t, edge.nodes[1], edge.nodes[1], len / 3.0);
    detail::push_pair(t, edge.nodes[0], edge.nodes[1], len / 6.0);
  }
  return detail::from_upper_triplets(mesh.num_nodes(), t);
}

/// Neumann boundary load  b_i = int_{Gamma_N} g phi_i dS, midpoint rule per
/// edge. Experimental: all shipped experiments use g = 0.
inline ComplexVector neumann_load(const StructuredTriMesh& mesh, const NeumannData& g) {
  ComplexVector b = ComplexVector::Zero(static_cast<Eigen::Index>(mesh.num_nodes()));
  if (!g) return b;
  const auto& nodes = mesh.nodes();
  for (const auto& edge : mesh.boundary_edges()) {
    if (edge.tag != BoundaryTag::Neumann) continue;
    const Point2 a = nodes[edge.nodes[0]], c = nodes[edge.nodes[1]];
    const Complex half = 0.5 * distance(a, c) * g(0.5 * (a + c));
    b[static_cast<Eigen::Index>(edge.nodes[0])] += half;
    b[static_cast<Eigen::Index>(edge.nodes[1])] += half;
  }
  return b;
}

/// Dense nodal evaluation vector e(x).
inline RealVector evaluation_vector(const StructuredTriMesh& mesh, Point2 x) {
  RealVector e = RealVector::Zero(static_cast<Eigen::Index>(mesh.num_nodes()));
  const HatValues hv = mesh.hat_values(x);
  for (int a = 0; a < 3; ++a) e[static_cast<Eigen::Index>(hv.nodes[a])] += hv.values[a];
  return e;
}

/// Galerkin matrix of the impedance Helmholtz problem on one mesh, with its
/// sparse LU factorization:
///   A = K - (zeta/c)^2 M - (i zeta rho / gamma) M_{Gamma_Z}.
/// A is complex symmetric (A = A^T) but not Hermitian.
class AssembledSystem {
 public:
  using Solver = Eigen::SparseLU<ComplexSparse, Eigen::COLAMDOrdering<int>>;

  AssembledSystem(std::shared_ptr<const StructuredTriMesh> mesh, const HelmholtzParams& params)
      : mesh_(std::move(mesh)), params_(params) {
    params_.validate();
    const RealSparse k = stiffness_matrix(*mesh_);
    const RealSparse m = mass_matrix(*mesh_);
    const RealSparse mz = boundary_mass_matrix(*mesh_, BoundaryTag::Impedance);
    const double k2 = params_.wavenumber() * params_.wavenumber();
    const Complex zc = params_.impedance_coefficient();
    const RealSparse real_part = k - k2 * m;
    matrix_ = real_part.cast<Complex>() - zc * mz.cast<Complex>();
    matrix_.makeCompressed();

    auto solver = std::make_shared<Solver>();
    solver->analyzePattern(matrix_);
    solver->factorize(matrix_);
    if (solver->info() != Eigen::Success)
      throw SolverError("helmholtz: factorization failed (resonance or unsuitable mesh size h = " +
                        std::to_string(mesh_->h()) + "): " + solver->lastErrorMessage());
    solver_ = std::move(solver);
  }

  const StructuredTriMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const StructuredTriMesh> mesh_ptr() const { return mesh_; }
  const HelmholtzParams& params() const { return params_; }
  const ComplexSparse& matrix() const { return matrix_; }
  std::size_t size() const { return mesh_->num_nodes(); }

  /// Solves A y = b and verifies ||A y - b|| <= tol ||b||.
  ComplexVector solve(const ComplexVector& b) const {
    if (b.size() != matrix_.rows()) throw ConfigError("helmholtz: right-hand side has wrong size");
    const double bnorm = b.norm();
    if (bnorm == 0.0) return ComplexVector::Zero(b.size());
    ComplexVector y = solver_->solve(b);
    const double res = (matrix_ * y - b).norm();
    if (!(res <= kSolverTolerance * bnorm))
      throw SolverError("helmholtz: relative residual " + std::to_string(res / bnorm) + " exceeds tolerance");
    return y;
  }

  /// Load vector of a point-source configuration: b_i = sum_l alpha_l phi_i(x_l).
  ComplexVector source_load(const SourceConfig& u) const {
    ComplexVector b = ComplexVector::Zero(static_cast<Eigen::Index>(size()));
    for (const auto& s : u.sources) {
      const HatValues hv = mesh_->hat_values(s.x);
      for (int a = 0; a < 3; ++a) b[static_cast<Eigen::Index>(hv.nodes[a])] += s.alpha * hv.values[a];
    }
    return b;
  }

  /// Nodal vector of the discrete solution for sources u and Neumann data g.
  ComplexVector solve_sources(const SourceConfig& u, const NeumannData& g = {}) const {
    for (const auto& s : u.sources)
      if (!mesh_->domain().contains(s.x)) throw DomainError("solve_sources: source position outside the domain");
    ComplexVector b = source_load(u);
    if (g) b += neumann_load(*mesh_, g);
    return solve(b);
  }

  /// Nodal vector of the discrete Green's function G_h^x = A^{-1} e(x).
  ComplexVector green(Point2 x) const { return solve(evaluation_vector(*mesh_, x).cast<Complex>()); }

  /// G_h^x(z) = e(z)^T A^{-1} e(x).
  Complex green_value(Point2 x, Point2 z) const {
    const ComplexVector g = green(x);
    return mesh_->hat_values(z).interpolate(g);
  }

 private:
  std::shared_ptr<const StructuredTriMesh> mesh_;
  HelmholtzParams params_;
  ComplexSparse matrix_;
  std::shared_ptr<const Solver> solver_;
};

inline AssembledSystem assemble(std::shared_ptr<const StructuredTriMesh> mesh, const HelmholtzParams& params) {
  return AssembledSystem(std::move(mesh), params);
}

inline AssembledSystem assemble(const StructuredTriMesh& mesh, const HelmholtzParams& params) {
  return AssembledSystem(std::make_shared<const StructuredTriMesh>(mesh), params);
}

/// Real mass matrix with a Cholesky factorization; yields discrete Dirac
/// representers delta_{x,h} (M c = e(x)) and L2 norms of nodal functions.
class MassOperator {
 public:
  explicit MassOperator(std::shared_ptr<const StructuredTriMesh> mesh)
      : mesh_(std::move(mesh)), matrix_(mass_matrix(*mesh_)) {
    solver_ = std::make_shared<Eigen::SimplicialLDLT<RealSparse>>(matrix_);
    if (solver_->info() != Eigen::Success) throw SolverError("mass matrix factorization failed");
  }

  const RealSparse& matrix() const { return matrix_; }

  /// Nodal coefficients of delta_{x,h}: int delta_{x,h} v = v(x) for v in V_h.
  RealVector dirac(Point2 x) const { return solver_->solve(evaluation_vector(*mesh_, x)); }

  double l2_norm(const RealVector& v) const { return std::sqrt(std::max(0.0, v.dot(matrix_ * v))); }
  double l2_norm(const ComplexVector& v) const {
    return std::sqrt(std::max(0.0, v.dot(matrix_.cast<Complex>() * v).real()));
  }

 private:
  std::shared_ptr<const StructuredTriMesh> mesh_;
  RealSparse matrix_;
  std::shared_ptr<Eigen::SimplicialLDLT<RealSparse>> solver_;
};

inline RealVector discrete_dirac(const StructuredTriMesh& mesh, Point2 x) {
  return MassOperator(std::make_shared<const StructuredTriMesh>(mesh)).dirac(x);
}

/// Discrete Green's functions r_j = A^{-1} e(z_j) of the measurement points,
/// stored node-major, so that by reciprocity (A = A^T)
///   y_{u,h}(z_j) = sum_l alpha_l e(x_l)^T r_j + y_{g,h}(z_j)
/// costs O(k m) with no further linear solve.
class ObservationCache {
 public:
  ObservationCache(const AssembledSystem& system, std::vector<Point2> points, SourceDomain source_domain,
                   const NeumannData& g = {})
      : mesh_(system.mesh_ptr()), points_(std::move(points)), domain_(std::move(source_domain)) {
    if (points_.empty()) throw ConfigError("observation cache: no measurement points");
    for (std::size_t j = 0; j < points_.size(); ++j)
      domain_.check_measurement_point(points_[j], "measurement point z" + std::to_string(j + 1));
    const std::size_t m = points_.size();
    representers_.resize(static_cast<Eigen::Index>(system.size()), static_cast<Eigen::Index>(m));
    neumann_offset_ = ComplexVector::Zero(static_cast<Eigen::Index>(m));
    ComplexVector yg;
    if (g) yg = system.solve(neumann_load(*mesh_, g));
    for (std::size_t j = 0; j < m; ++j) {
      representers_.col(static_cast<Eigen::Index>(j)) = system.green(points_[j]);
      if (g) neumann_offset_[static_cast<Eigen::Index>(j)] = mesh_->hat_values(points_[j]).interpolate(yg);
    }
  }

  std::size_t size() const { return points_.size(); }
  const std::vector<Point2>& points() const { return points_; }
  const SourceDomain& source_domain() const { return domain_; }
  const StructuredTriMesh& mesh() const { return *mesh_; }
  ComplexVector representer(std::size_t j) const { return representers_.col(static_cast<Eigen::Index>(j)); }
  const ComplexVector& neumann_offset() const { return neumann_offset_; }

  /// G_h(u) written to out (size m). Pure; safe to call concurrently.
  void observe_into(const SourceConfig& u, std::span<Complex> out) const {
    const auto m = static_cast<Eigen::Index>(points_.size());
    for (Eigen::Index j = 0; j < m; ++j) out[static_cast<std::size_t>(j)] = neumann_offset_[j];
    for (const auto& s : u.sources) {
      if (!domain_.contains(s.x)) throw DomainError("observe: source position outside the source domain");
      const HatValues hv = mesh_->hat_values(s.x);
      for (int a = 0; a < 3; ++a) {
        const Complex w = s.alpha * hv.values[a];
        const auto row = static_cast<Eigen::Index>(hv.nodes[a]);
        for (Eigen::Index j = 0; j < m; ++j) out[static_cast<std::size_t>(j)] += w * representers_(row, j);
      }
    }
  }

  ComplexVector observe(const SourceConfig& u) const {
    ComplexVector out(static_cast<Eigen::Index>(points_.size()));
    observe_into(u, std::span<Complex>(out.data(), static_cast<std::size_t>(out.size())));
    return out;
  }

 private:
  std::shared_ptr<const StructuredTriMesh> mesh_;
  std::vector<Point2> points_;
  SourceDomain domain_;
  Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> representers_;
  ComplexVector neumann_offset_;
};

inline ObservationCache build_observation_cache(const AssembledSystem& system, std::vector<Point2> points,
                                                SourceDomain source_domain, const NeumannData& g = {}) {
  return ObservationCache(system, std::move(points), std::move(source_domain), g);
}

struct PointwiseErrorRow {
  std::size_t n_div;
  double h;
  double error;  // mean over the (x, z) pairs of |G_h^x(z) - G_ref^x(z)|
};

/// Self-convergence of point values of discrete Green's functions against a
/// fine reference mesh.
inline std::vector<PointwiseErrorRow> pointwise_error_study(const HelmholtzParams& params,
                                                            std::span<const std::pair<Point2, Point2>> pairs,
                                                            std::span<const std::size_t> n_div_list,
                                                            std::size_t n_div_ref,
                                                            const BoundaryTagging& tagging = {}) {
  if (pairs.empty()) throw ConfigError("pointwise_error_study: no (x, z) pairs");
  auto values_on = [&](std::size_t n_div) {
    const AssembledSystem sys = assemble(std::make_shared<const StructuredTriMesh>(n_div, kUnitSquare, tagging), params);
    std::vector<Complex> v;
    v.reserve(pairs.size());
    for (const auto& [x, z] : pairs) v.push_back(sys.green_value(x, z));
    return v;
  };
  const auto ref = values_on(n_div_ref);
  std::vector<PointwiseErrorRow> rows;
  for (std::size_t n : n_div_list) {
    if (n > n_div_ref) throw ConfigError("pointwise_error_study: study mesh finer than the reference mesh");
    const auto v = values_on(n);
    double err = 0.0;
    for (std::size_t p = 0; p < pairs.size(); ++p) err += std::abs(v[p] - ref[p]);
    rows.push_back({n, StructuredTriMesh(n).h(), err / static_cast<double>(pairs.size())});
  }
  return rows;
}

}  // namespace srcid
