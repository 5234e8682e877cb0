#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sisrd/error.hpp"
#include "sisrd/expr.hpp"

namespace sisrd {

enum class DomainKind { Interval, Rectangle, Disk };

/// Geometry plus resolution of the spatial domain.
///
/// Interval and rectangle are vertex-centred with trapezoid cell measures;
/// the disk is the set of cell centres of a uniform Cartesian grid over its
/// bounding square that fall strictly inside the circle.
struct DomainSpec {
  DomainKind kind = DomainKind::Interval;
  // interval: [x0, x1]; rectangle: [x0, x1] x [y0, y1]
  double x0 = 0.0, x1 = 1.0;
  double y0 = 0.0, y1 = 1.0;
  // disk
  double cx = 0.0, cy = 0.0, radius = 1.0;
  // nodes per axis (interval/rectangle) or cells across the diameter (disk)
  std::size_t nx = 3, ny = 3;

  static DomainSpec interval(double a, double b, std::size_t nodes);
  static DomainSpec rectangle(double xa, double xb, double ya, double yb, std::size_t nodes_x,
                              std::size_t nodes_y);
  static DomainSpec disk(double cx, double cy, double r, std::size_t cells_across);
  /// Disk with cell size close to `cell`; the cell count is rounded so an
  /// integer number of cells spans the diameter.
  static DomainSpec disk_with_cell(double cx, double cy, double r, double cell);

  void validate() const;
};

class DiscreteDomain;
using DomainPtr = std::shared_ptr<const DiscreteDomain>;

/// Nodes, cell measures and grid topology. Immutable once built.
class DiscreteDomain {
 public:
  static constexpr std::ptrdiff_t kAbsent = -1;

  const DomainSpec& spec() const noexcept { return spec_; }
  int dimension() const noexcept { return spec_.kind == DomainKind::Interval ? 1 : 2; }
  std::size_t size() const noexcept { return coords_.size(); }

  const std::vector<Point>& coords() const noexcept { return coords_; }
  const std::vector<double>& measure() const noexcept { return measure_; }
  const std::vector<bool>& boundary() const noexcept { return boundary_; }

  /// Grid spacing along each axis.
  double hx() const noexcept { return hx_; }
  double hy() const noexcept { return hy_; }
  /// Largest spacing, the h in tolerances of the form c*h^2.
  double h() const noexcept { return std::max(hx_, hy_); }

  /// Lattice extents and index lookup. For 1D, ny() == 1.
  std::size_t nx() const noexcept { return lat_nx_; }
  std::size_t ny() const noexcept { return lat_ny_; }
  std::size_t lattice_i(std::size_t node) const { return lat_i_[node]; }
  std::size_t lattice_j(std::size_t node) const { return lat_j_[node]; }
  /// Node at lattice position (i, j), or kAbsent outside the domain.
  std::ptrdiff_t node_at(std::ptrdiff_t i, std::ptrdiff_t j) const;

  /// Edges (a < b) of the nearest-neighbour graph and their conductances
  /// c_ab such that the symmetric stiffness is K_ab = c_ab.
  struct Edge {
    std::size_t a, b;
    double conductance;
  };
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<std::vector<std::size_t>>& neighbors() const noexcept { return neighbors_; }

  /// Sum of cell measures.
  double total_measure() const noexcept { return total_measure_; }
  /// Measure of the continuum domain.
  double continuum_measure() const;

  /// Node closest to p (ties broken by lowest index).
  std::size_t nearest_node(Point p) const;

 private:
  friend DomainPtr build_domain(const DomainSpec& spec);
  DiscreteDomain() = default;

  DomainSpec spec_;
  std::vector<Point> coords_;
  std::vector<double> measure_;
  std::vector<bool> boundary_;
  std::vector<std::size_t> lat_i_, lat_j_;
  std::vector<std::ptrdiff_t> lattice_;  // lat_nx_ * lat_ny_, row-major in j
  std::size_t lat_nx_ = 0, lat_ny_ = 1;
  double hx_ = 0.0, hy_ = 0.0;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> neighbors_;
  double total_measure_ = 0.0;
};

DomainPtr build_domain(const DomainSpec& spec);

/// One real value per node of a specific domain.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(DomainPtr dom, double fill = 0.0);
  ScalarField(DomainPtr dom, std::vector<double> values);

  /// Evaluate a formula at every node.
  static ScalarField from_expr(DomainPtr dom, const Expr& e);

  const DomainPtr& domain() const noexcept { return dom_; }
  std::size_t size() const noexcept { return v_.size(); }
  double& operator[](std::size_t i) { return v_[i]; }
  double operator[](std::size_t i) const { return v_[i]; }
  std::span<double> values() noexcept { return v_; }
  std::span<const double> values() const noexcept { return v_; }
  std::vector<double>& data() noexcept { return v_; }
  const std::vector<double>& data() const noexcept { return v_; }

  double min() const;
  double max() const;
  std::size_t argmin() const;
  std::size_t argmax() const;
  bool all_finite() const;

  /// Throws DomainMismatch unless both fields share the same domain object.
  void require_same_domain(const ScalarField& other) const;

 private:
  DomainPtr dom_;
  std::vector<double> v_;
};

double sup_distance(const ScalarField& a, const ScalarField& b);

/// Compressed sparse row matrix over domain nodes.
struct SparseOperator {
  std::size_t n = 0;
  std::vector<std::size_t> row_ptr;
  std::vector<std::size_t> col;
  std::vector<double> val;

  void apply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> apply(std::span<const double> x) const;
  std::vector<double> diagonal() const;
  /// Max |A_ij - A_ji|.
  double asymmetry() const;
  std::vector<double> row_sums() const;
};

/// The discrete Neumann Laplacian in two forms.
///
/// `generator` is L: the stencil (1,-2,1)/h^2 with mirrored ghost values at
/// boundary and mask edges; boundary rows read (-2, 2)/h^2 in 1D. It is
/// self-adjoint in the cell-measure inner product and has zero row sums.
///
/// `stiffness` is K = M L with M the diagonal of cell measures; it is
/// symmetric, negative semi-definite, and has zero row sums, so 1^T K f = 0
/// for every f (discrete no-flux).
struct NeumannLaplacian {
  SparseOperator generator;
  SparseOperator stiffness;
};

NeumannLaplacian assemble_neumann_laplacian(const DiscreteDomain& dom);

/// Returns c*M + d*(-K) with per-node shift c_i (scalar or field) as an SPD
/// matrix when c_i > 0 and d >= 0.
SparseOperator shifted_stiffness(const SparseOperator& stiffness, std::span<const double> measure,
                                 std::span<const double> shift, double diffusion);

/// Quadrature: sum of f times cell measure.
double integrate(const ScalarField& f);

/// Boolean node mask helpers on the lattice.
using NodeMask = std::vector<bool>;

/// Nodes of `mask` whose lattice neighbours within Chebyshev index distance
/// `radius` (restricted to nodes that exist) all belong to `mask`.
NodeMask erode(const DiscreteDomain& dom, const NodeMask& mask, std::size_t radius);

std::size_t count(const NodeMask& mask);

/// CSV with header "x,value" (1D) or "x,y,value" (2D), one row per node in
/// node order. Numbers use shortest round-trip formatting.
std::string to_csv(const ScalarField& f);
std::string mask_to_csv(const DiscreteDomain& dom, const NodeMask& mask);

/// Shortest round-trip decimal form of a double ("nan", "inf" for
/// non-finite values).
std::string format_double(double v);

}  // namespace sisrd
