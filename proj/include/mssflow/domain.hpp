#pragma once

// Analytic domains, their distance-to-boundary geometry, and the Cartesian
// grids the flow runs on. Curved boundaries are cut along grid lines
// (Shortley-Weller arms); nodes closer than `snap_fraction * h` to the
// boundary along an axis are pinned instead of evolved.

#include "mssflow/linalg_jet.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace mssflow {

enum class DomainKind { Box, Ball, Annulus, Exterior };

std::string to_string(DomainKind kind);
DomainKind domain_kind_from_string(const std::string& s);

struct DomainSpec {
  DomainKind kind = DomainKind::Box;
  int dim = 2;
  Vec lower;   // box
  Vec upper;   // box
  Vec center;  // ball / annulus / exterior
  double radius = 1.0;        // ball radius, annulus outer radius, exterior truncation radius R
  double inner_radius = 0.0;  // annulus inner radius, radius of the excluded ball of an exterior domain
  // Box faces that are artificial cuts of a larger surface, indexed 2*axis + side
  // (side 1 = upper). Only consulted by the Gaussian-density coverage check.
  std::vector<bool> open_faces;

  static DomainSpec box(const Vec& lower, const Vec& upper);
  static DomainSpec ball(const Vec& center, double radius);
  static DomainSpec annulus(const Vec& center, double inner_radius, double outer_radius);
  /// Complement of the closed ball B(center, inner_radius), truncated to B(center, truncation).
  static DomainSpec exterior(const Vec& center, double inner_radius, double truncation);

  /// Throws PreconditionError on invalid parameters.
  void validate() const;

  /// Distance to the boundary of the computational domain, negative outside.
  [[nodiscard]] double signed_distance(const Vec& x) const;
  /// Tag of the boundary component nearest to x (annulus/exterior: 0 inner, 1 outer;
  /// box: 2*axis + side; ball: 0).
  [[nodiscard]] int boundary_component(const Vec& x) const;
  [[nodiscard]] bool box_face_open(int axis, int side) const;

  [[nodiscard]] DomainSpec dilated(const Vec& base_point, double iota) const;
  [[nodiscard]] std::string describe() const;
};

struct DistanceJet {
  double d = 0.0;
  Vec grad;
  Mat hess;
};

struct BoundaryGeometry {
  double eta0 = 0.0;
  double c0 = 0.0;
  double hess_d_bound = 0.0;
  bool strictly_convex = false;
  std::string rule;  // how eta0 was chosen, echoed into run reports
};

BoundaryGeometry estimate_c0_eta0(const DomainSpec& spec);

/// Distance to the boundary with gradient and Hessian. Rejects points outside
/// E, points with d >= eta0, and box points within eta0 of two faces.
DistanceJet distance_jet(const DomainSpec& spec, const Vec& x);

enum class NodeKind : std::uint8_t { Outside, Interior, Boundary };

/// Neighbour of a node along one axis direction.
struct Arm {
  std::int32_t index = -1;  // lattice node, or boundary sample when `sample`
  bool sample = false;
  double length = 0.0;  // 0 when missing
  [[nodiscard]] bool present() const { return index >= 0; }
};

/// Point of the boundary where a grid line leaves the domain.
struct BoundarySample {
  Vec x;
  std::int32_t owner = -1;  // lattice node the arm starts from
  int axis = 0;
  int side = 0;  // 0 towards -e_axis, 1 towards +e_axis
  int component = 0;
  double theta = 1.0;  // arm length / h
};

struct GridOptions {
  double snap_fraction = 0.5;
};

class Grid {
 public:
  DomainSpec spec;
  int n = 0;
  std::vector<int> dims;  // nodes per axis
  Vec origin;
  Vec spacing;
  std::vector<NodeKind> kind;
  std::vector<int> interior;        // evolved nodes
  std::vector<int> boundary_nodes;  // lattice nodes pinned to boundary data
  std::vector<BoundarySample> samples;
  std::vector<Arm> arms;       // 2n per lattice node (empty for Outside nodes)
  std::vector<double> weight;  // dual-cell volume per lattice node
  std::vector<std::uint8_t> near_boundary;  // interior node with a non-interior arm
  double h_min = 0.0;          // shortest arm of any interior node
  double snap_fraction = 0.5;

  [[nodiscard]] int node_count() const { return static_cast<int>(kind.size()); }
  [[nodiscard]] bool in_domain(int node) const { return node >= 0 && kind[node] != NodeKind::Outside; }
  [[nodiscard]] Vec position(int node) const;
  [[nodiscard]] std::vector<int> coords(int node) const;
  /// Lattice index of `node` shifted by `offset` along each axis; -1 off the lattice.
  [[nodiscard]] int shifted(int node, const int* offset) const;
  [[nodiscard]] int neighbour(int node, int axis, int step) const;
  [[nodiscard]] const Arm& arm(int node, int axis, int side) const { return arms[(node * n + axis) * 2 + side]; }
  [[nodiscard]] double distance(const Vec& x) const { return spec.signed_distance(x); }
  [[nodiscard]] double cell_volume() const;
  /// Every in-domain lattice node, ordered by index.
  [[nodiscard]] std::vector<int> domain_nodes() const;

  [[nodiscard]] Grid dilated(const Vec& base_point, double iota) const;
};

/// Builds the grid. Box lattices fit the box exactly; round shapes use a
/// lattice centred on the shape with spacing exactly `target_h`, so shells of
/// different radius share nodes. Fails when fewer than 8 interior nodes fit
/// across the thinnest part of the domain.
Grid build_grid(const DomainSpec& spec, double target_h, const GridOptions& options = {});

/// Nodes (interior and boundary lattice) with distance to the boundary below delta.
std::vector<int> band_nodes(const Grid& grid, double delta);

}  // namespace mssflow
