// Divergence-form discretizations of the drift Laplacian and the stability
// operator L = Lap + |A|^2 + 1/2 - (1/2)<x, grad .> in the exp(-|x|^2/4)
// weighted inner product, plus the plain Laplace-Beltrami operator.  Assembling
// against the weight makes weighted symmetry exact by construction.
#pragma once

#include "geometry.hpp"

namespace shl {

enum class BoundaryCondition { Periodic, Natural, Dirichlet };

// Chain-structured operator: edge k couples nodes (k, k+1); when periodic the
// last edge wraps.  Acting on node fields,
//   (L u)_i = [(S u)_i - dirichlet_shift_i u_i] / w_i + q_i u_i
// with (S u)_i the conductance-weighted second difference.  The matrix
// w_i L_ij is symmetric identically, so <u, L v>_w = <L u, v>_w holds by
// construction.
struct WeightedOperator {
  Eigen::VectorXd conductance;      // per edge
  Eigen::VectorXd node_weight;      // w_i = weight(x_i) * dmu_i
  Eigen::VectorXd zeroth;           // q_i (|A|^2 + 1/(2 t0) for L)
  Eigen::VectorXd dirichlet_shift;  // wall couplings folded into the diagonal
  bool periodic = false;
  BoundaryCondition bc = BoundaryCondition::Natural;
  std::vector<int> nodes;  // indices into the source geometry

  int size() const { return static_cast<int>(node_weight.size()); }

  Eigen::VectorXd apply(const Eigen::VectorXd& u) const;  // (L u), O(N)
  double inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
  // Quadratic form -<u, L u>_w = sum_edges c (du)^2 + walls - sum w q u^2.
  double form(const Eigen::VectorXd& u) const;
  // max |w_i L_ij - w_j L_ji| of the matrix representation.
  double symmetry_defect() const;
  // Dense A = -S - W Q for the pencil A u = mu W u (L u = -mu u).
  Eigen::MatrixXd dense_A() const;
};

struct OperatorOptions {
  bool gaussian_weight = true;   // exp(-|x-c|^2/4t0); false gives the metric Laplacian
  Eigen::Vector3d center = Eigen::Vector3d::Zero();  // weight center (axis-bound for profiles)
  double t0 = 1.0;               // weight scale; the zeroth shift is 1/(2 t0)
  bool include_A2 = true;
  int azimuthal_mode = 0;        // profiles: subtracts m^2/r^2 from the zeroth term
  std::optional<double> zeroth_shift_override;  // replaces 1/(2 t0) when set
};

WeightedOperator assemble_L(const LocalGeometry& g, const OperatorOptions& opt = {});

// Restriction to the nodes with |x| < R, Dirichlet on the rest.  The kept set
// must be a contiguous run of the chain with at least 8 nodes.
WeightedOperator dirichlet_restriction(const LocalGeometry& g, double R,
                                       const OperatorOptions& opt = {});

struct Spectrum {
  Eigen::VectorXd eigenvalues;     // mu_1 <= mu_2 <= ... for L u = -mu u
  Eigen::MatrixXd eigenfunctions;  // columns, weighted-orthonormal, sign-fixed
};

// Lowest `count` eigenpairs of L u = -mu u. Deterministic ordering; each
// eigenfunction is scaled to <u,u>_w = 1 with integral >= 0 (first node
// positive on ties).
Spectrum eigen_lowest(const WeightedOperator& op, int count);

}  // namespace shl
