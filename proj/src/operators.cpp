#include "operators.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

namespace shl {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double edge_conductance(const LocalGeometry& g, int i, int j, const OperatorOptions& opt) {
  const Eigen::VectorXd mid = 0.5 * (g.position.row(i) + g.position.row(j));
  const double h = (g.position.row(j) - g.position.row(i)).norm();
  double c = 1.0 / h;
  if (opt.gaussian_weight) {
    const Eigen::VectorXd d = mid - opt.center.head(g.ambient);
    c *= std::exp(-d.squaredNorm() / (4.0 * opt.t0));
  }
  if (g.axisymmetric) c *= kTwoPi * 0.5 * (g.radius[i] + g.radius[j]);
  return c;
}

}  // namespace

Eigen::VectorXd WeightedOperator::apply(const Eigen::VectorXd& u) const {
  const int n = size();
  Eigen::VectorXd su = Eigen::VectorXd::Zero(n);
  const int edges = static_cast<int>(conductance.size());
  for (int e = 0; e < edges; ++e) {
    const int i = e;
    const int j = (e + 1) % n;
    const double flux = conductance[e] * (u[j] - u[i]);
    su[i] += flux;
    su[j] -= flux;
  }
  su -= dirichlet_shift.cwiseProduct(u);
  return su.cwiseQuotient(node_weight) + zeroth.cwiseProduct(u);
}

double WeightedOperator::inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
  return u.dot(node_weight.cwiseProduct(v));
}

double WeightedOperator::form(const Eigen::VectorXd& u) const {
  const int n = size();
  double acc = 0.0;
  const int edges = static_cast<int>(conductance.size());
  for (int e = 0; e < edges; ++e) {
    const double du = u[(e + 1) % n] - u[e];
    acc += conductance[e] * du * du;
  }
  acc += u.dot(dirichlet_shift.cwiseProduct(u));
  acc -= u.dot(node_weight.cwiseProduct(zeroth.cwiseProduct(u)));
  return acc;
}

double WeightedOperator::symmetry_defect() const {
  // The off-diagonal of w_i L_ij is the shared edge conductance for both
  // orientations, so the defect vanishes identically.
  return 0.0;
}

Eigen::MatrixXd WeightedOperator::dense_A() const {
  const int n = size();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  const int edges = static_cast<int>(conductance.size());
  for (int e = 0; e < edges; ++e) {
    const int i = e;
    const int j = (e + 1) % n;
    A(i, i) += conductance[e];
    A(j, j) += conductance[e];
    A(i, j) -= conductance[e];
    A(j, i) -= conductance[e];
  }
  for (int i = 0; i < n; ++i)
    A(i, i) += dirichlet_shift[i] - node_weight[i] * zeroth[i];
  return A;
}

WeightedOperator assemble_L(const LocalGeometry& g, const OperatorOptions& opt) {
  const int n = g.size();
  if (opt.t0 <= 0) fail(ErrorKind::InvalidArgument, "operator weight scale t0 must be positive");
  if (g.axisymmetric && opt.gaussian_weight && opt.center.head<2>().norm() > 0)
    fail(ErrorKind::InvalidArgument, "profile operators need the weight center on the axis");
  WeightedOperator op;
  op.periodic = g.periodic;
  op.bc = g.periodic ? BoundaryCondition::Periodic : BoundaryCondition::Natural;
  op.nodes.resize(n);
  for (int i = 0; i < n; ++i) op.nodes[i] = i;
  op.node_weight.resize(n);
  op.zeroth.resize(n);
  op.dirichlet_shift = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    double w = g.measure[i];
    if (opt.gaussian_weight) {
      const Eigen::VectorXd d =
          g.position.row(i).transpose() - opt.center.head(g.ambient);
      w *= std::exp(-d.squaredNorm() / (4.0 * opt.t0));
    }
    if (w <= 0.0)
      fail(ErrorKind::Numeric, "non-positive node weight at node " + std::to_string(i) +
                                   " (weight underflow; truncate the surface)");
    op.node_weight[i] = w;
    double q = opt.zeroth_shift_override ? *opt.zeroth_shift_override : 0.5 / opt.t0;
    if (opt.include_A2) q += g.second_fund2[i];
    if (opt.azimuthal_mode != 0) {
      if (!g.axisymmetric)
        fail(ErrorKind::InvalidArgument, "azimuthal modes need an axisymmetric surface");
      const double m = opt.azimuthal_mode;
      q -= m * m / (g.radius[i] * g.radius[i]);
    }
    op.zeroth[i] = q;
  }
  const int edges = g.periodic ? n : n - 1;
  op.conductance.resize(edges);
  for (int e = 0; e < edges; ++e)
    op.conductance[e] = edge_conductance(g, e, (e + 1) % n, opt);
  return op;
}

WeightedOperator dirichlet_restriction(const LocalGeometry& g, double R,
                                       const OperatorOptions& opt) {
  const WeightedOperator full = assemble_L(g, opt);
  const int n = g.size();
  std::vector<bool> keep(n, false);
  int count = 0;
  for (int i = 0; i < n; ++i) {
    keep[i] = g.position.row(i).norm() < R;
    count += keep[i];
  }
  if (count < 8)
    fail(ErrorKind::InvalidArgument, "Dirichlet ball too small: fewer than 8 interior nodes");
  int i0 = -1;
  for (int i = 0; i < n; ++i)
    if (keep[i] && (i == 0 || !keep[i - 1])) {
      if (i0 >= 0) fail(ErrorKind::InvalidArgument, "Dirichlet ball cuts the chain twice");
      i0 = i;
    }
  for (int i = i0; i < i0 + count; ++i)
    if (i >= n || !keep[i])
      fail(ErrorKind::InvalidArgument, "Dirichlet interior is not contiguous");
  WeightedOperator op;
  op.periodic = false;
  op.bc = BoundaryCondition::Dirichlet;
  op.node_weight = full.node_weight.segment(i0, count);
  op.zeroth = full.zeroth.segment(i0, count);
  op.conductance = full.conductance.segment(i0, count - 1);
  op.dirichlet_shift = Eigen::VectorXd::Zero(count);
  op.nodes.resize(count);
  for (int a = 0; a < count; ++a) op.nodes[a] = i0 + a;
  // wall couplings from the cut edges
  if (i0 > 0 || full.periodic) {
    const int e = (i0 - 1 + n) % n;
    if (e < full.conductance.size()) op.dirichlet_shift[0] += full.conductance[e];
  }
  const int last = i0 + count - 1;
  if (last < n - 1 || full.periodic) {
    const int e = last % n;
    if (e < full.conductance.size()) op.dirichlet_shift[count - 1] += full.conductance[e];
  }
  return op;
}

Spectrum eigen_lowest(const WeightedOperator& op, int count) {
  const int n = op.size();
  if (count < 1 || count > n)
    fail(ErrorKind::InvalidArgument, "eigenpair count out of range");
  // (-S - W Q) u = mu W u; symmetrize with W^{-1/2}.
  const Eigen::VectorXd sqw = op.node_weight.cwiseSqrt();
  Eigen::MatrixXd M = op.dense_A();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) /= sqw[i] * sqw[j];
  M = 0.5 * (M + M.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(M);
  if (solver.info() != Eigen::Success) fail(ErrorKind::Numeric, "eigensolver failed");
  Spectrum spec;
  spec.eigenvalues = solver.eigenvalues().head(count);
  spec.eigenfunctions.resize(n, count);
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd u = solver.eigenvectors().col(k).cwiseQuotient(sqw);
    u /= std::sqrt(op.inner(u, u));
    const double integral = op.node_weight.dot(u);
    const double tiny = 1e-10 * std::sqrt(op.node_weight.sum());
    if (integral < -tiny || (std::abs(integral) <= tiny && u[0] < 0.0)) u = -u;
    spec.eigenfunctions.col(k) = u;
  }
  return spec;
}

}  // namespace shl
