#pragma once

// Pointwise differential geometry of a graph x -> (x, f(x)) in R^{n+m}
// computed from a single second-order jet of f. The ambient metric is flat,
// so all Christoffel terms vanish.

#include <Eigen/Dense>

#include <array>

namespace mssflow {

inline constexpr int kMaxDim = 8;

/// Small dense matrices with stack storage (at most 8x8).
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;
/// Vectors in R^n, R^m or R^{n+m}.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 2 * kMaxDim, 1>;

/// Value, Jacobian and Hessian of f : R^n -> R^m at one point.
struct PointJet {
  Vec x;       // position, size n
  Vec value;   // size m
  Mat jac;     // m x n, jac(A, i) = d f^A / d x_i
  std::array<Mat, kMaxDim> hess;  // hess[A](i, j), only the first m are used

  [[nodiscard]] int n() const { return static_cast<int>(jac.cols()); }
  [[nodiscard]] int m() const { return static_cast<int>(jac.rows()); }

  /// Zero jet at the origin.
  static PointJet zero(int n, int m);
};

struct MetricPair {
  Mat g;     // I + J^T J
  Mat ginv;
  double detg = 1.0;
};

struct SingularData {
  Vec lambdas;  // size n, descending, zero padded
  Mat u_frame;  // n x n, columns a_1..a_n (domain directions)
  Mat v_frame;  // m x m, columns a_{n+1}..a_{n+m} (target directions)
  int rank = 0;
};

struct SecondFundamental {
  std::array<Mat, kMaxDim> h;  // h[alpha](i, j) in the SVD-adapted frames
  double normsq = 0.0;
};

struct MeanCurvature {
  Vec vector;  // size n+m
  double normsq = 0.0;
};

/// Eigen-decomposition of a small symmetric matrix by cyclic Jacobi
/// rotations. Eigenvalues come back in descending order, eigenvectors as
/// columns with the first nonzero component made positive.
struct SymmetricEigen {
  Vec values;
  Mat vectors;
};
SymmetricEigen symmetric_eigen(const Mat& a);

MetricPair induced_metric(const PointJet& jet);

/// Singular values and frames of the Jacobian. The domain frame diagonalises
/// J^T J (one-sided Jacobi sweeps on J), so J a_i = lambda_i a_{n+i}.
SingularData singular_values(const Mat& jac);
inline SingularData singular_values(const PointJet& jet) { return singular_values(jet.jac); }

/// Jacobian of the projection of the graph onto the base.
double star_omega(const Vec& lambdas);

/// Diagonal of the tensor <pi_1 X, pi_1 Y> - <pi_2 X, pi_2 Y> on the tangent frame.
Vec s_tensor_diag(const Vec& lambdas);

/// Margin constant eps' = (1 - (1-eps)^2) / (1 + (1-eps)^2).
double length_decreasing_margin(double eps);

/// Smallest eigenvalue of S - eps' g in the orthonormal tangent frame.
double p_tensor_min_eig(const Vec& lambdas, double eps);

SecondFundamental second_fundamental(const PointJet& jet);

/// g^{ij} f^A_{ij}, one entry per target component.
Vec mss_residual(const PointJet& jet);
Vec mss_residual(const PointJet& jet, const Mat& ginv);

MeanCurvature mean_curvature(const PointJet& jet);

/// |H|^2 from the closed form |r|^2 - (J^T r)^T g^{-1} (J^T r), r = mss residual.
double mean_curvature_normsq(const Mat& jac, const Mat& ginv, const Vec& residual);

/// H + (c/2) F^perp with F = (x, f(x)).
Vec shrinker_residual(const PointJet& jet, double c);

/// Orthogonal projection of a vector of R^{n+m} onto the normal space.
Vec normal_projection(const Mat& jac, const Mat& ginv, const Vec& v);

/// Inverse of a small symmetric positive definite matrix (closed form for n <= 2).
Mat spd_inverse(const Mat& a);

}  // namespace mssflow
