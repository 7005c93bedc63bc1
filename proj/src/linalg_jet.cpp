#include "mssflow/linalg_jet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace mssflow {

namespace {

constexpr double kRankRelTol = 1e-12;
constexpr int kMaxSweeps = 64;

// Flip v so its first component with magnitude above tol is positive.
template <typename Col>
void fix_sign(Col&& v, double tol = 1e-14) {
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (std::abs(v(k)) > tol) {
      if (v(k) < 0.0) v = -v;
      return;
    }
  }
}

// Tangent frame vector e_i and normal frame vector e_{n+alpha} in R^{n+m}.
Vec tangent_vector(const SingularData& sd, int i, int n, int m) {
  const double lam = sd.lambdas(i);
  Vec e = Vec::Zero(n + m);
  e.head(n) = sd.u_frame.col(i);
  if (i < m) e.tail(m) = lam * sd.v_frame.col(i);
  return e / std::sqrt(1.0 + lam * lam);
}

Vec normal_vector(const SingularData& sd, int alpha, int n, int m) {
  Vec e = Vec::Zero(n + m);
  if (alpha < n) {
    const double lam = sd.lambdas(alpha);
    e.head(n) = -lam * sd.u_frame.col(alpha);
    e.tail(m) = sd.v_frame.col(alpha);
    return e / std::sqrt(1.0 + lam * lam);
  }
  e.tail(m) = sd.v_frame.col(alpha);
  return e;
}

}  // namespace

PointJet PointJet::zero(int n, int m) {
  PointJet jet;
  jet.x = Vec::Zero(n);
  jet.value = Vec::Zero(m);
  jet.jac = Mat::Zero(m, n);
  for (int a = 0; a < m; ++a) jet.hess[a] = Mat::Zero(n, n);
  return jet;
}

SymmetricEigen symmetric_eigen(const Mat& a_in) {
  const int n = static_cast<int>(a_in.rows());
  Mat a = 0.5 * (a_in + a_in.transpose());
  Mat v = Mat::Identity(n, n);
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= 1e-300) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) > a(j, j); });
  SymmetricEigen out;
  out.values = Vec::Zero(n);
  out.vectors = Mat::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    out.values(k) = a(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
    fix_sign(out.vectors.col(k));
  }
  return out;
}

Mat spd_inverse(const Mat& a) {
  const auto n = a.rows();
  if (n == 1) {
    Mat r(1, 1);
    r(0, 0) = 1.0 / a(0, 0);
    return r;
  }
  if (n == 2) {
    const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    Mat r(2, 2);
    r(0, 0) = a(1, 1) / det;
    r(1, 1) = a(0, 0) / det;
    r(0, 1) = -a(0, 1) / det;
    r(1, 0) = -a(1, 0) / det;
    return r;
  }
  return a.llt().solve(Mat::Identity(n, n));
}

MetricPair induced_metric(const PointJet& jet) {
  const int n = jet.n();
  MetricPair mp;
  mp.g = Mat::Identity(n, n) + jet.jac.transpose() * jet.jac;
  mp.ginv = spd_inverse(mp.g);
  mp.detg = n == 1 ? mp.g(0, 0) : n == 2 ? mp.g(0, 0) * mp.g(1, 1) - mp.g(0, 1) * mp.g(1, 0) : mp.g.determinant();
  return mp;
}

SingularData singular_values(const Mat& jac) {
  const int m = static_cast<int>(jac.rows());
  const int n = static_cast<int>(jac.cols());
  // One-sided Jacobi: rotate the columns of W = J V until they are mutually
  // orthogonal. This diagonalises J^T J without forming it.
  Mat w = jac;
  Mat v = Mat::Identity(n, n);
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double alpha = w.col(p).squaredNorm();
        const double beta = w.col(q).squaredNorm();
        const double gamma = w.col(p).dot(w.col(q));
        if (std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta) || std::abs(gamma) < 1e-300) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int k = 0; k < m; ++k) {
          const double wp = w(k, p);
          const double wq = w(k, q);
          w(k, p) = c * wp - s * wq;
          w(k, q) = s * wp + c * wq;
        }
        for (int k = 0; k < n; ++k) {
          const double vp = v(k, p);
          const double vq = v(k, q);
          v(k, p) = c * vp - s * vq;
          v(k, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> norms(n);
  for (int k = 0; k < n; ++k) norms[k] = w.col(k).norm();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return norms[i] > norms[j]; });

  SingularData sd;
  sd.lambdas = Vec::Zero(n);
  sd.u_frame = Mat::Zero(n, n);
  sd.v_frame = Mat::Zero(m, m);
  const double lam_max = n > 0 ? norms[order[0]] : 0.0;
  const double cutoff = kRankRelTol * std::max(1.0, lam_max);
  int filled = 0;
  for (int k = 0; k < n; ++k) {
    const int src = order[k];
    sd.u_frame.col(k) = v.col(src);
    const double lam = norms[src];
    if (lam >= cutoff && k < m) {
      // Sign convention on the domain vector; the target vector follows.
      Vec u = sd.u_frame.col(k);
      Vec col = w.col(src);
      for (int c = 0; c < n; ++c) {
        if (std::abs(u(c)) > 1e-14) {
          if (u(c) < 0.0) {
            u = -u;
            col = -col;
          }
          break;
        }
      }
      sd.u_frame.col(k) = u;
      sd.lambdas(k) = lam;
      sd.v_frame.col(k) = col / lam;
      ++filled;
    } else {
      fix_sign(sd.u_frame.col(k));
    }
  }
  sd.rank = filled;

  // Complete the target frame with Gram-Schmidt over the standard basis.
  int next = filled;
  for (int e = 0; e < m && next < m; ++e) {
    Vec cand = Vec::Zero(m);
    cand(e) = 1.0;
    for (int pass = 0; pass < 2; ++pass)
      for (int k = 0; k < next; ++k) cand -= sd.v_frame.col(k).dot(cand) * sd.v_frame.col(k);
    const double nrm = cand.norm();
    if (nrm < 1e-8) continue;
    cand /= nrm;
    fix_sign(cand);
    sd.v_frame.col(next++) = cand;
  }
  return sd;
}

double star_omega(const Vec& lambdas) {
  double prod = 1.0;
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) prod *= 1.0 + lambdas(i) * lambdas(i);
  return 1.0 / std::sqrt(prod);
}

Vec s_tensor_diag(const Vec& lambdas) {
  Vec s(lambdas.size());
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
    const double l2 = lambdas(i) * lambdas(i);
    s(i) = (1.0 - l2) / (1.0 + l2);
  }
  return s;
}

double length_decreasing_margin(double eps) {
  const double q = (1.0 - eps) * (1.0 - eps);
  return (1.0 - q) / (1.0 + q);
}

double p_tensor_min_eig(const Vec& lambdas, double eps) {
  // In the orthonormal frame e_i both S and g are diagonal and g = I.
  const Vec s = s_tensor_diag(lambdas);
  return s.minCoeff() - length_decreasing_margin(eps);
}

SecondFundamental second_fundamental(const PointJet& jet) {
  const int n = jet.n();
  const int m = jet.m();
  const SingularData sd = singular_values(jet.jac);
  SecondFundamental out;
  for (int alpha = 0; alpha < m; ++alpha) {
    const Vec nu = normal_vector(sd, alpha, n, m);
    // Fiber part of the normal vector; the ambient Hessian has no base part.
    Mat proj = Mat::Zero(n, n);
    for (int a = 0; a < m; ++a) proj += nu(n + a) * jet.hess[a];
    Mat h(n, n);
    for (int i = 0; i < n; ++i) {
      const double si = std::sqrt(1.0 + sd.lambdas(i) * sd.lambdas(i));
      for (int j = 0; j < n; ++j) {
        const double sj = std::sqrt(1.0 + sd.lambdas(j) * sd.lambdas(j));
        h(i, j) = sd.u_frame.col(i).dot(proj * sd.u_frame.col(j)) / (si * sj);
      }
    }
    out.h[alpha] = h;
    out.normsq += h.squaredNorm();
  }
  return out;
}

Vec mss_residual(const PointJet& jet, const Mat& ginv) {
  const int m = jet.m();
  Vec r(m);
  for (int a = 0; a < m; ++a) r(a) = ginv.cwiseProduct(jet.hess[a]).sum();
  return r;
}

Vec mss_residual(const PointJet& jet) { return mss_residual(jet, induced_metric(jet).ginv); }

MeanCurvature mean_curvature(const PointJet& jet) {
  const int n = jet.n();
  const int m = jet.m();
  const Vec r = mss_residual(jet);
  Vec v = Vec::Zero(n + m);
  v.tail(m) = r;
  const SingularData sd = singular_values(jet.jac);
  Vec tangential = Vec::Zero(n + m);
  for (int i = 0; i < n; ++i) {
    const Vec e = tangent_vector(sd, i, n, m);
    tangential += e.dot(v) * e;
  }
  MeanCurvature hc;
  hc.vector = v - tangential;
  hc.normsq = hc.vector.squaredNorm();
  return hc;
}

double mean_curvature_normsq(const Mat& jac, const Mat& ginv, const Vec& residual) {
  const Vec jt_r = jac.transpose() * residual;
  return std::max(0.0, residual.squaredNorm() - jt_r.dot(ginv * jt_r));
}

Vec normal_projection(const Mat& jac, const Mat& ginv, const Vec& v) {
  const auto n = jac.cols();
  const auto m = jac.rows();
  // Tangent space is spanned by the columns of T = [I; J].
  const Vec tv = v.head(n) + jac.transpose() * v.tail(m);
  const Vec coeff = ginv * tv;
  Vec out = v;
  out.head(n) -= coeff;
  out.tail(m) -= jac * coeff;
  return out;
}

Vec shrinker_residual(const PointJet& jet, double c) {
  const int n = jet.n();
  const int m = jet.m();
  const MetricPair mp = induced_metric(jet);
  Vec pos(n + m);
  pos.head(n) = jet.x;
  pos.tail(m) = jet.value;
  return mean_curvature(jet).vector + 0.5 * c * normal_projection(jet.jac, mp.ginv, pos);
}

}  // namespace mssflow
