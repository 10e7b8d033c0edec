#ifndef GMPHD_SAT_TESTS_ORACLES_HPP
#define GMPHD_SAT_TESTS_ORACLES_HPP

// Slow, direct re-implementations used only to check the library.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline double naive_density(const VectorXd& x, const VectorXd& m, const MatrixXd& P) {
  const double d = static_cast<double>(x.size());
  const VectorXd dx = x - m;
  const double q = dx.dot(P.inverse() * dx);
  return std::exp(-0.5 * q) / std::sqrt(std::pow(2.0 * std::numbers::pi, d) * P.determinant());
}

inline double explicit_mahalanobis_sq(const VectorXd& x, const VectorXd& m, const MatrixXd& P) {
  const VectorXd dx = x - m;
  return dx.dot(P.inverse() * dx);
}

/// Fraction of n samples from N(m, P) that land in the disk. Samples are
/// drawn through the eigen-decomposition of P.
inline double mc_prob_in_disk(const Eigen::Vector2d& m, const Eigen::Matrix2d& P,
                              const Eigen::Vector2d& center, double r, long n, std::uint64_t seed) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(P);
  const Eigen::Matrix2d A = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  long inside = 0;
  for (long i = 0; i < n; ++i) {
    const double u = g(rng);
    const double v = g(rng);
    const Eigen::Vector2d x = m + A * Eigen::Vector2d(u, v);
    if ((x - center).squaredNorm() <= r * r) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(n);
}

struct Weighted {
  double w;
  VectorXd m;
  MatrixXd P;
};

struct Moments {
  double weight = 0.0;
  VectorXd mean;
  MatrixXd cov;
};

/// Total weight, mean and covariance of the normalised mixture from
/// E[x] and E[x x^T].
inline Moments mixture_moments(const std::vector<Weighted>& cs) {
  const auto d = cs.front().m.size();
  Moments out;
  VectorXd first = VectorXd::Zero(d);
  MatrixXd second = MatrixXd::Zero(d, d);
  for (const auto& c : cs) out.weight += c.w;
  for (const auto& c : cs) {
    const double p = c.w / out.weight;
    first += p * c.m;
    second += p * (c.P + c.m * c.m.transpose());
  }
  out.mean = first;
  out.cov = second - first * first.transpose();
  return out;
}

/// Textbook Kalman filter with explicit inverses.
struct Kalman {
  VectorXd x;
  MatrixXd P;

  void predict(const MatrixXd& F, const MatrixXd& Q) {
    x = F * x;
    P = F * P * F.transpose() + Q;
  }
  void update(const VectorXd& z, const MatrixXd& H, const MatrixXd& R) {
    const MatrixXd S = H * P * H.transpose() + R;
    const MatrixXd K = P * H.transpose() * S.inverse();
    x = x + K * (z - H * x);
    const MatrixXd I = MatrixXd::Identity(P.rows(), P.cols());
    P = (I - K * H) * P;
    P = 0.5 * (P + P.transpose());
  }
};

struct Closest {
  double closest = std::numeric_limits<double>::quiet_NaN();
  double second = std::numeric_limits<double>::quiet_NaN();
};

/// Mean over truth of the smallest and second smallest Mahalanobis
/// distance to the given tracks, by sorting all pairs.
inline Closest brute_force_closest(const std::vector<Eigen::Vector2d>& truth,
                                   const std::vector<Eigen::Vector2d>& means,
                                   const std::vector<Eigen::Matrix2d>& covs) {
  Closest out;
  if (means.empty() || truth.empty()) return out;
  double s1 = 0.0;
  double s2 = 0.0;
  for (const auto& x : truth) {
    std::vector<double> d;
    for (std::size_t k = 0; k < means.size(); ++k) {
      d.push_back(std::sqrt(explicit_mahalanobis_sq(x, means[k], covs[k])));
    }
    std::sort(d.begin(), d.end());
    s1 += d[0];
    if (d.size() > 1) s2 += d[1];
  }
  out.closest = s1 / static_cast<double>(truth.size());
  if (means.size() > 1) out.second = s2 / static_cast<double>(truth.size());
  return out;
}

/// GP log marginal likelihood of de-meaned data from the explicit inverse
/// and determinant.
inline double naive_gp_lml(const std::vector<double>& t, const std::vector<double>& y_in,
                           double sf, double ell, double sn) {
  const auto n = static_cast<Eigen::Index>(t.size());
  VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = y_in[static_cast<std::size_t>(i)];
  y.array() -= y.mean();
  MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = (t[static_cast<std::size_t>(i)] - t[static_cast<std::size_t>(j)]) / ell;
      K(i, j) = sf * std::exp(-0.5 * d * d) + (i == j ? sn : 0.0);
    }
  }
  const double logdet = std::log(K.determinant());
  return -0.5 * y.dot(K.inverse() * y) - 0.5 * logdet -
         0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

/// Best naive log marginal likelihood over a g^3 log grid between the bounds.
inline double grid_rescan_best(const std::vector<double>& t, const std::vector<double>& y,
                               double s_lo, double s_hi, double l_lo, double l_hi, double n_lo,
                               double n_hi, int g) {
  auto at = [g](double lo, double hi, int k) {
    return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * k / (g - 1));
  };
  double best = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < g; ++a) {
    for (int b = 0; b < g; ++b) {
      for (int c = 0; c < g; ++c) {
        const double v = naive_gp_lml(t, y, at(s_lo, s_hi, a), at(l_lo, l_hi, b), at(n_lo, n_hi, c));
        if (std::isfinite(v)) best = std::max(best, v);
      }
    }
  }
  return best;
}

inline std::vector<double> line(double a, double b, const std::vector<double>& t) {
  std::vector<double> y;
  for (double ti : t) y.push_back(a + b * ti);
  return y;
}

inline std::vector<double> sine(double amplitude, double period, const std::vector<double>& t) {
  std::vector<double> y;
  for (double ti : t) y.push_back(amplitude * std::sin(2.0 * std::numbers::pi * ti / period));
  return y;
}

/// Random symmetric positive definite 2x2 with standard deviations in
/// [s_lo, s_hi] and correlation in (-0.9, 0.9).
inline Eigen::Matrix2d random_spd2(std::mt19937_64& rng, double s_lo, double s_hi) {
  std::uniform_real_distribution<double> s(s_lo, s_hi);
  std::uniform_real_distribution<double> rho(-0.9, 0.9);
  const double sx = s(rng);
  const double sy = s(rng);
  const double c = rho(rng);
  Eigen::Matrix2d P;
  P << sx * sx, c * sx * sy, c * sx * sy, sy * sy;
  return P;
}

inline MatrixXd random_spd(std::mt19937_64& rng, Eigen::Index d) {
  std::normal_distribution<double> g(0.0, 1.0);
  MatrixXd A(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) A(i, j) = g(rng);
  }
  return A * A.transpose() + 0.5 * MatrixXd::Identity(d, d);
}

}  // namespace oracle

#endif  // GMPHD_SAT_TESTS_ORACLES_HPP
