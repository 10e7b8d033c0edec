#ifndef GMPHD_SAT_GM_CORE_HPP
#define GMPHD_SAT_GM_CORE_HPP

// Gaussian-mixture primitives: weighted components, densities, Mahalanobis
// distances, moment merging and the probability mass of a bivariate normal
// inside a disk.

#include <Eigen/Dense>

#include <array>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gmphd_sat {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;

class InvalidComponent : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UnsupportedDimension : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class EmptyMerge : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One weighted Gaussian term of an intensity function.
///
/// The covariance is validated by a Cholesky factorisation at construction.
/// A covariance that is slightly asymmetric, or whose factorisation fails, is
/// replaced once by (P + P^T) / 2 and refactored before being rejected. The
/// factor is kept so densities and distances never refactor.
template <typename Scalar>
class GaussianComponent {
 public:
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;

  GaussianComponent(Scalar weight, Vector mean, Matrix covariance)
      : weight_(weight), mean_(std::move(mean)), covariance_(std::move(covariance)) {
    if (!(weight_ >= Scalar(0)) || !std::isfinite(static_cast<double>(weight_))) {
      throw InvalidComponent("component weight must be finite and nonnegative, got " +
                             std::to_string(static_cast<double>(weight_)));
    }
    if (mean_.size() == 0 || !mean_.allFinite()) {
      throw InvalidComponent("component mean must be a finite, non-empty vector");
    }
    if (covariance_.rows() != mean_.size() || covariance_.cols() != mean_.size()) {
      throw InvalidComponent("covariance must be " + std::to_string(mean_.size()) + "x" +
                             std::to_string(mean_.size()));
    }
    if (!covariance_.allFinite()) {
      throw InvalidComponent("covariance has non-finite entries");
    }
    const Scalar scale = std::max(Scalar(1), covariance_.cwiseAbs().maxCoeff());
    const bool symmetric =
        (covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff() <= Scalar(1e-12) * scale;
    factor_.compute(covariance_);
    if (!symmetric || !factor_ok()) {
      covariance_ = (Scalar(0.5) * (covariance_ + covariance_.transpose())).eval();
      factor_.compute(covariance_);
      if (!factor_ok()) {
        throw InvalidComponent("covariance is not positive definite");
      }
    }
  }

  Scalar weight() const { return weight_; }
  const Vector& mean() const { return mean_; }
  const Matrix& covariance() const { return covariance_; }
  Eigen::Index dim() const { return mean_.size(); }
  const Eigen::LLT<Matrix>& cholesky() const { return factor_; }

  GaussianComponent with_weight(Scalar weight) const {
    if (!(weight >= Scalar(0)) || !std::isfinite(static_cast<double>(weight))) {
      throw InvalidComponent("component weight must be finite and nonnegative");
    }
    GaussianComponent out = *this;
    out.weight_ = weight;
    return out;
  }

  GaussianComponent with_mean(Vector mean) const {
    if (mean.size() != mean_.size() || !mean.allFinite()) {
      throw InvalidComponent("replacement mean has wrong size or non-finite entries");
    }
    GaussianComponent out = *this;
    out.mean_ = std::move(mean);
    return out;
  }

 private:
  bool factor_ok() const {
    if (factor_.info() != Eigen::Success) return false;
    const auto diag = factor_.matrixLLT().diagonal();
    return diag.allFinite() && (diag.array() > Scalar(0)).all();
  }

  Scalar weight_;
  Vector mean_;
  Matrix covariance_;
  Eigen::LLT<Matrix> factor_;
};

/// Ordered Gaussian mixture approximating a PHD.
template <typename Scalar>
using Intensity = std::vector<GaussianComponent<Scalar>>;

using GaussianComponentd = GaussianComponent<double>;
using Intensityd = Intensity<double>;

template <typename Scalar>
Scalar expected_cardinality(const Intensity<Scalar>& v) {
  Scalar total(0);
  for (const auto& c : v) total += c.weight();
  return total;
}

/// Circular field of view.
template <typename Scalar>
struct FovDisk {
  Vector2<Scalar> center;
  Scalar radius;

  FovDisk(Vector2<Scalar> c, Scalar r) : center(std::move(c)), radius(r) {
    if (!(radius > Scalar(0)) || !std::isfinite(static_cast<double>(radius))) {
      throw std::invalid_argument("FOV radius must be positive");
    }
  }
};

using FovDiskd = FovDisk<double>;

template <typename Scalar, typename Derived>
Scalar mahalanobis_sq(const Eigen::MatrixBase<Derived>& x, const GaussianComponent<Scalar>& c) {
  if (x.size() != c.dim()) {
    throw InvalidComponent("point dimension does not match component");
  }
  const VectorX<Scalar> white = c.cholesky().matrixL().solve((x - c.mean()).eval());
  return white.squaredNorm();
}

/// Normal density of `c` at `x`; the component weight is ignored.
template <typename Scalar, typename Derived>
Scalar gaussian_density(const Eigen::MatrixBase<Derived>& x, const GaussianComponent<Scalar>& c) {
  using std::exp;
  using std::log;
  const Scalar d2 = mahalanobis_sq(x, c);
  const Scalar log_det = Scalar(2) * c.cholesky().matrixLLT().diagonal().array().log().sum();
  const Scalar log_norm =
      Scalar(0.5) * (static_cast<Scalar>(c.dim()) * log(Scalar(2) * std::numbers::pi_v<Scalar>) + log_det);
  return exp(Scalar(-0.5) * d2 - log_norm);
}

namespace detail {

// Phi(b) - Phi(a) for a <= b without cancellation in either tail.
template <typename Scalar>
Scalar normal_interval(Scalar a, Scalar b) {
  using std::erfc;
  const Scalar k = Scalar(1) / std::numbers::sqrt2_v<Scalar>;
  if (a >= Scalar(0)) return Scalar(0.5) * (erfc(a * k) - erfc(b * k));
  if (b <= Scalar(0)) return Scalar(0.5) * (erfc(-b * k) - erfc(-a * k));
  return Scalar(1) - Scalar(0.5) * (erfc(-a * k) + erfc(b * k));
}

// 10-point Gauss-Legendre rule on [-1, 1].
inline constexpr std::array<double, 5> kGlNodes = {
    0.1488743389816312108848260, 0.4333953941292471907992659, 0.6794095682990244062343274,
    0.8650633666889845107320967, 0.9739065285171717200779640};
inline constexpr std::array<double, 5> kGlWeights = {
    0.2955242247147528701738930, 0.2692667193099963550912269, 0.2190863625159820439955349,
    0.1494513491505805931457763, 0.0666713443086881375935688};

template <typename Scalar, typename F>
Scalar gauss_legendre(const F& f, Scalar a, Scalar b) {
  const Scalar half = Scalar(0.5) * (b - a);
  const Scalar mid = Scalar(0.5) * (a + b);
  Scalar sum(0);
  for (std::size_t i = 0; i < kGlNodes.size(); ++i) {
    const Scalar dx = half * Scalar(kGlNodes[i]);
    sum += Scalar(kGlWeights[i]) * (f(mid - dx) + f(mid + dx));
  }
  return sum * half;
}

template <typename Scalar, typename F>
Scalar adaptive_gauss_legendre(const F& f, Scalar a, Scalar b, Scalar whole, Scalar tol, int depth) {
  const Scalar mid = Scalar(0.5) * (a + b);
  const Scalar left = gauss_legendre(f, a, mid);
  const Scalar right = gauss_legendre(f, mid, b);
  const Scalar refined = left + right;
  using std::abs;
  if (depth <= 0 || abs(refined - whole) <= tol) return refined;
  return adaptive_gauss_legendre(f, a, mid, left, Scalar(0.5) * tol, depth - 1) +
         adaptive_gauss_legendre(f, mid, b, right, Scalar(0.5) * tol, depth - 1);
}

}  // namespace detail

/// Probability mass of the component's (2-D) normal inside the disk.
///
/// The inner integral over y given x is a difference of normal CDFs of the
/// conditional y|x. The outer integral runs over x = cx + r sin(t), which
/// removes the square-root endpoint behaviour of the chord, and is evaluated
/// by adaptive Gauss-Legendre quadrature to absolute tolerance `tol`. The
/// x-range is clipped to mean +/- 10 sigma, outside of which the marginal
/// mass is below 1e-22.
template <typename Scalar>
Scalar prob_in_fov(const GaussianComponent<Scalar>& c, const FovDisk<Scalar>& fov,
                   Scalar tol = Scalar(1e-6)) {
  using std::abs;
  using std::asin;
  using std::cos;
  using std::exp;
  using std::sin;
  using std::sqrt;
  if (c.dim() != 2) {
    throw UnsupportedDimension("FOV probability requires a 2-D component, got dimension " +
                               std::to_string(c.dim()));
  }
  const auto& m = c.mean();
  const auto& P = c.covariance();
  const Scalar r = fov.radius;
  const Scalar cx = fov.center.x();
  const Scalar cy = fov.center.y();

  // Cheap rejection / acceptance from the largest standard deviation.
  const Scalar half_diff = Scalar(0.5) * (P(0, 0) - P(1, 1));
  const Scalar spread =
      sqrt(Scalar(0.5) * (P(0, 0) + P(1, 1)) + sqrt(half_diff * half_diff + P(1, 0) * P(1, 0)));
  const Scalar dist = (m - fov.center).norm();
  if (dist - r > Scalar(10) * spread) return Scalar(0);
  if (dist + Scalar(10) * spread < r) return Scalar(1);

  const Scalar sx = sqrt(P(0, 0));
  const Scalar slope = P(1, 0) / P(0, 0);
  const Scalar cond_sd = sqrt(P(1, 1) - P(1, 0) * slope);

  const Scalar lo = std::max(cx - r, m.x() - Scalar(10) * sx);
  const Scalar hi = std::min(cx + r, m.x() + Scalar(10) * sx);
  if (!(lo < hi)) return Scalar(0);
  auto to_angle = [&](Scalar x) { return asin(std::clamp((x - cx) / r, Scalar(-1), Scalar(1))); };
  const Scalar t0 = to_angle(lo);
  const Scalar t1 = to_angle(hi);

  const Scalar inv_sqrt_2pi = Scalar(1) / sqrt(Scalar(2) * std::numbers::pi_v<Scalar>);
  auto integrand = [&](Scalar t) {
    const Scalar ct = cos(t);
    const Scalar x = cx + r * sin(t);
    const Scalar half_chord = r * ct;
    const Scalar zx = (x - m.x()) / sx;
    const Scalar marginal = inv_sqrt_2pi * exp(Scalar(-0.5) * zx * zx) / sx;
    const Scalar cond_mean = m.y() + slope * (x - m.x());
    const Scalar inner = detail::normal_interval((cy - half_chord - cond_mean) / cond_sd,
                                                 (cy + half_chord - cond_mean) / cond_sd);
    return marginal * inner * r * ct;
  };
  const Scalar coarse = detail::gauss_legendre(integrand, t0, t1);
  const Scalar p = detail::adaptive_gauss_legendre(integrand, t0, t1, coarse, tol, 30);
  return std::clamp(p, Scalar(0), Scalar(1));
}

/// p_D = p(detected | in FOV) * p(in FOV).
template <typename Scalar>
Scalar prob_detection(const GaussianComponent<Scalar>& c, const FovDisk<Scalar>& fov,
                      Scalar p_detect_given_in) {
  if (!(p_detect_given_in >= Scalar(0) && p_detect_given_in <= Scalar(1))) {
    throw std::invalid_argument("p_detect_given_in must lie in [0, 1]");
  }
  if (p_detect_given_in == Scalar(0)) return Scalar(0);
  return p_detect_given_in * prob_in_fov(c, fov);
}

/// Moment-matched merge: the result carries the summed weight and the
/// mixture's first two moments.
template <typename Scalar>
GaussianComponent<Scalar> merge_moment(std::span<const GaussianComponent<Scalar>> cs) {
  if (cs.empty()) throw EmptyMerge("cannot merge an empty set of components");
  if (cs.size() == 1) return cs.front();
  const Eigen::Index d = cs.front().dim();
  Scalar total(0);
  for (const auto& c : cs) {
    if (c.dim() != d) throw InvalidComponent("merged components differ in dimension");
    total += c.weight();
  }
  // All-zero weights degrade to an unweighted average.
  const bool uniform = !(total > Scalar(0));
  auto share = [&](const GaussianComponent<Scalar>& c) {
    return uniform ? Scalar(1) / static_cast<Scalar>(cs.size()) : c.weight() / total;
  };
  VectorX<Scalar> mean = VectorX<Scalar>::Zero(d);
  for (const auto& c : cs) mean += share(c) * c.mean();
  MatrixX<Scalar> cov = MatrixX<Scalar>::Zero(d, d);
  for (const auto& c : cs) {
    const VectorX<Scalar> dm = c.mean() - mean;
    cov += share(c) * (c.covariance() + dm * dm.transpose());
  }
  return GaussianComponent<Scalar>(total, std::move(mean), std::move(cov));
}

template <typename Scalar>
GaussianComponent<Scalar> merge_moment(const std::vector<GaussianComponent<Scalar>>& cs) {
  return merge_moment(std::span<const GaussianComponent<Scalar>>(cs));
}

/// Summed weight with plain (unweighted) averages of means and covariances.
template <typename Scalar>
GaussianComponent<Scalar> merge_plain_average(std::span<const GaussianComponent<Scalar>> cs) {
  if (cs.empty()) throw EmptyMerge("cannot merge an empty set of components");
  if (cs.size() == 1) return cs.front();
  const Eigen::Index d = cs.front().dim();
  const Scalar n = static_cast<Scalar>(cs.size());
  Scalar total(0);
  VectorX<Scalar> mean = VectorX<Scalar>::Zero(d);
  MatrixX<Scalar> cov = MatrixX<Scalar>::Zero(d, d);
  for (const auto& c : cs) {
    if (c.dim() != d) throw InvalidComponent("merged components differ in dimension");
    total += c.weight();
    mean += c.mean() / n;
    cov += c.covariance() / n;
  }
  return GaussianComponent<Scalar>(total, std::move(mean), std::move(cov));
}

}  // namespace gmphd_sat

#endif  // GMPHD_SAT_GM_CORE_HPP
