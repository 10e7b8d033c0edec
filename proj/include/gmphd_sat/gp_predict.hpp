#ifndef GMPHD_SAT_GP_PREDICT_HPP
#define GMPHD_SAT_GP_PREDICT_HPP

// Per-coordinate Gaussian-process regression over time with a
// squared-exponential kernel and a constant (window mean) prior mean.

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace gmphd_sat {

class GpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GpHyperparams {
  double signal_variance = 1.0;  // m^2
  double length_scale = 10.0;    // time steps
  double noise_variance = 0.01;  // m^2

  void validate() const;
};

/// Search box for fit_hyperparams; each parameter is scanned on a log grid
/// of `grid_points` values between its bounds (inclusive).
struct GpBounds {
  double signal_min = 1e-2;
  double signal_max = 1e4;
  double length_min = 1.0;
  double length_max = 1e3;
  double noise_min = 1e-6;
  double noise_max = 1e1;
  int grid_points = 9;

  void validate() const;
};

struct TimedSample {
  double time = 0.0;
  double value = 0.0;
};

/// Training window: strictly increasing times and one column per dimension.
struct GpModel {
  std::vector<GpHyperparams> params;
  std::vector<double> times;
  Eigen::MatrixXd values;  // times.size() x params.size()

  void validate() const;
};

struct GpPrediction {
  Eigen::VectorXd mean;
  /// Predictive variance of a noisy observation: latent + noise.
  Eigen::VectorXd variance;
  /// Variance of the underlying function value alone.
  Eigen::VectorXd latent_variance;
};

double squared_exponential(double t0, double t1, const GpHyperparams& hp);

/// Log marginal likelihood of the de-meaned samples. Returns -inf when the
/// kernel matrix stays singular after jitter.
double log_marginal_likelihood(std::span<const TimedSample> samples, const GpHyperparams& hp);

/// Log-grid scan of all three hyperparameters followed by a coordinate
/// pattern search started from the best few grid points. The result never
/// scores below any grid point and is deterministic for a fixed grid.
GpHyperparams fit_hyperparams(std::span<const TimedSample> trainset, const GpBounds& bounds = {});

/// Posterior mean and variance (observation noise included) for steps
/// t_last + 1 .. t_last + horizon.
std::vector<GpPrediction> predict_track(const GpModel& model, int horizon);

/// Convenience: the most recent `max_window` points of a trajectory as a model.
GpModel make_window(std::span<const double> times, std::span<const Eigen::VectorXd> points,
                    const std::vector<GpHyperparams>& params, std::size_t max_window = 50);

}  // namespace gmphd_sat

#endif  // GMPHD_SAT_GP_PREDICT_HPP
