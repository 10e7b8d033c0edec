#include "gmphd_sat/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace gmphd_sat {

namespace {

enum class Stream : std::uint64_t { init = 1, world = 2, sensing = 3 };

Rng make_stream(std::uint64_t seed, Stream s) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(s)};
  return Rng(seq);
}

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double random_heading(Rng& rng) { return uniform(rng, 0.0, 2.0 * std::numbers::pi); }

Eigen::Vector2d uniform_in_world(const Bounds& world, Rng& rng) {
  const double x = uniform(rng, world.x_min, world.x_max);
  const double y = uniform(rng, world.y_min, world.y_max);
  return {x, y};
}

std::size_t half_up(int n) { return static_cast<std::size_t>((n + 1) / 2); }

}  // namespace

void ScenarioConfig::validate() const {
  if (steps <= 0) throw std::invalid_argument("steps must be positive");
  if (num_targets < 0) throw std::invalid_argument("num_targets must be nonnegative");
  if (!(clutter_rate >= 0.0)) throw std::invalid_argument("clutter_rate must be nonnegative");
  if (clutter_model == ClutterModel::bernoulli && clutter_rate > 1.0) {
    throw std::invalid_argument("clutter_rate is a probability under the bernoulli clutter model");
  }
  if (!(robot_speed > 0.0)) throw std::invalid_argument("robot_speed must be positive");
  if (!(target_speed >= 0.0)) throw std::invalid_argument("target_speed must be nonnegative");
  if (motion.direction_period < 1) throw std::invalid_argument("direction_period must be positive");
  if (!(initial_offset >= 0.0)) throw std::invalid_argument("initial_offset must be nonnegative");
  if (!(initial_variance > 0.0)) throw std::invalid_argument("initial_variance must be positive");
  if (!(process_noise >= 0.0)) throw std::invalid_argument("process_noise must be nonnegative");
  if (!(survival_prob >= 0.0 && survival_prob <= 1.0)) {
    throw std::invalid_argument("survival_prob must lie in [0, 1]");
  }
  if (!(world.width() > 0.0 && world.height() > 0.0)) {
    throw std::invalid_argument("world must have positive extent");
  }
  sensor.validate();
  filter.validate();
  track.validate();
  planner.validate(sensor.fov.radius);
  if (planner.world.x_min != world.x_min || planner.world.x_max != world.x_max ||
      planner.world.y_min != world.y_min || planner.world.y_max != world.y_max) {
    throw std::invalid_argument("planner world differs from scenario world");
  }
  if (gp.enabled) {
    for (const auto& p : gp.params) p.validate();
    if (!gp.params.empty() && gp.params.size() != 2) {
      throw std::invalid_argument("GP needs one hyperparameter set per position coordinate");
    }
    if (gp.window < 2) throw std::invalid_argument("GP window must hold at least 2 points");
    gp.bounds.validate();
  }
}

std::vector<GroundTruthTarget> spawn_targets(const ScenarioConfig& cfg, Rng& rng) {
  std::vector<GroundTruthTarget> out;
  out.reserve(static_cast<std::size_t>(cfg.num_targets));
  for (int i = 0; i < cfg.num_targets; ++i) {
    GroundTruthTarget t;
    t.position = uniform_in_world(cfg.world, rng);
    t.heading = random_heading(rng);
    t.speed = cfg.target_speed;
    out.push_back(t);
  }
  return out;
}

Intensityd initial_belief(std::span<const GroundTruthTarget> truth, const ScenarioConfig& cfg,
                          Rng& rng) {
  const Eigen::MatrixXd cov = cfg.initial_variance * Eigen::MatrixXd::Identity(2, 2);
  auto seeded_near = [&](const Eigen::Vector2d& p) {
    const double a = random_heading(rng);
    const Eigen::Vector2d m =
        cfg.world.clamp(p + cfg.initial_offset * Eigen::Vector2d(std::cos(a), std::sin(a)));
    return GaussianComponentd(1.0, m, cov);
  };

  std::vector<std::size_t> chosen(truth.size());
  std::iota(chosen.begin(), chosen.end(), std::size_t{0});
  if (cfg.initial_estimate == InitialEstimate::under) {
    std::shuffle(chosen.begin(), chosen.end(), rng);
    chosen.resize(half_up(static_cast<int>(truth.size())));
    std::sort(chosen.begin(), chosen.end());
  }
  Intensityd v;
  for (std::size_t i : chosen) v.push_back(seeded_near(truth[i].position));
  if (cfg.initial_estimate == InitialEstimate::over) {
    for (std::size_t k = 0; k < half_up(static_cast<int>(truth.size())); ++k) {
      v.emplace_back(1.0, uniform_in_world(cfg.world, rng), cov);
    }
  }
  return v;
}

std::vector<GroundTruthTarget> step_world(std::vector<GroundTruthTarget> targets,
                                          const Bounds& world, const TargetMotion& motion,
                                          Rng& rng, long step) {
  if (motion.stationary) return targets;
  constexpr int kMaxRedraws = 64;
  for (auto& t : targets) {
    if (step > 0 && step % motion.direction_period == 0) t.heading = random_heading(rng);
    auto next = [&] {
      return Eigen::Vector2d(t.position + t.speed * Eigen::Vector2d(std::cos(t.heading),
                                                                     std::sin(t.heading)));
    };
    Eigen::Vector2d p = next();
    for (int k = 0; k < kMaxRedraws && !world.contains(p); ++k) {
      t.heading = random_heading(rng);
      p = next();
    }
    if (world.contains(p)) t.position = p;
  }
  return targets;
}

std::vector<Eigen::Vector2d> sense(std::span<const GroundTruthTarget> targets,
                                   const SensorModel& sensor, double clutter_rate,
                                   ClutterModel model, Rng& rng) {
  const Eigen::Matrix2d noise_factor = Eigen::LLT<Eigen::Matrix2d>(sensor.meas_noise).matrixL();
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::bernoulli_distribution detect(sensor.p_detect_given_in);
  const double r = sensor.fov.radius;

  std::vector<Eigen::Vector2d> z;
  for (const auto& t : targets) {
    if ((t.position - sensor.fov.center).norm() > r) continue;
    if (!detect(rng)) continue;
    const double e0 = gauss(rng);
    const double e1 = gauss(rng);
    z.push_back(t.position + noise_factor * Eigen::Vector2d(e0, e1));
  }

  long clutter = 0;
  if (clutter_rate > 0.0) {
    clutter = model == ClutterModel::bernoulli
                  ? static_cast<long>(std::bernoulli_distribution(clutter_rate)(rng))
                  : static_cast<long>(std::poisson_distribution<long>(clutter_rate)(rng));
  }
  for (long k = 0; k < clutter; ++k) {
    const double rho = r * std::sqrt(uniform(rng, 0.0, 1.0));
    const double a = random_heading(rng);
    z.push_back(sensor.fov.center + rho * Eigen::Vector2d(std::cos(a), std::sin(a)));
  }
  return z;
}

MetricsRecord compute_metrics(std::span<const Eigen::Vector2d> truth, std::span<const Track> tracks,
                              const Intensityd& intensity, long step) {
  MetricsRecord rec;
  rec.step = step;
  rec.n_components = intensity.size();
  rec.sum_w_components = expected_cardinality(intensity);

  struct Confirmed {
    Eigen::Vector2d mean;
    Eigen::LLT<Eigen::Matrix2d> factor;
  };
  std::vector<Confirmed> confirmed;
  for (const auto& tr : tracks) {
    if (tr.status != TrackStatus::confirmed) continue;
    const auto& last = tr.latest();
    rec.sum_w_tracks += last.weight;
    const Eigen::Matrix2d P = last.covariance.topLeftCorner<2, 2>();
    rec.worst_track_trace = std::max(rec.worst_track_trace.value_or(0.0), P.trace());
    confirmed.push_back({last.mean.head<2>(), Eigen::LLT<Eigen::Matrix2d>(P)});
  }
  rec.n_confirmed = confirmed.size();
  if (confirmed.empty() || truth.empty()) return rec;

  double closest_sum = 0.0;
  double second_sum = 0.0;
  for (const auto& x : truth) {
    double best = std::numeric_limits<double>::infinity();
    double second = std::numeric_limits<double>::infinity();
    for (const auto& c : confirmed) {
      const double d = c.factor.matrixL().solve(x - c.mean).norm();
      if (d < best) {
        second = best;
        best = d;
      } else if (d < second) {
        second = d;
      }
    }
    closest_sum += best;
    second_sum += second;
  }
  const double n = static_cast<double>(truth.size());
  rec.mahal_closest = closest_sum / n;
  if (confirmed.size() >= 2) rec.mahal_second = second_sum / n;
  return rec;
}

namespace {

struct TrainingPoint {
  double t;
  Eigen::Vector2d p;
};

std::vector<TrainingPoint> load_training_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open GP training file '" + path + "'");
  std::vector<TrainingPoint> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double t = 0.0, x = 0.0, y = 0.0;
    if (!(fields >> t >> x >> y)) {
      if (out.empty() && line_no == 1) continue;  // header row
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected t,x,y");
    }
    out.push_back({t, {x, y}});
  }
  return out;
}

std::vector<TrainingPoint> synthetic_training(const ScenarioConfig& cfg) {
  constexpr long kSamples = 100;
  Rng rng(20240501u);
  GroundTruthTarget t;
  t.position = {0.5 * (cfg.world.x_min + cfg.world.x_max), 0.5 * (cfg.world.y_min + cfg.world.y_max)};
  t.heading = random_heading(rng);
  t.speed = cfg.target_speed;
  std::vector<GroundTruthTarget> one{t};
  const TargetMotion moving{false, cfg.motion.direction_period};
  const Eigen::Matrix2d L = Eigen::LLT<Eigen::Matrix2d>(cfg.sensor.meas_noise).matrixL();
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<TrainingPoint> out;
  for (long k = 0; k < kSamples; ++k) {
    one = step_world(std::move(one), cfg.world, moving, rng, k);
    const double e0 = gauss(rng);
    const double e1 = gauss(rng);
    out.push_back({static_cast<double>(k), one.front().position + L * Eigen::Vector2d(e0, e1)});
  }
  return out;
}

std::vector<GpHyperparams> fit_per_axis(std::span<const TrainingPoint> pts, const GpBounds& bounds) {
  std::vector<GpHyperparams> params;
  for (int axis = 0; axis < 2; ++axis) {
    std::vector<TimedSample> samples;
    samples.reserve(pts.size());
    for (const auto& p : pts) samples.push_back({p.t, p.p(axis)});
    params.push_back(fit_hyperparams(samples, bounds));
  }
  return params;
}

}  // namespace

std::vector<GpHyperparams> resolve_gp_params(const ScenarioConfig& cfg) {
  if (!cfg.gp.params.empty()) return cfg.gp.params;
  static std::mutex mutex;
  static std::map<std::string, std::vector<GpHyperparams>> cache;
  std::ostringstream key;
  key.precision(17);
  const auto& b = cfg.gp.bounds;
  key << cfg.gp.training_file << '|' << cfg.target_speed << '|' << cfg.motion.direction_period << '|'
      << cfg.sensor.meas_noise(0, 0) << ',' << cfg.sensor.meas_noise(1, 0) << ','
      << cfg.sensor.meas_noise(1, 1) << '|' << b.signal_min << ',' << b.signal_max << ','
      << b.length_min << ',' << b.length_max << ',' << b.noise_min << ',' << b.noise_max << ','
      << b.grid_points << '|' << cfg.world.x_min << ',' << cfg.world.y_min << ','
      << cfg.world.x_max << ',' << cfg.world.y_max;
  std::lock_guard lock(mutex);
  if (auto it = cache.find(key.str()); it != cache.end()) return it->second;
  const auto pts = cfg.gp.training_file.empty() ? synthetic_training(cfg)
                                                : load_training_file(cfg.gp.training_file);
  auto params = fit_per_axis(pts, cfg.gp.bounds);
  cache.emplace(key.str(), params);
  return params;
}

PredictionOverrides gp_overrides(std::span<const Track> tracks, std::size_t n_components,
                                 const std::vector<GpHyperparams>& params, const GpSettings& gp) {
  PredictionOverrides out;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> points;
  for (const auto& tr : tracks) {
    if (tr.status != TrackStatus::confirmed || !tr.source_component) continue;
    if (*tr.source_component >= n_components || out.contains(*tr.source_component)) continue;
    const std::size_t count = std::min(gp.window, tr.life_length());
    if (count < 2) continue;
    times.clear();
    points.clear();
    for (std::size_t i = tr.life_length() - count; i < tr.life_length(); ++i) {
      times.push_back(static_cast<double>(tr.history[i].step));
      points.push_back(tr.history[i].mean.head<2>());
    }
    try {
      std::vector<GpHyperparams> hp = params;
      if (gp.refit_per_track && count >= 5) {
        for (int axis = 0; axis < 2; ++axis) {
          std::vector<TimedSample> s;
          for (std::size_t i = 0; i < count; ++i) s.push_back({times[i], points[i](axis)});
          hp[static_cast<std::size_t>(axis)] = fit_hyperparams(s, gp.bounds);
        }
      }
      const auto pred = predict_track(make_window(times, points, hp, gp.window), 1).front();
      Eigen::VectorXd mean = tr.latest().mean;
      mean.head<2>() = pred.mean;
      Eigen::MatrixXd cov = tr.latest().covariance;
      cov.diagonal().head<2>() += pred.latent_variance;
      out.emplace(*tr.source_component, PredictedState{std::move(mean), std::move(cov)});
    } catch (const GpError&) {
      // Falls back to the linear model for this component.
    }
  }
  return out;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  Rng init_rng = make_stream(cfg.seed, Stream::init);
  Rng world_rng = make_stream(cfg.seed, Stream::world);
  Rng sense_rng = make_stream(cfg.seed, Stream::sensing);

  auto truth = spawn_targets(cfg, init_rng);
  Intensityd intensity = initial_belief(truth, cfg, init_rng);
  const LinearMotionModel motion = LinearMotionModel::random_walk(2, cfg.process_noise, cfg.survival_prob);
  const std::vector<GpHyperparams> gp_params =
      cfg.gp.enabled ? resolve_gp_params(cfg) : std::vector<GpHyperparams>{};

  RobotState robot;
  robot.speed = cfg.robot_speed;
  robot.position = LawnmowerPath(cfg.world, cfg.planner.lane_spacing).point_at(0.0);

  SensorModel sensor = cfg.sensor;
  sensor.clutter_mean = cfg.clutter_rate;

  ScenarioResult result;
  result.metrics.reserve(static_cast<std::size_t>(cfg.steps));
  TrackSet tracks;
  std::vector<Eigen::Vector2d> truth_pos(truth.size());

  for (long k = 1; k <= cfg.steps; ++k) {
    robot.position = next_position(robot, intensity, cfg.planner, k);
    truth = step_world(std::move(truth), cfg.world, cfg.motion, world_rng, k);
    sensor.fov.center = robot.position;
    const auto z = sense(truth, sensor, cfg.clutter_rate, cfg.clutter_model, sense_rng);

    const PredictionOverrides overrides =
        cfg.gp.enabled ? gp_overrides(tracks.tracks, intensity.size(), gp_params, cfg.gp)
                       : PredictionOverrides{};
    const Intensityd predicted = predict(intensity, motion, overrides);
    intensity = prune_merge(update(predicted, z, sensor, cfg.filter), cfg.filter);
    std::vector<TargetEstimate> targets;
    if (!cfg.extract_births) targets = extract_targets(intensity, cfg.filter);
    for (auto& b : birth_from_measurements(z, sensor, cfg.filter)) intensity.push_back(std::move(b));
    if (cfg.extract_births) targets = extract_targets(intensity, cfg.filter);
    tracks = associate(std::move(tracks), targets, cfg.track, k);

    for (std::size_t i = 0; i < truth.size(); ++i) truth_pos[i] = truth[i].position;
    result.metrics.push_back(compute_metrics(truth_pos, tracks.tracks, intensity, k));

    if (cfg.record_events) {
      StepEvent ev;
      ev.step = k;
      ev.robot = robot.position;
      ev.truth = truth_pos;
      ev.measurements = z;
      for (const auto& tr : tracks.tracks) {
        ev.tracks.push_back({tr.id, tr.latest().mean.head<2>(),
                             tr.latest().covariance.topLeftCorner<2, 2>(), tr.status});
      }
      result.events.push_back(std::move(ev));
    }
  }
  result.final_tracks = std::move(tracks);
  result.final_intensity = std::move(intensity);
  return result;
}

}  // namespace gmphd_sat
