#include "gmphd_sat/track.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace gmphd_sat {

const char* to_string(TrackStatus s) {
  return s == TrackStatus::confirmed ? "confirmed" : "tentative";
}

void TrackConfig::validate() const {
  if (l_threshold < 1) throw std::invalid_argument("l_threshold must be at least 1");
  if (!(gate > 0.0)) throw std::invalid_argument("track gate must be positive");
  if (max_coast < 1) throw std::invalid_argument("max_coast must be at least 1");
}

namespace {

TrackPoint to_point(const TargetEstimate& t, long step) {
  return {step, t.mean, t.covariance, t.weight};
}

void refresh_status(Track& track, const TrackConfig& cfg) {
  track.status =
      track.life_length() >= cfg.l_threshold ? TrackStatus::confirmed : TrackStatus::tentative;
}

}  // namespace

TrackSet associate(TrackSet in, std::span<const TargetEstimate> targets,
                   const TrackConfig& cfg, long step) {
  TrackSet out = std::move(in);
  auto& tracks = out.tracks;
  const std::size_t n_tracks = tracks.size();

  std::vector<std::size_t> order(targets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return targets[a].weight > targets[b].weight;
  });

  std::vector<Eigen::LLT<Eigen::MatrixXd>> factors;
  factors.reserve(targets.size());
  for (const auto& t : targets) factors.emplace_back(t.covariance);

  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> choice(targets.size(), kNone);
  std::vector<double> dist(targets.size(), std::numeric_limits<double>::infinity());
  for (std::size_t t = 0; t < targets.size(); ++t) {
    for (std::size_t k = 0; k < n_tracks; ++k) {
      const Eigen::VectorXd diff = targets[t].mean - tracks[k].latest().mean;
      const double d2 = factors[t].matrixL().solve(diff).squaredNorm();
      // Tracks are stored in ascending id, so strict < keeps the lower id on ties.
      if (d2 <= cfg.gate && d2 < dist[t]) {
        dist[t] = d2;
        choice[t] = k;
      }
    }
  }

  // Winner per track: smallest distance, then earliest in weight order.
  std::vector<std::size_t> winner(n_tracks, kNone);
  for (std::size_t t : order) {
    if (choice[t] == kNone) continue;
    std::size_t& w = winner[choice[t]];
    if (w == kNone || dist[t] < dist[w]) w = t;
  }

  std::vector<bool> extended(n_tracks, false);
  for (std::size_t k = 0; k < n_tracks; ++k) {
    if (winner[k] == kNone) continue;
    const auto& target = targets[winner[k]];
    tracks[k].history.push_back(to_point(target, step));
    tracks[k].coast = 0;
    tracks[k].source_component = target.component;
    extended[k] = true;
  }

  for (std::size_t t : order) {
    if (choice[t] != kNone && winner[choice[t]] == t) continue;
    Track fresh;
    fresh.id = out.next_id++;
    fresh.history.push_back(to_point(targets[t], step));
    fresh.source_component = targets[t].component;
    tracks.push_back(std::move(fresh));
  }

  for (std::size_t k = 0; k < n_tracks; ++k) {
    if (extended[k]) continue;
    ++tracks[k].coast;
    tracks[k].source_component.reset();
  }
  std::erase_if(tracks, [&](const Track& tr) { return tr.coast >= cfg.max_coast; });
  for (auto& tr : tracks) refresh_status(tr, cfg);
  return out;
}

std::vector<Track> confirmed_tracks(std::span<const Track> tracks) {
  std::vector<Track> out;
  for (const auto& tr : tracks) {
    if (tr.status == TrackStatus::confirmed) out.push_back(tr);
  }
  std::sort(out.begin(), out.end(), [](const Track& a, const Track& b) { return a.id < b.id; });
  return out;
}

}  // namespace gmphd_sat
