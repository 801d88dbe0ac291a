#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "progsr/core/random.hpp"
#include "progsr/core/types.hpp"

namespace progsr::data {

// Motion classes of the procedural clips. Index = class id.
inline const std::vector<std::string>& synth_class_names() {
  static const std::vector<std::string> names{
      "static",        "translate_n",  "translate_ne", "translate_e",  "translate_se",
      "translate_s",   "translate_sw", "translate_w",  "translate_nw", "oscillate_h",
      "oscillate_v",   "grow",         "shrink",       "rotate_cw",    "rotate_ccw",
      "blink",         "circle_cw",    "circle_ccw",   "dash_e",       "dash_w",
      "dash_n",        "dash_s",       "pulse",        "zigzag",       "fade",
      "shake"};
  return names;
}

inline constexpr int kSynthClasses = 26;

struct SynthOptions {
  int channels = 3;
  double noise = 0.0;  // std-dev of additive Gaussian noise
  double fps = 30.0;
};

namespace detail {

struct Actor {
  int motion = 0;
  double cx = 0, cy = 0;  // start centre, pixels
  double half_len = 0, half_wid = 0;  // bar half extents
  double angle = 0;
  std::array<double, 3> colour{};
  double phase = 0;
};

struct ActorPose {
  double cx, cy, half_len, half_wid, angle, visibility;
};

// Position along the clip: u in [0, 1].
inline ActorPose pose_at(const Actor& a, double u, std::int64_t frame, double size,
                         std::uint64_t shake_seed) {
  ActorPose p{a.cx, a.cy, a.half_len, a.half_wid, a.angle, 1.0};
  const double slow = 0.30 * size, fast = 0.60 * size, amp = 0.18 * size;
  static constexpr double kDiag = 0.70710678118654752;
  const double two_pi = 2.0 * M_PI;
  auto move = [&](double dx, double dy, double dist) {
    p.cx += dx * dist * (u - 0.5);
    p.cy += dy * dist * (u - 0.5);
  };
  switch (a.motion) {
    case 0: break;
    case 1: move(0, -1, slow); break;
    case 2: move(kDiag, -kDiag, slow); break;
    case 3: move(1, 0, slow); break;
    case 4: move(kDiag, kDiag, slow); break;
    case 5: move(0, 1, slow); break;
    case 6: move(-kDiag, kDiag, slow); break;
    case 7: move(-1, 0, slow); break;
    case 8: move(-kDiag, -kDiag, slow); break;
    case 9: p.cx += amp * std::sin(two_pi * 2.0 * u + a.phase); break;
    case 10: p.cy += amp * std::sin(two_pi * 2.0 * u + a.phase); break;
    case 11: p.half_len *= 0.6 + 0.8 * u; p.half_wid *= 0.6 + 0.8 * u; break;
    case 12: p.half_len *= 1.4 - 0.8 * u; p.half_wid *= 1.4 - 0.8 * u; break;
    case 13: p.angle += M_PI * u; break;
    case 14: p.angle -= M_PI * u; break;
    case 15: p.visibility = (frame / 2) % 2 == 0 ? 1.0 : 0.0; break;
    case 16:
      p.cx += amp * std::cos(two_pi * u + a.phase);
      p.cy += amp * std::sin(two_pi * u + a.phase);
      break;
    case 17:
      p.cx += amp * std::cos(-two_pi * u + a.phase);
      p.cy += amp * std::sin(-two_pi * u + a.phase);
      break;
    case 18: move(1, 0, fast); break;
    case 19: move(-1, 0, fast); break;
    case 20: move(0, -1, fast); break;
    case 21: move(0, 1, fast); break;
    case 22: {
      const double k = 1.0 + 0.35 * std::sin(two_pi * 3.0 * u + a.phase);
      p.half_len *= k;
      p.half_wid *= k;
      break;
    }
    case 23:
      move(1, 0, slow);
      p.cy += amp * (std::fmod(u * 4.0, 2.0) < 1.0 ? 1.0 : -1.0) * 0.5;
      break;
    case 24: p.visibility = 1.0 - 0.85 * u; break;
    case 25: {
      Rng r(derive_seed(shake_seed, static_cast<std::uint64_t>(frame)));
      p.cx += r.uniform(-0.06, 0.06) * size;
      p.cy += r.uniform(-0.06, 0.06) * size;
      break;
    }
    default: throw RangeError("unknown motion class " + std::to_string(a.motion));
  }
  return p;
}

inline bool inside(const ActorPose& p, double x, double y) {
  const double dx = x - p.cx, dy = y - p.cy;
  const double c = std::cos(p.angle), s = std::sin(p.angle);
  const double along = dx * c + dy * s, across = -dx * s + dy * c;
  return std::abs(along) <= p.half_len && std::abs(across) <= p.half_wid;
}

}  // namespace detail

/// Procedural clip: a smooth static background plus one hard-edged bar per
/// actor whose motion pattern is its class. Deterministic in `seed`.
inline std::pair<VideoClip, LabelVector> synth_clip(std::uint64_t seed,
                                                    const std::vector<int>& motion_classes,
                                                    const Extent3& size,
                                                    const SynthOptions& opts = {}) {
  const auto [T, H, W] = size;
  if (T < 8 || H < 14 || W < 14) throw ShapeError("synthetic clips need at least 8 x 14 x 14");
  if (motion_classes.empty()) throw RangeError("synth_clip needs at least one actor");
  if (opts.channels != 1 && opts.channels != 3) throw ShapeError("channels must be 1 or 3");
  for (int m : motion_classes) {
    if (m < 0 || m >= kSynthClasses) throw RangeError("unknown motion class " + std::to_string(m));
  }
  Rng rng(seed);
  const double dim = static_cast<double>(std::min(H, W));

  // Background: a few low-frequency waves per channel.
  struct Wave { double fx, fy, ph, amp; };
  std::vector<std::vector<Wave>> waves(static_cast<std::size_t>(opts.channels));
  std::vector<double> base(static_cast<std::size_t>(opts.channels));
  for (int c = 0; c < opts.channels; ++c) {
    base[static_cast<std::size_t>(c)] = rng.uniform(0.25, 0.55);
    for (int k = 0; k < 3; ++k) {
      waves[static_cast<std::size_t>(c)].push_back(
          {rng.uniform(0.5, 2.5) / static_cast<double>(W), rng.uniform(0.5, 2.5) / static_cast<double>(H),
           rng.uniform(0.0, 2.0 * M_PI), rng.uniform(0.03, 0.08)});
    }
  }

  std::vector<detail::Actor> actors;
  const auto n = static_cast<double>(motion_classes.size());
  for (std::size_t i = 0; i < motion_classes.size(); ++i) {
    detail::Actor a;
    a.motion = motion_classes[i];
    // Actors sit on distinct vertical bands so they rarely overlap.
    const double band = (static_cast<double>(i) + 0.5) / n;
    a.cx = static_cast<double>(W) * rng.uniform(0.35, 0.65);
    a.cy = static_cast<double>(H) * (0.15 + 0.7 * band + rng.uniform(-0.05, 0.05));
    a.half_len = dim * rng.uniform(0.10, 0.15);
    a.half_wid = dim * rng.uniform(0.04, 0.07);
    a.angle = rng.uniform(0.0, M_PI);
    for (int c = 0; c < 3; ++c) {
      a.colour[static_cast<std::size_t>(c)] = rng.uniform() < 0.5 ? rng.uniform(0.0, 0.15) : rng.uniform(0.85, 1.0);
    }
    a.phase = rng.uniform(0.0, 2.0 * M_PI);
    actors.push_back(a);
  }
  const std::uint64_t shake_seed = rng.next_u64();
  const std::uint64_t noise_seed = rng.next_u64();

  VideoClip clip = make_clip({opts.channels, T, H, W}, 0.0f, opts.fps, "synth-" + std::to_string(seed));
  Rng noise(noise_seed);
  std::vector<detail::ActorPose> poses(actors.size());
  for (std::int64_t t = 0; t < T; ++t) {
    const double u = T > 1 ? static_cast<double>(t) / static_cast<double>(T - 1) : 0.0;
    for (std::size_t i = 0; i < actors.size(); ++i) {
      poses[i] = detail::pose_at(actors[i], u, t, dim, shake_seed);
    }
    for (std::int64_t y = 0; y < H; ++y) {
      for (std::int64_t x = 0; x < W; ++x) {
        const double px = static_cast<double>(x) + 0.5, py = static_cast<double>(y) + 0.5;
        for (int c = 0; c < opts.channels; ++c) {
          double v = base[static_cast<std::size_t>(c)];
          for (const auto& w : waves[static_cast<std::size_t>(c)]) {
            v += w.amp * std::sin(2.0 * M_PI * (w.fx * px + w.fy * py) + w.ph);
          }
          for (std::size_t i = 0; i < actors.size(); ++i) {
            if (poses[i].visibility > 0.0 && detail::inside(poses[i], px, py)) {
              const double col = opts.channels == 3 ? actors[i].colour[static_cast<std::size_t>(c)]
                                                    : actors[i].colour[0];
              v = poses[i].visibility * col + (1.0 - poses[i].visibility) * v;
            }
          }
          if (opts.noise > 0.0) v += opts.noise * noise.normal();
          clip.at(c, t, y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
      }
    }
  }
  std::vector<int> positives(motion_classes.begin(), motion_classes.end());
  LabelVector labels = make_labels(kSynthClasses, positives);
  labels.class_names = synth_class_names();
  return {std::move(clip), std::move(labels)};
}

/// Draws 1..max_actors distinct classes from [0, num_classes) and renders the clip.
inline std::pair<VideoClip, LabelVector> random_synth_clip(std::uint64_t seed, int num_classes,
                                                           int max_actors, const Extent3& size,
                                                           const SynthOptions& opts = {}) {
  if (num_classes < 1 || num_classes > kSynthClasses) throw RangeError("num_classes outside [1,26]");
  Rng rng(derive_seed(seed, 0xC1A55));
  const int actors = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, max_actors))));
  std::vector<int> classes;
  while (static_cast<int>(classes.size()) < std::min(actors, num_classes)) {
    const int c = static_cast<int>(rng.below(static_cast<std::uint64_t>(num_classes)));
    if (std::find(classes.begin(), classes.end(), c) == classes.end()) classes.push_back(c);
  }
  auto [clip, labels] = synth_clip(seed, classes, size, opts);
  // Restrict the label space to the classes in use.
  labels.y.resize(static_cast<std::size_t>(num_classes));
  labels.class_names.resize(static_cast<std::size_t>(num_classes));
  return {std::move(clip), std::move(labels)};
}

}  // namespace progsr::data
