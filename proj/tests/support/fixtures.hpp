#pragma once

// Handcrafted annotation sets for the clip-extraction pipeline.

#include <string>
#include <vector>

#include "progsr/core/random.hpp"
#include "progsr/data/tubes.hpp"
#include "support/oracles.hpp"

namespace fixtures {

using progsr::data::ActionTube;
using progsr::data::Box;

// Box moves by (dx, dy) pixels per frame.
inline ActionTube tube(std::int64_t id, const std::string& video, int label, std::int64_t start, std::int64_t end,
                       Box box, std::int64_t dx = 0, std::int64_t dy = 0, const std::string& split = "train") {
  ActionTube t;
  t.id = id;
  t.video_id = video;
  t.label = label;
  t.start_frame = start;
  t.end_frame = end;
  t.split = split;
  for (std::int64_t f = start; f <= end; ++f) {
    t.boxes.push_back({box.x + dx * (f - start), box.y + dy * (f - start), box.w, box.h});
  }
  return t;
}

inline std::vector<ActionTube> random_tubes(std::uint64_t seed, int n, int videos, int classes) {
  progsr::Rng rng(seed);
  std::vector<ActionTube> out;
  for (int i = 0; i < n; ++i) {
    const auto start = static_cast<std::int64_t>(rng.below(300));
    const auto len = static_cast<std::int64_t>(5 + rng.below(200));
    const Box b{static_cast<std::int64_t>(rng.below(200)), static_cast<std::int64_t>(rng.below(200)),
                static_cast<std::int64_t>(10 + rng.below(100)), static_cast<std::int64_t>(10 + rng.below(100))};
    const auto dx = static_cast<std::int64_t>(rng.below(3)) - 1;
    const auto dy = static_cast<std::int64_t>(rng.below(3)) - 1;
    // Keep moving boxes inside the frame.
    Box safe = b;
    safe.x += len;
    safe.y += len;
    const auto video = rng.below(static_cast<std::uint64_t>(videos));
    // A video belongs to one split; every fifth one is held out.
    out.push_back(tube(i, "v" + std::to_string(video),
                       static_cast<int>(rng.below(static_cast<std::uint64_t>(classes))), start, start + len - 1, safe,
                       dx, dy, video % 5 == 4 ? "test" : "train"));
  }
  return out;
}

struct Fixture {
  std::string name;
  std::vector<ActionTube> tubes;
  oracle::PipelineOptions options;
};

inline oracle::PipelineOptions opts(std::int64_t chunk_len = 128, std::int64_t min_frames = 16,
                                    std::int64_t min_count = 1, double iou = 0.1, std::int64_t temporal = 1) {
  oracle::PipelineOptions o;
  o.chunk_len = chunk_len;
  o.min_frames = min_frames;
  o.min_count = min_count;
  o.iou_min = iou;
  o.temporal_min = temporal;
  return o;
}

inline std::vector<Fixture> all() {
  std::vector<Fixture> f;
  f.push_back({"single_passthrough", {tube(0, "a", 3, 0, 39, {10, 10, 64, 64})}, opts(100)});
  f.push_back({"disjoint_intervals",
               {tube(0, "a", 1, 0, 39, {10, 10, 30, 30}), tube(1, "a", 2, 60, 99, {10, 10, 30, 30})},
               opts()});
  f.push_back({"transitive_chain",
               {tube(0, "a", 0, 0, 40, {0, 0, 20, 20}), tube(1, "a", 1, 30, 70, {5, 5, 20, 20}),
                tube(2, "a", 2, 60, 100, {10, 10, 20, 20})},
               opts()});
  f.push_back({"co_temporal_far_apart",
               {tube(0, "a", 0, 0, 50, {0, 0, 20, 20}), tube(1, "a", 1, 0, 50, {200, 200, 20, 20})}, opts()});
  f.push_back({"label_change_point",
               {tube(0, "a", 0, 0, 99, {10, 10, 40, 40}), tube(1, "a", 1, 50, 99, {12, 12, 40, 40})}, opts()});
  f.push_back({"oversized_crop", {tube(0, "a", 0, 0, 40, {0, 0, 130, 60})}, opts()});
  f.push_back({"chunked_250", {tube(0, "a", 0, 0, 249, {0, 0, 50, 50})}, opts(100, 16)});
  f.push_back({"short_tail_dropped", {tube(0, "a", 0, 0, 209, {0, 0, 50, 50})}, opts(100, 16)});
  f.push_back({"rare_class_pruned",
               {tube(0, "a", 0, 0, 30, {0, 0, 20, 20}), tube(1, "b", 0, 0, 30, {0, 0, 20, 20}),
                tube(2, "c", 5, 0, 30, {0, 0, 20, 20})},
               opts(128, 16, 2)});
  f.push_back({"test_split_not_counted",
               {tube(0, "a", 0, 0, 30, {0, 0, 20, 20}), tube(1, "b", 0, 0, 30, {0, 0, 20, 20}),
                tube(2, "c", 4, 0, 30, {0, 0, 20, 20}, 0, 0, "test"),
                tube(3, "d", 4, 0, 30, {0, 0, 20, 20}, 0, 0, "test"),
                tube(4, "e", 4, 0, 30, {0, 0, 20, 20})},
               opts(128, 16, 2)});
  f.push_back({"videos_never_merge",
               {tube(0, "a", 0, 0, 40, {0, 0, 20, 20}), tube(1, "b", 1, 0, 40, {0, 0, 20, 20})}, opts()});
  f.push_back({"moving_union_too_large", {tube(0, "a", 0, 0, 99, {0, 0, 40, 40}, 1, 0)}, opts()});
  f.push_back({"same_label_overlap",
               {tube(0, "a", 7, 0, 60, {0, 0, 30, 30}), tube(1, "a", 7, 20, 90, {5, 5, 30, 30})}, opts()});
  // IoU exactly at the threshold: a 10x1 strip inside a 10x10 box.
  f.push_back({"iou_at_threshold",
               {tube(0, "a", 0, 0, 30, {0, 0, 10, 10}), tube(1, "a", 1, 0, 30, {0, 4, 10, 1})}, opts()});
  f.push_back({"iou_below_threshold",
               {tube(0, "a", 0, 0, 30, {0, 0, 10, 10}), tube(1, "a", 1, 0, 30, {0, 4, 9, 1})}, opts()});
  f.push_back({"temporal_minimum_not_met",
               {tube(0, "a", 0, 0, 30, {0, 0, 20, 20}), tube(1, "a", 1, 28, 60, {0, 0, 20, 20})},
               opts(128, 16, 1, 0.1, 5)});
  f.push_back({"nested_interval",
               {tube(0, "a", 0, 0, 99, {0, 0, 30, 30}), tube(1, "a", 1, 30, 59, {3, 3, 30, 30})}, opts()});
  f.push_back({"empty", {}, opts()});
  f.push_back({"crop_127_kept_128_dropped",
               {tube(0, "a", 0, 0, 30, {0, 0, 127, 127}), tube(1, "b", 0, 0, 30, {0, 0, 128, 20})}, opts()});
  f.push_back({"exact_min_frames",
               {tube(0, "a", 0, 0, 15, {0, 0, 20, 20}), tube(1, "b", 0, 0, 14, {0, 0, 20, 20})}, opts()});
  f.push_back({"alternating_labels",
               {tube(0, "a", 0, 0, 40, {0, 0, 30, 30}), tube(1, "a", 1, 30, 80, {2, 2, 30, 30}),
                tube(2, "a", 0, 70, 120, {4, 4, 30, 30}), tube(3, "a", 2, 100, 160, {6, 6, 30, 30})},
               opts(32, 8)});
  f.push_back({"random_one_video", random_tubes(11, 20, 1, 4), opts(64, 8)});
  f.push_back({"random_many_videos", random_tubes(12, 60, 5, 8), opts(64, 8, 3)});
  f.push_back({"random_dense", random_tubes(13, 40, 2, 3), opts(50, 10, 2, 0.05, 3)});
  return f;
}

inline progsr::data::BuildOptions build_options(const oracle::PipelineOptions& o) {
  progsr::data::BuildOptions b;
  b.spatial_iou_min = o.iou_min;
  b.temporal_overlap_min = o.temporal_min;
  b.chunk.max_hw = o.max_hw;
  b.chunk.min_frames = o.min_frames;
  b.chunk.chunk_len = o.chunk_len;
  b.min_count = o.min_count;
  return b;
}

}  // namespace fixtures
