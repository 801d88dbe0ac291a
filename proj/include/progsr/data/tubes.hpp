#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include "progsr/core/errors.hpp"

namespace progsr::data {

/// Axis-aligned box in source-video pixels.
struct Box {
  std::int64_t x = 0, y = 0, w = 0, h = 0;

  std::int64_t area() const { return w * h; }
  friend bool operator==(const Box&, const Box&) = default;
  friend auto operator<=>(const Box&, const Box&) = default;
};

inline double box_iou(const Box& a, const Box& b) {
  const std::int64_t x0 = std::max(a.x, b.x), y0 = std::max(a.y, b.y);
  const std::int64_t x1 = std::min(a.x + a.w, b.x + b.w), y1 = std::min(a.y + a.h, b.y + b.h);
  const std::int64_t inter = std::max<std::int64_t>(0, x1 - x0) * std::max<std::int64_t>(0, y1 - y0);
  const std::int64_t uni = a.area() + b.area() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

inline Box box_union(const Box& a, const Box& b) {
  const std::int64_t x0 = std::min(a.x, b.x), y0 = std::min(a.y, b.y);
  const std::int64_t x1 = std::max(a.x + a.w, b.x + b.w), y1 = std::max(a.y + a.h, b.y + b.h);
  return {x0, y0, x1 - x0, y1 - y0};
}

/// One annotated action: a label over an inclusive frame interval, one box per frame.
struct ActionTube {
  std::int64_t id = 0;
  std::string video_id;
  int label = 0;
  std::int64_t start_frame = 0;
  std::int64_t end_frame = 0;
  std::vector<Box> boxes;
  std::string split = "train";

  std::int64_t length() const { return end_frame - start_frame + 1; }
  const Box& box_at(std::int64_t frame) const {
    return boxes[static_cast<std::size_t>(frame - start_frame)];
  }
  bool covers(std::int64_t frame) const { return frame >= start_frame && frame <= end_frame; }

  friend bool operator==(const ActionTube&, const ActionTube&) = default;
};

/// frame_w/frame_h <= 0 skips the frame-bounds check.
inline void validate_tube(const ActionTube& t, std::int64_t frame_w = 0, std::int64_t frame_h = 0) {
  if (t.start_frame < 0 || t.start_frame > t.end_frame) {
    throw DataError("tube " + std::to_string(t.id) + ": invalid frame interval");
  }
  if (static_cast<std::int64_t>(t.boxes.size()) != t.length()) {
    throw DataError("tube " + std::to_string(t.id) + ": expected " + std::to_string(t.length()) +
                    " boxes, got " + std::to_string(t.boxes.size()));
  }
  if (t.label < 0) throw DataError("tube " + std::to_string(t.id) + ": negative label");
  for (const Box& b : t.boxes) {
    if (b.w < 0 || b.h < 0 || b.x < 0 || b.y < 0) {
      throw DataError("tube " + std::to_string(t.id) + ": box outside the frame");
    }
    if (frame_w > 0 && frame_h > 0 && (b.x + b.w > frame_w || b.y + b.h > frame_h)) {
      throw DataError("tube " + std::to_string(t.id) + ": box outside the frame");
    }
  }
}

/// Union of overlapping tubes: per-frame label sets and union boxes.
struct MergedTube {
  std::string video_id;
  std::int64_t start_frame = 0;
  std::int64_t end_frame = 0;
  std::vector<std::vector<int>> labels;  // sorted, one set per frame
  std::vector<Box> boxes;
  std::vector<std::int64_t> source_ids;  // sorted
  std::string split = "train";

  std::int64_t length() const { return end_frame - start_frame + 1; }
  friend bool operator==(const MergedTube&, const MergedTube&) = default;
};

struct ClipRecord {
  std::string video_id;
  std::int64_t start_frame = 0;
  std::int64_t end_frame = 0;  // inclusive
  Box crop;
  std::vector<int> labels;  // sorted class ids
  std::string split = "train";
  // Stored clip, relative to the index file; empty when only the span is known.
  std::string clip_path;

  std::int64_t length() const { return end_frame - start_frame + 1; }
  friend bool operator==(const ClipRecord&, const ClipRecord&) = default;
};

inline bool record_less(const ClipRecord& a, const ClipRecord& b) {
  return std::tie(a.video_id, a.start_frame, a.end_frame, a.crop, a.labels, a.split, a.clip_path) <
         std::tie(b.video_id, b.start_frame, b.end_frame, b.crop, b.labels, b.split, b.clip_path);
}

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

inline bool tubes_overlap(const ActionTube& a, const ActionTube& b, double iou_min,
                          std::int64_t temporal_min) {
  const std::int64_t s = std::max(a.start_frame, b.start_frame);
  const std::int64_t e = std::min(a.end_frame, b.end_frame);
  const std::int64_t shared = e - s + 1;
  if (shared < std::max<std::int64_t>(temporal_min, 1)) return false;
  for (std::int64_t f = s; f <= e; ++f) {
    if (box_iou(a.box_at(f), b.box_at(f)) >= iou_min) return true;
  }
  return false;
}

inline MergedTube merge_members(const std::vector<const ActionTube*>& members) {
  MergedTube m;
  m.video_id = members.front()->video_id;
  m.split = members.front()->split;
  m.start_frame = members.front()->start_frame;
  m.end_frame = members.front()->end_frame;
  for (const ActionTube* t : members) {
    if (t->split != m.split) {
      throw DataError("video " + m.video_id + " has tubes in more than one split");
    }
    m.start_frame = std::min(m.start_frame, t->start_frame);
    m.end_frame = std::max(m.end_frame, t->end_frame);
    m.source_ids.push_back(t->id);
  }
  std::sort(m.source_ids.begin(), m.source_ids.end());
  const auto n = static_cast<std::size_t>(m.length());
  m.labels.assign(n, {});
  std::vector<bool> has_box(n, false);
  m.boxes.assign(n, Box{});
  for (const ActionTube* t : members) {
    for (std::int64_t f = t->start_frame; f <= t->end_frame; ++f) {
      const auto i = static_cast<std::size_t>(f - m.start_frame);
      m.labels[i].push_back(t->label);
      m.boxes[i] = has_box[i] ? box_union(m.boxes[i], t->box_at(f)) : t->box_at(f);
      has_box[i] = true;
    }
  }
  for (auto& l : m.labels) {
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
  }
  return m;
}

}  // namespace detail

/// Groups tubes of one video into connected components of the overlap relation:
/// two tubes overlap when they share at least `temporal_overlap_min` frames and
/// their boxes reach `spatial_iou_min` IoU on one of those frames.
inline std::vector<MergedTube> merge_overlapping(const std::vector<ActionTube>& tubes,
                                                 double spatial_iou_min = 0.1,
                                                 std::int64_t temporal_overlap_min = 1) {
  if (!(spatial_iou_min >= 0.0 && spatial_iou_min <= 1.0)) {
    throw InvalidThreshold("spatial IoU threshold must be in [0,1]");
  }
  if (temporal_overlap_min < 1) throw InvalidThreshold("temporal overlap must be at least 1 frame");
  if (tubes.empty()) return {};
  for (const auto& t : tubes) {
    validate_tube(t);
    if (t.video_id != tubes.front().video_id) {
      throw DataError("merge_overlapping expects tubes from a single video");
    }
  }
  // Sweep by start frame so only temporally intersecting pairs are tested.
  std::vector<std::size_t> order(tubes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(tubes[a].start_frame, tubes[a].id) < std::tie(tubes[b].start_frame, tubes[b].id);
  });
  detail::DisjointSets sets(tubes.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const ActionTube& a = tubes[order[i]];
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const ActionTube& b = tubes[order[j]];
      if (b.start_frame > a.end_frame) break;
      if (detail::tubes_overlap(a, b, spatial_iou_min, temporal_overlap_min)) {
        sets.unite(order[i], order[j]);
      }
    }
  }
  std::map<std::size_t, std::vector<const ActionTube*>> groups;
  for (std::size_t i = 0; i < tubes.size(); ++i) groups[sets.find(i)].push_back(&tubes[i]);
  std::vector<MergedTube> out;
  for (auto& [root, members] : groups) out.push_back(detail::merge_members(members));
  std::sort(out.begin(), out.end(), [](const MergedTube& a, const MergedTube& b) {
    return std::tie(a.start_frame, a.end_frame, a.source_ids) <
           std::tie(b.start_frame, b.end_frame, b.source_ids);
  });
  return out;
}

/// Cuts a merged tube wherever its per-frame label set changes.
inline std::vector<MergedTube> split_on_label_change(const MergedTube& tube) {
  std::vector<MergedTube> out;
  const auto n = static_cast<std::size_t>(tube.length());
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i < n && tube.labels[i] == tube.labels[begin]) continue;
    MergedTube seg;
    seg.video_id = tube.video_id;
    seg.split = tube.split;
    seg.start_frame = tube.start_frame + static_cast<std::int64_t>(begin);
    seg.end_frame = tube.start_frame + static_cast<std::int64_t>(i) - 1;
    seg.labels.assign(tube.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                      tube.labels.begin() + static_cast<std::ptrdiff_t>(i));
    seg.boxes.assign(tube.boxes.begin() + static_cast<std::ptrdiff_t>(begin),
                     tube.boxes.begin() + static_cast<std::ptrdiff_t>(i));
    seg.source_ids = tube.source_ids;
    out.push_back(std::move(seg));
    begin = i;
  }
  return out;
}

struct ChunkOptions {
  std::int64_t max_hw = 128;
  std::int64_t min_frames = 16;
  std::int64_t chunk_len = 128;
};

/// Keeps segments whose crop is strictly smaller than max_hw on both sides and
/// cuts them into chunks of at most chunk_len frames; short tails are dropped.
/// A segment's crop is the union of its per-frame boxes and is shared by its chunks.
inline std::vector<ClipRecord> filter_and_chunk(const std::vector<MergedTube>& segments,
                                                const ChunkOptions& opts = {}) {
  if (opts.min_frames < 1) throw ConfigError("min_frames must be >= 1");
  if (opts.chunk_len < opts.min_frames) throw ConfigError("chunk_len must be >= min_frames");
  std::vector<ClipRecord> out;
  for (const MergedTube& seg : segments) {
    if (seg.boxes.empty()) continue;
    Box crop = seg.boxes.front();
    for (const Box& b : seg.boxes) crop = box_union(crop, b);
    if (crop.w >= opts.max_hw || crop.h >= opts.max_hw) continue;
    for (std::int64_t s = seg.start_frame; s <= seg.end_frame; s += opts.chunk_len) {
      const std::int64_t e = std::min(seg.end_frame, s + opts.chunk_len - 1);
      if (e - s + 1 < opts.min_frames) continue;
      ClipRecord r;
      r.video_id = seg.video_id;
      r.start_frame = s;
      r.end_frame = e;
      r.crop = crop;
      r.labels = seg.labels[static_cast<std::size_t>(s - seg.start_frame)];
      r.split = seg.split;
      out.push_back(std::move(r));
    }
  }
  return out;
}

struct PruneResult {
  std::vector<ClipRecord> records;
  std::vector<int> kept_classes;  // original ids, ascending; new id = position
};

/// Drops classes with fewer than min_count training records and re-packs ids.
inline PruneResult prune_rare_classes(const std::vector<ClipRecord>& records, std::int64_t min_count) {
  if (min_count < 1) throw ConfigError("min_count must be >= 1");
  std::map<int, std::int64_t> counts;
  for (const auto& r : records) {
    for (int c : r.labels) {
      if (r.split == "train") ++counts[c];
      else counts.try_emplace(c, 0);
    }
  }
  PruneResult res;
  std::map<int, int> remap;
  for (const auto& [c, n] : counts) {
    if (n >= min_count) {
      remap[c] = static_cast<int>(res.kept_classes.size());
      res.kept_classes.push_back(c);
    }
  }
  for (const auto& r : records) {
    ClipRecord out = r;
    out.labels.clear();
    for (int c : r.labels) {
      auto it = remap.find(c);
      if (it != remap.end()) out.labels.push_back(it->second);
    }
    std::sort(out.labels.begin(), out.labels.end());
    if (!out.labels.empty()) res.records.push_back(std::move(out));
  }
  return res;
}

struct BuildOptions {
  double spatial_iou_min = 0.1;
  std::int64_t temporal_overlap_min = 1;
  ChunkOptions chunk;
  std::int64_t min_count = 50;
};

/// Full extraction: per video merge, split, filter and chunk, then prune
/// classes over the whole set. Output is sorted, so it does not depend on the
/// order of the input tubes.
inline PruneResult build_clip_records(const std::vector<ActionTube>& tubes,
                                      const BuildOptions& opts = {}) {
  std::map<std::string, std::vector<ActionTube>> by_video;
  for (const auto& t : tubes) by_video[t.video_id].push_back(t);
  std::vector<ClipRecord> records;
  for (auto& [video, vt] : by_video) {
    for (const MergedTube& m : merge_overlapping(vt, opts.spatial_iou_min, opts.temporal_overlap_min)) {
      auto chunks = filter_and_chunk(split_on_label_change(m), opts.chunk);
      records.insert(records.end(), chunks.begin(), chunks.end());
    }
  }
  PruneResult res = prune_rare_classes(records, opts.min_count);
  std::sort(res.records.begin(), res.records.end(), record_less);
  return res;
}

}  // namespace progsr::data
