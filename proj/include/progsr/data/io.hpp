#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <png.h>

#include "progsr/core/types.hpp"
#include "progsr/data/tubes.hpp"

namespace progsr::data {

namespace fs = std::filesystem;
using nlohmann::json;

namespace detail {

// Reads a JSON-lines stream, calling fn(json, line_no, byte_offset) per non-blank line.
template <typename Fn>
void for_each_json_line(std::istream& in, Fn&& fn) {
  std::string line;
  long long line_no = 0;
  long long offset = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const long long start = offset;
    offset += static_cast<long long>(line.size()) + (in.eof() ? 0 : 1);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no,
                       start + static_cast<long long>(e.byte) - 1);
    }
    try {
      fn(j, line_no, start);
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad record: ") + e.what(), line_no, start);
    }
  }
}

inline std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

inline std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace detail

// ---- annotations ----------------------------------------------------------

inline json tube_to_json(const ActionTube& t) {
  json boxes = json::array();
  for (const Box& b : t.boxes) boxes.push_back({b.x, b.y, b.w, b.h});
  return {{"id", t.id},
          {"video_id", t.video_id},
          {"label", t.label},
          {"start_frame", t.start_frame},
          {"end_frame", t.end_frame},
          {"boxes", boxes},
          {"split", t.split}};
}

/// One tube per line: {video_id, label, start_frame, end_frame, boxes:[[x,y,w,h],...]}
/// with optional id (defaults to the record number) and split (defaults to "train").
inline std::vector<ActionTube> parse_annotations(std::istream& in) {
  std::vector<ActionTube> tubes;
  detail::for_each_json_line(in, [&](const json& j, long long line, long long offset) {
    ActionTube t;
    t.id = j.value("id", static_cast<std::int64_t>(tubes.size()));
    t.video_id = j.at("video_id").get<std::string>();
    t.label = j.at("label").get<int>();
    t.start_frame = j.at("start_frame").get<std::int64_t>();
    t.end_frame = j.at("end_frame").get<std::int64_t>();
    t.split = j.value("split", std::string("train"));
    for (const auto& b : j.at("boxes")) {
      if (b.size() != 4) throw ParseError("box needs four numbers", line, offset);
      t.boxes.push_back({b[0].get<std::int64_t>(), b[1].get<std::int64_t>(), b[2].get<std::int64_t>(),
                         b[3].get<std::int64_t>()});
    }
    try {
      validate_tube(t);
    } catch (const DataError& e) {
      throw ParseError(e.what(), line, offset);
    }
    tubes.push_back(std::move(t));
  });
  return tubes;
}

inline std::vector<ActionTube> read_annotations(const fs::path& path) {
  auto in = detail::open_in(path);
  return parse_annotations(in);
}

inline void write_annotations(const fs::path& path, const std::vector<ActionTube>& tubes) {
  auto out = detail::open_out(path);
  for (const auto& t : tubes) out << tube_to_json(t).dump() << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

// ---- dataset index ----------------------------------------------------------

struct IndexHeader {
  int num_classes = 0;
  std::vector<std::string> class_names;
  std::string created_by = "progsr";
  std::string config_hash;

  friend bool operator==(const IndexHeader&, const IndexHeader&) = default;
};

struct DatasetIndex {
  IndexHeader header;
  std::vector<ClipRecord> records;

  friend bool operator==(const DatasetIndex&, const DatasetIndex&) = default;
};

inline json record_to_json(const ClipRecord& r) {
  json j = {{"video_id", r.video_id},
            {"start_frame", r.start_frame},
            {"end_frame", r.end_frame},
            {"crop", {r.crop.x, r.crop.y, r.crop.w, r.crop.h}},
            {"labels", r.labels},
            {"split", r.split}};
  if (!r.clip_path.empty()) j["clip"] = r.clip_path;
  return j;
}

inline ClipRecord record_from_json(const json& j) {
  ClipRecord r;
  r.video_id = j.at("video_id").get<std::string>();
  r.start_frame = j.at("start_frame").get<std::int64_t>();
  r.end_frame = j.at("end_frame").get<std::int64_t>();
  const auto& c = j.at("crop");
  r.crop = {c.at(0).get<std::int64_t>(), c.at(1).get<std::int64_t>(), c.at(2).get<std::int64_t>(),
            c.at(3).get<std::int64_t>()};
  r.labels = j.at("labels").get<std::vector<int>>();
  r.split = j.at("split").get<std::string>();
  r.clip_path = j.value("clip", std::string());
  return r;
}

inline void write_index(std::ostream& out, const DatasetIndex& index) {
  json header = {{"kind", "header"},
                 {"num_classes", index.header.num_classes},
                 {"class_names", index.header.class_names},
                 {"created_by", index.header.created_by},
                 {"config_hash", index.header.config_hash},
                 {"num_records", index.records.size()}};
  out << header.dump() << '\n';
  for (const auto& r : index.records) out << record_to_json(r).dump() << '\n';
}

inline void write_index(const fs::path& path, const DatasetIndex& index) {
  auto out = detail::open_out(path);
  write_index(out, index);
  if (!out) throw IoError("write failed: " + path.string());
}

/// Reads an index; a missing header, malformed line or short record count
/// raises ParseError with the line and byte offset where reading stopped.
inline DatasetIndex read_index(std::istream& in) {
  DatasetIndex index;
  bool have_header = false;
  std::size_t expected = 0;
  long long last_line = 0, end_offset = 0;
  detail::for_each_json_line(in, [&](const json& j, long long line, long long offset) {
    last_line = line;
    end_offset = offset + static_cast<long long>(j.dump().size()) + 1;
    if (!have_header) {
      if (j.value("kind", std::string()) != "header") {
        throw ParseError("index must start with a header record", line, offset);
      }
      index.header.num_classes = j.at("num_classes").get<int>();
      index.header.class_names = j.at("class_names").get<std::vector<std::string>>();
      index.header.created_by = j.value("created_by", std::string());
      index.header.config_hash = j.value("config_hash", std::string());
      expected = j.at("num_records").get<std::size_t>();
      have_header = true;
      return;
    }
    ClipRecord r = record_from_json(j);
    for (int c : r.labels) {
      if (c < 0 || c >= index.header.num_classes) {
        throw ParseError("label id " + std::to_string(c) + " outside the class list", line, offset);
      }
    }
    index.records.push_back(std::move(r));
  });
  in.clear();
  in.seekg(0, std::ios::end);
  const long long size = static_cast<long long>(in.tellg());
  if (!have_header) throw ParseError("empty index (no header record)", 1, 0);
  if (index.records.size() != expected) {
    throw ParseError("index truncated: expected " + std::to_string(expected) + " records, read " +
                         std::to_string(index.records.size()),
                     last_line + 1, size >= 0 ? size : end_offset);
  }
  return index;
}

inline DatasetIndex read_index(const fs::path& path) {
  auto in = detail::open_in(path);
  return read_index(in);
}

// ---- raw volumes --------------------------------------------------------------

inline constexpr std::uint32_t kVolumeMagic = 0x56525350;  // "PSRV" little-endian
inline constexpr std::uint32_t kVolumeVersion = 1;
enum class VolumeDtype : std::uint32_t { u8 = 1, f32 = 2 };

/// Header: magic, version, C, T, H, W, dtype code, fps x 1000 (eight little-endian u32).
inline void write_volume(const fs::path& path, const VideoClip& clip,
                         VolumeDtype dtype = VolumeDtype::f32) {
  validate_clip(clip);
  auto out = detail::open_out(path);
  const std::array<std::uint32_t, 8> header{
      kVolumeMagic,
      kVolumeVersion,
      static_cast<std::uint32_t>(clip.channels()),
      static_cast<std::uint32_t>(clip.frames()),
      static_cast<std::uint32_t>(clip.height()),
      static_cast<std::uint32_t>(clip.width()),
      static_cast<std::uint32_t>(dtype),
      static_cast<std::uint32_t>(std::lround(clip.fps * 1000.0))};
  out.write(reinterpret_cast<const char*>(header.data()), sizeof header);
  const auto values = clip.data.values();
  if (dtype == VolumeDtype::f32) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(float)));
  } else {
    std::vector<std::uint8_t> bytes(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      bytes[i] = static_cast<std::uint8_t>(std::lround(values[i] * 255.0f));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  if (!out) throw IoError("write failed: " + path.string());
}

inline VideoClip read_volume(const fs::path& path) {
  auto in = detail::open_in(path);
  std::array<std::uint32_t, 8> h{};
  in.read(reinterpret_cast<char*>(h.data()), sizeof h);
  if (!in) throw DataError(path.string() + ": truncated volume header");
  if (h[0] != kVolumeMagic) throw DataError(path.string() + ": not a clip volume");
  if (h[1] != kVolumeVersion) throw VersionError(path.string() + ": unsupported volume version " + std::to_string(h[1]));
  Shape shape{h[2], h[3], h[4], h[5]};
  check_clip_shape(shape);
  VideoClip clip = make_clip(shape, 0.0f, h[7] / 1000.0, path.stem().string());
  auto values = clip.data.values();
  if (h[6] == static_cast<std::uint32_t>(VolumeDtype::f32)) {
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(float)));
  } else if (h[6] == static_cast<std::uint32_t>(VolumeDtype::u8)) {
    std::vector<std::uint8_t> bytes(values.size());
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    for (std::size_t i = 0; i < bytes.size(); ++i) values[i] = static_cast<float>(bytes[i]) / 255.0f;
  } else {
    throw DataError(path.string() + ": unknown dtype code " + std::to_string(h[6]));
  }
  if (!in) throw DataError(path.string() + ": truncated volume data");
  validate_clip(clip);
  return clip;
}

// ---- frame directories --------------------------------------------------------

inline std::string frame_name(std::int64_t t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%05lld.png", static_cast<long long>(t));
  return buf;
}

/// Writes one 8-bit PNG per frame; planes are C x H x W with C in {1, 3}.
inline void write_png(const fs::path& path, const float* planes, int channels, std::int64_t h,
                      std::int64_t w) {
  std::vector<std::uint8_t> px(static_cast<std::size_t>(h * w * channels));
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c) {
        const float v = std::clamp(planes[(c * h + y) * w + x], 0.0f, 1.0f);
        px[static_cast<std::size_t>((y * w + x) * channels + c)] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
      }
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, px.data(), 0, nullptr)) {
    throw IoError("cannot write " + path.string() + ": " + img.message);
  }
}

struct PngFrame {
  int channels = 0;
  std::int64_t h = 0, w = 0;
  std::vector<float> planes;  // C x H x W
};

inline PngFrame read_png(const fs::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str())) {
    throw DataError("cannot read " + path.string() + ": " + img.message);
  }
  const bool colour = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
  img.format = colour ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  PngFrame f;
  f.channels = colour ? 3 : 1;
  f.h = img.height;
  f.w = img.width;
  std::vector<std::uint8_t> px(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, px.data(), 0, nullptr)) {
    throw DataError("cannot decode " + path.string() + ": " + img.message);
  }
  f.planes.resize(static_cast<std::size_t>(f.channels * f.h * f.w));
  for (std::int64_t y = 0; y < f.h; ++y)
    for (std::int64_t x = 0; x < f.w; ++x)
      for (int c = 0; c < f.channels; ++c) {
        f.planes[static_cast<std::size_t>((c * f.h + y) * f.w + x)] =
            static_cast<float>(px[static_cast<std::size_t>((y * f.w + x) * f.channels + c)]) / 255.0f;
      }
  return f;
}

/// Directory of frame_00000.png, frame_00001.png, ... plus clip.json with fps.
inline void write_frames(const fs::path& dir, const VideoClip& clip) {
  validate_clip(clip);
  fs::create_directories(dir);
  const std::int64_t C = clip.channels(), T = clip.frames(), H = clip.height(), W = clip.width();
  std::vector<float> planes(static_cast<std::size_t>(C * H * W));
  for (std::int64_t t = 0; t < T; ++t) {
    for (std::int64_t c = 0; c < C; ++c) {
      std::copy_n(&clip.data[static_cast<std::size_t>((c * T + t) * H * W)], H * W,
                  planes.data() + c * H * W);
    }
    write_png(dir / frame_name(t), planes.data(), static_cast<int>(C), H, W);
  }
  auto meta = detail::open_out(dir / "clip.json");
  meta << json{{"fps", clip.fps}, {"source_id", clip.source_id}, {"frames", T}}.dump() << '\n';
}

inline VideoClip read_frames(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.rfind("frame_", 0) == 0 && e.path().extension() == ".png") files.push_back(e.path());
  }
  if (files.empty()) throw DataError(dir.string() + ": no frames");
  std::sort(files.begin(), files.end());
  double fps = 30.0;
  std::string source = dir.filename().string();
  if (fs::exists(dir / "clip.json")) {
    auto in = detail::open_in(dir / "clip.json");
    const json meta = json::parse(in, nullptr, false);
    if (meta.is_discarded()) throw ParseError("malformed clip.json", 1, 0);
    fps = meta.value("fps", fps);
    source = meta.value("source_id", source);
  }
  const PngFrame first = read_png(files.front());
  const auto T = static_cast<std::int64_t>(files.size());
  VideoClip clip = make_clip({first.channels, T, first.h, first.w}, 0.0f, fps, source);
  for (std::int64_t t = 0; t < T; ++t) {
    const PngFrame f = t == 0 ? first : read_png(files[static_cast<std::size_t>(t)]);
    if (f.channels != first.channels || f.h != first.h || f.w != first.w) {
      throw DataError(files[static_cast<std::size_t>(t)].string() + ": frame size differs from the first frame");
    }
    for (int c = 0; c < f.channels; ++c) {
      std::copy_n(f.planes.data() + c * f.h * f.w, f.h * f.w,
                  &clip.data[static_cast<std::size_t>((c * T + t) * f.h * f.w)]);
    }
  }
  return clip;
}

/// Loads either storage form: a frame directory or a raw volume file.
inline VideoClip read_clip(const fs::path& path) {
  if (!fs::exists(path)) throw DataError(path.string() + ": no such clip");
  return fs::is_directory(path) ? read_frames(path) : read_volume(path);
}

/// Crops frames [start, end] and box `crop` out of a source video.
inline VideoClip crop_clip(const VideoClip& src, const ClipRecord& r) {
  if (r.start_frame < 0 || r.end_frame >= src.frames() || r.crop.x < 0 || r.crop.y < 0 ||
      r.crop.x + r.crop.w > src.width() || r.crop.y + r.crop.h > src.height() || r.crop.w < 1 ||
      r.crop.h < 1) {
    throw DataError("record " + r.video_id + " lies outside its source video");
  }
  const std::int64_t C = src.channels(), T = r.length();
  VideoClip out = make_clip({C, T, r.crop.h, r.crop.w}, 0.0f, src.fps, r.video_id);
  for (std::int64_t c = 0; c < C; ++c)
    for (std::int64_t t = 0; t < T; ++t)
      for (std::int64_t y = 0; y < r.crop.h; ++y)
        for (std::int64_t x = 0; x < r.crop.w; ++x) {
          out.at(c, t, y, x) = src.at(c, r.start_frame + t, r.crop.y + y, r.crop.x + x);
        }
  return out;
}

}  // namespace progsr::data
