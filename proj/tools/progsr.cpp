// Command-line front end: dataset building, degradation, the three training
// phases, evaluation and inference. Reports go to stdout as JSON.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "progsr/data/degrade.hpp"
#include "progsr/data/io.hpp"
#include "progsr/data/synth.hpp"
#include "progsr/data/tubes.hpp"
#include "progsr/trainer/trainer.hpp"

extern char** environ;

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace progsr;
using Trainer = trainer::Trainer<float>;

namespace {

enum ExitCode { kOk = 0, kConfigFailure = 1, kDataFailure = 2, kCheckpointFailure = 3, kInternalFailure = 4 };

// ---- configuration layers: defaults < --config < PROGSR_* < --set -----------------

json parse_scalar(const std::string& s) {
  try {
    return json::parse(s);
  } catch (const json::exception&) {
    return json(s);
  }
}

void set_dotted(json& j, const std::string& key, const json& value) {
  json* node = &j;
  std::size_t start = 0;
  for (std::size_t dot; (dot = key.find('.', start)) != std::string::npos; start = dot + 1) {
    node = &(*node)[key.substr(start, dot - start)];
    if (!node->is_object()) *node = json::object();
  }
  (*node)[key.substr(start)] = value;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// PROGSR_SEED=3 sets "seed"; a double underscore nests, so PROGSR_DVSR__WIDTH=8 sets dvsr.width.
std::vector<std::pair<std::string, json>> env_overrides() {
  std::vector<std::pair<std::string, json>> out;
  for (char** e = environ; *e; ++e) {
    const std::string kv = *e;
    if (kv.rfind("PROGSR_", 0) != 0) continue;
    const auto eq = kv.find('=');
    std::string key = kv.substr(7, eq - 7);
    for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (std::size_t p; (p = key.find("__")) != std::string::npos;) key.replace(p, 2, ".");
    out.emplace_back(key, parse_scalar(kv.substr(eq + 1)));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

struct ConfigArgs {
  std::string file;
  std::vector<std::string> sets;
  json flags = json::object();  // dedicated flags, applied last
};

void add_config_options(CLI::App* cmd, ConfigArgs& a) {
  cmd->add_option("--config", a.file, "JSON training config");
  cmd->add_option("--set", a.sets, "Override a config field, e.g. --set dvsr.width=8 (repeatable)");
}

json layered(json base, const ConfigArgs& a) {
  if (!a.file.empty()) base.merge_patch(read_json_file(a.file));
  for (const auto& [k, v] : env_overrides()) set_dotted(base, k, v);
  for (const auto& s : a.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    set_dotted(base, s.substr(0, eq), parse_scalar(s.substr(eq + 1)));
  }
  base.merge_patch(a.flags);
  return base;
}

trainer::TrainConfig resolve(json base, const ConfigArgs& a) {
  auto cfg = layered(std::move(base), a).get<trainer::TrainConfig>();
  cfg.validate();
  return cfg;
}

// ---- data --------------------------------------------------------------------------

bool is_volume_path(const fs::path& p) { return p.extension() == ".vol"; }

void write_clip(const fs::path& p, const VideoClip& clip) {
  if (is_volume_path(p)) {
    data::write_volume(p, clip);
  } else {
    data::write_frames(p, clip);
  }
}

// HR clips are brought to the final stage shape; LR is the bicubic degradation.
trainer::Sample make_sample(VideoClip hr, const dvsr::DvsrConfig& d, LabelVector labels) {
  const Extent3 out = d.stage_shape(d.num_stages);
  if (hr.channels() != d.channels) throw DataError("clip channel count does not match the model");
  if (Extent3{hr.frames(), hr.height(), hr.width()} != out) hr.data = data::resample_video(hr.data, out);
  const int scale = 1 << d.num_stages;
  VideoClip lr = out[0] == d.input_frames
                     ? data::make_sr_pair(hr, scale).lr
                     : VideoClip{data::resample_video(hr.data, {d.input_frames, d.input_size, d.input_size})};
  return {std::move(lr), std::move(hr), std::move(labels)};
}

struct LoadedData {
  data::DatasetIndex index;
  std::vector<trainer::Sample> samples;
};

LoadedData load_data(const fs::path& index_path, const dvsr::DvsrConfig& d, const std::string& split) {
  LoadedData out;
  out.index = data::read_index(index_path);
  const fs::path root = index_path.parent_path();
  const auto k = static_cast<std::size_t>(out.index.header.num_classes);
  for (const auto& r : out.index.records) {
    if (split != "all" && r.split != split) continue;
    if (r.clip_path.empty()) throw DataError("record " + r.video_id + " has no stored clip");
    out.samples.push_back(make_sample(data::read_clip(root / r.clip_path), d, make_labels(k, r.labels)));
  }
  if (out.samples.empty()) throw DataError("no '" + split + "' clips in " + index_path.string());
  return out;
}

// ---- checkpoints -------------------------------------------------------------------

io::Checkpoint open_checkpoint(const fs::path& p) {
  try {
    return io::load_checkpoint(p);
  } catch (const IoError& e) {
    throw CheckpointError(e.what());
  }
}

std::unique_ptr<Trainer> restore(const fs::path& ckpt, const ConfigArgs& a, const std::string& data_path,
                                 const std::string& split, LoadedData* loaded = nullptr) {
  io::Checkpoint ck = open_checkpoint(ckpt);
  if (ck.kind != "train_state") throw CheckpointError(ckpt.string() + " is not a training checkpoint");
  ck.config = layered(ck.config, a);
  const auto cfg = ck.config.get<trainer::TrainConfig>();
  std::vector<trainer::Sample> samples;
  if (!data_path.empty()) {
    auto d = load_data(data_path, cfg.dvsr, split);
    samples = d.samples;
    if (loaded) *loaded = std::move(d);
  } else {
    // Inference only: the trainer needs some sample, never trained on.
    const Extent3 s = cfg.dvsr.stage_shape(cfg.dvsr.num_stages);
    VideoClip hr = make_clip({cfg.dvsr.channels, s[0], s[1], s[2]});
    samples.push_back(make_sample(hr, cfg.dvsr, {}));
  }
  try {
    return Trainer::from_checkpoint(ck, std::move(samples));
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("incompatible checkpoint: ") + e.what());
  }
}

// ---- plots -------------------------------------------------------------------------

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

using Series = std::vector<std::pair<double, double>>;

void svg_lines(const fs::path& path, const std::string& title, const std::vector<std::pair<std::string, Series>>& lines) {
  const double W = 640, H = 400, L = 60, R = 20, T = 30, B = 40;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& [name, s] : lines)
    for (auto [x, y] : s) {
      x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
  if (x0 > x1) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::ofstream os(path);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n"
     << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n"
     << "<text x=\"" << L - 5 << "\" y=\"" << py(y1) + 4 << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(y1) << "</text>\n"
     << "<text x=\"" << L - 5 << "\" y=\"" << py(y0) << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(y0) << "</text>\n"
     << "<text x=\"" << L << "\" y=\"" << H - B + 15 << "\" font-size=\"10\">" << fmt(x0) << "</text>\n"
     << "<text x=\"" << W - R << "\" y=\"" << H - B + 15 << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(x1) << "</text>\n";
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const char* c = colors[i % 5];
    os << "<polyline fill=\"none\" stroke=\"" << c << "\" points=\"";
    for (auto [x, y] : lines[i].second) os << px(x) << ',' << py(y) << ' ';
    os << "\"/>\n<text x=\"" << W - R - 5 << "\" y=\"" << T + 15 * (i + 1) << "\" text-anchor=\"end\" font-size=\"11\" fill=\""
       << c << "\">" << lines[i].first << "</text>\n";
  }
  os << "</svg>\n";
}

void svg_bars(const fs::path& path, const std::string& title, const std::vector<std::string>& names,
              const std::vector<double>& values) {
  const double W = std::max<double>(320, 40 + 24.0 * static_cast<double>(values.size())), H = 320, B = 90, T = 30;
  std::ofstream os(path);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double h = values[i] * (H - T - B), x = 30 + 24.0 * static_cast<double>(i);
    os << "<rect x=\"" << x << "\" y=\"" << H - B - h << "\" width=\"18\" height=\"" << h << "\" fill=\"#1f77b4\"/>\n"
       << "<text transform=\"translate(" << x + 12 << ',' << H - B + 6 << ") rotate(60)\" font-size=\"9\">"
       << (i < names.size() ? names[i] : std::to_string(i)) << "</text>\n";
  }
  os << "</svg>\n";
}

Series log_series(const std::vector<json>& log, int phase, const char* key) {
  Series s;
  for (const auto& line : log) {
    if (line.at("phase") == phase && line.contains(key) && line.at(key).is_number()) {
      s.emplace_back(line.at("iter").get<double>(), line.at(key).get<double>());
    }
  }
  return s;
}

// ---- training runs -----------------------------------------------------------------

struct RunArgs {
  ConfigArgs config;
  std::string data, out, checkpoint, split = "train";
  bool quiet = false;
};

void add_run_options(CLI::App* cmd, RunArgs& a) {
  add_config_options(cmd, a.config);
  cmd->add_option("--data", a.data, "Dataset index (JSON lines)")->required();
  cmd->add_option("--out", a.out, "Output directory")->required();
  cmd->add_option("--split", a.split, "Records to train on: train, test or all");
  cmd->add_flag("--quiet", a.quiet, "No progress on stderr");
}

// Appends every logged iteration to <out>/log.jsonl and echoes it to stderr.
void attach_log(Trainer& t, const fs::path& out, bool quiet) {
  auto file = std::make_shared<std::ofstream>(out / "log.jsonl", std::ios::app);
  t.set_log_sink([file, quiet](const json& line) {
    *file << line.dump() << '\n';
    file->flush();
    if (!quiet) std::cerr << line.dump() << '\n';
  });
}

json finish_run(Trainer& t, const fs::path& out, const std::string& name, int phase) {
  t.save_state(out / (name + ".ckpt"));
  const auto& log = t.state().log;
  std::vector<std::pair<std::string, Series>> lines;
  for (const char* k : {"total", "rec", "att", "act"}) {
    auto s = log_series(log, phase, k);
    bool nonzero = false;
    for (auto [x, y] : s) nonzero = nonzero || y != 0.0;
    if (nonzero) lines.emplace_back(k, std::move(s));
  }
  svg_lines(out / (name + "_loss.svg"), name + " loss", lines);
  json r = {{"checkpoint", (out / (name + ".ckpt")).string()},
            {"config_hash", trainer::config_hash(t.config())},
            {"iterations", t.state().global_iter}};
  for (auto it = log.rbegin(); it != log.rend(); ++it) {
    if (it->at("phase") == phase) {
      json last = *it;
      last.erase("wallclock");
      r["final"] = last;
      break;
    }
  }
  return r;
}

// Periodic and boundary checkpoints land under this command's --out.
ConfigArgs with_checkpoint_dir(ConfigArgs c, const fs::path& out) {
  c.flags["checkpoint_dir"] = (out / "checkpoints").string();
  return c;
}

json cmd_train_sr(const RunArgs& a, bool end_to_end) {
  auto cfg = trainer::TrainConfig{};
  json flags = a.config.flags;
  if (end_to_end) flags["progressive"] = false;
  ConfigArgs ca = a.config;
  ca.flags = flags;
  const fs::path out = a.out;
  fs::create_directories(out);
  std::unique_ptr<Trainer> t;
  if (!a.checkpoint.empty()) {
    t = restore(a.checkpoint, ca, a.data, a.split);
  } else {
    cfg = resolve(json(trainer::TrainConfig{}), with_checkpoint_dir(ca, out));
    t = std::make_unique<Trainer>(cfg, load_data(a.data, cfg.dvsr, a.split).samples);
  }
  attach_log(*t, out, a.quiet);
  t->train_phase1();
  json r = finish_run(*t, out, "sr", 1);
  r["train_l1"] = t->reconstruction_error();
  return r;
}

json cmd_train_joint(const RunArgs& a) {
  fs::create_directories(a.out);
  auto t = restore(a.checkpoint, with_checkpoint_dir(a.config, a.out), a.data, a.split);
  attach_log(*t, a.out, a.quiet);
  t->train_phase2();
  json r = finish_run(*t, a.out, "joint", 2);
  double mass = 0.0;
  for (const auto& s : t->data()) mass += losses::attention_mass(t->attention_map(s.lr));
  r["attention_mass"] = mass / static_cast<double>(t->data().size());
  return r;
}

json cmd_train_classifier(const RunArgs& a, bool baseline) {
  fs::create_directories(a.out);
  std::unique_ptr<Trainer> t;
  if (!a.checkpoint.empty()) {
    t = restore(a.checkpoint, with_checkpoint_dir(a.config, a.out), a.data, a.split);
  } else {
    if (!baseline) throw ConfigError("train-classifier needs --checkpoint unless --baseline is given");
    auto cfg = resolve(json(trainer::TrainConfig{}), with_checkpoint_dir(a.config, a.out));
    t = std::make_unique<Trainer>(cfg, load_data(a.data, cfg.dvsr, a.split).samples);
  }
  attach_log(*t, a.out, a.quiet);
  t->train_phase3(baseline);
  json r = finish_run(*t, a.out, "classifier", 3);
  r["baseline"] = baseline;
  return r;
}

// ---- evaluation and inference ------------------------------------------------------

struct EvalArgs {
  ConfigArgs config;
  std::string checkpoint, data, out, plot, split = "test";
  bool multi_label = false, single_label = false;
  std::optional<bool> baseline;
};

json cmd_evaluate(EvalArgs a) {
  if (a.multi_label && a.single_label) throw ConfigError("--multi-label and --single-label are exclusive");
  if (a.multi_label) a.config.flags["multi_label"] = true;
  if (a.single_label) a.config.flags["multi_label"] = false;
  LoadedData loaded;
  auto t = restore(a.checkpoint, a.config, a.data, a.split, &loaded);
  const bool baseline = a.baseline.value_or(t->state().baseline);
  const auto report = t->evaluate(t->data(), baseline);
  json j = report;
  j["baseline"] = baseline;
  j["split"] = a.split;
  if (!a.plot.empty()) svg_bars(a.plot, "per-class F1", loaded.index.header.class_names, report.per_class_f1);
  return j;
}

struct InferArgs {
  std::string checkpoint, in, out;
  int stage = 0;
};

json cmd_infer(const InferArgs& a) {
  auto t = restore(a.checkpoint, {}, "", "");
  auto& g = t->generator();
  const int stage = a.stage == 0 ? g.current_stage() : a.stage;
  if (stage > g.current_stage()) {
    throw StageError("checkpoint has grown to stage " + std::to_string(g.current_stage()) + ", asked for " +
                     std::to_string(stage));
  }
  VideoClip lr = data::read_clip(a.in);
  const auto& d = t->config().dvsr;
  if (lr.frames() != d.input_frames || lr.height() != d.input_size || lr.width() != d.input_size) {
    throw DataError("input clip is " + shape_str(lr.data.shape()) + ", model expects " +
                    std::to_string(d.input_frames) + "x" + std::to_string(d.input_size) + "x" +
                    std::to_string(d.input_size));
  }
  nn::NoGradGuard guard;
  nn::Var<float> x(lr.data.reshaped({1, lr.channels(), lr.frames(), lr.height(), lr.width()}));
  auto res = g.forward(x, stage, stage == g.current_stage() ? g.alpha() : 1.0);
  const Shape& s = res.video.shape();
  VideoClip sr{res.video.value().reshaped({s[1], s[2], s[3], s[4]}), lr.fps, lr.source_id};
  write_clip(a.out, sr);
  return {{"out", a.out}, {"stage", stage}, {"shape", sr.data.shape()}};
}

json cmd_export_attention(const InferArgs& a) {
  auto t = restore(a.checkpoint, {}, "", "");
  const VideoClip lr = data::read_clip(a.in);
  const AttentionMap m = t->attention_map(lr);
  VideoClip img{m.weights().reshaped({1, m.frames(), m.height(), m.width()}), lr.fps, lr.source_id};
  data::write_frames(a.out, img);
  return {{"out", a.out}, {"frames", m.frames()}, {"mass", losses::attention_mass(m)}};
}

// ---- dataset commands --------------------------------------------------------------

struct BuildArgs {
  std::string annotations, out, videos;
  data::BuildOptions opts;
};

json cmd_build_dataset(const BuildArgs& a) {
  const auto tubes = data::read_annotations(a.annotations);
  auto res = data::build_clip_records(tubes, a.opts);
  data::DatasetIndex index;
  index.header.num_classes = static_cast<int>(res.kept_classes.size());
  for (int c : res.kept_classes) index.header.class_names.push_back("class_" + std::to_string(c));
  json opts = {{"iou", a.opts.spatial_iou_min},        {"temporal", a.opts.temporal_overlap_min},
               {"max_hw", a.opts.chunk.max_hw},        {"min_frames", a.opts.chunk.min_frames},
               {"chunk_len", a.opts.chunk.chunk_len}, {"min_count", a.opts.min_count}};
  index.header.config_hash = hex64(hash_string(opts.dump()));
  const fs::path out = a.out;
  if (!a.videos.empty()) {
    // Cut every record out of its source video, stored next to the index.
    std::map<std::string, VideoClip> cache;
    std::size_t n = 0;
    for (auto& r : res.records) {
      auto it = cache.find(r.video_id);
      if (it == cache.end()) {
        cache.clear();
        fs::path src = fs::path(a.videos) / r.video_id;
        if (!fs::exists(src)) src += ".vol";
        it = cache.emplace(r.video_id, data::read_clip(src)).first;
      }
      std::ostringstream name;
      name << "clips/" << std::setw(6) << std::setfill('0') << n++ << ".vol";
      data::write_volume(out.parent_path() / name.str(), data::crop_clip(it->second, r));
      r.clip_path = name.str();
    }
  }
  index.records = res.records;
  data::write_index(out, index);
  std::int64_t train = 0;
  for (const auto& r : index.records) train += r.split == "train";
  return {{"index", a.out}, {"records", index.records.size()}, {"train_records", train},
          {"classes", res.kept_classes}, {"config_hash", index.header.config_hash}};
}

struct SynthArgs {
  std::string out;
  int count = 20, classes = data::kSynthClasses, max_actors = 2, frames = 16, size = 112;
  double test_fraction = 0.0, noise = 0.02;
  std::uint64_t seed = 0;
};

json cmd_make_synth(const SynthArgs& a) {
  if (a.count < 1) throw ConfigError("--count must be >= 1");
  const fs::path out = a.out;
  data::DatasetIndex index;
  index.header.num_classes = a.classes;
  const auto& names = data::synth_class_names();
  index.header.class_names.assign(names.begin(), names.begin() + a.classes);
  index.header.created_by = "progsr make-synth";
  data::SynthOptions o;
  o.noise = a.noise;
  const int test = static_cast<int>(std::lround(a.test_fraction * a.count));
  for (int i = 0; i < a.count; ++i) {
    auto [clip, labels] = data::random_synth_clip(derive_seed(a.seed, static_cast<std::uint64_t>(i)), a.classes,
                                                  a.max_actors, {a.frames, a.size, a.size}, o);
    std::ostringstream name;
    name << "clips/" << std::setw(6) << std::setfill('0') << i << ".vol";
    data::write_volume(out / name.str(), clip);
    data::ClipRecord r;
    r.video_id = "synth_" + std::to_string(i);
    r.end_frame = a.frames - 1;
    r.crop = {0, 0, a.size, a.size};
    for (std::size_t c = 0; c < labels.y.size(); ++c) {
      if (labels.y[c]) r.labels.push_back(static_cast<int>(c));
    }
    r.split = i >= a.count - test ? "test" : "train";
    r.clip_path = name.str();
    index.records.push_back(r);
  }
  index.header.config_hash = hex64(hash_string(json{{"seed", a.seed}, {"count", a.count}, {"classes", a.classes}}.dump()));
  data::write_index(out / "index.jsonl", index);
  return {{"index", (out / "index.jsonl").string()}, {"records", a.count}, {"test_records", test}};
}

struct DegradeArgs {
  std::string in, out;
  int scale = 8;
  bool down_up = false;
};

json cmd_degrade(const DegradeArgs& a) {
  const VideoClip hr = data::read_clip(a.in);
  VideoClip out = data::make_sr_pair(hr, a.scale).lr;
  if (a.down_up) out = data::bicubic_upscale(out, a.scale);
  write_clip(a.out, out);
  return {{"out", a.out}, {"shape", out.data.shape()}};
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kConfigFailure;
  if (dynamic_cast<const CheckpointError*>(&e) || dynamic_cast<const VersionError*>(&e) ||
      dynamic_cast<const StageError*>(&e) || dynamic_cast<const TransitionError*>(&e)) {
    return kCheckpointFailure;
  }
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const IoError*>(&e) || dynamic_cast<const ShapeError*>(&e) ||
      dynamic_cast<const RangeError*>(&e) || dynamic_cast<const DomainError*>(&e)) {
    return kDataFailure;
  }
  return kInternalFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Progressive video super-resolution for tiny action recognition"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "progsr 0.1");
  std::string report_out;
  app.add_option("--report", report_out, "Also write the JSON report to this file");
  std::function<json()> run;

  BuildArgs build;
  auto* b = app.add_subcommand("build-dataset", "Merge, split, chunk and prune annotation tubes into a clip index");
  b->add_option("--annotations", build.annotations, "Annotation tubes (JSON lines)")->required()->check(CLI::ExistingFile);
  b->add_option("--out", build.out, "Index file to write")->required();
  b->add_option("--videos", build.videos, "Directory of source videos; crops each record into clips/");
  b->add_option("--max-hw", build.opts.chunk.max_hw, "Drop crops whose height or width reaches this")->capture_default_str();
  b->add_option("--chunk-len", build.opts.chunk.chunk_len, "Maximum frames per clip")->capture_default_str();
  b->add_option("--min-frames", build.opts.chunk.min_frames, "Minimum frames per clip")->capture_default_str();
  b->add_option("--min-count", build.opts.min_count, "Minimum training clips per class")->capture_default_str();
  b->add_option("--iou", build.opts.spatial_iou_min, "Box IoU needed to merge two tubes")->capture_default_str();
  b->add_option("--temporal", build.opts.temporal_overlap_min, "Shared frames needed to merge two tubes")
      ->capture_default_str();
  b->callback([&] { run = [&] { return cmd_build_dataset(build); }; });

  SynthArgs synth;
  auto* ms = app.add_subcommand("make-synth", "Write a synthetic labelled clip set with an index");
  ms->add_option("--out", synth.out, "Output directory")->required();
  ms->add_option("--count", synth.count, "Number of clips")->capture_default_str();
  ms->add_option("--classes", synth.classes, "Number of motion classes (<= 26)")->capture_default_str();
  ms->add_option("--max-actors", synth.max_actors, "Actors per clip, one label each")->capture_default_str();
  ms->add_option("--frames", synth.frames, "Frames per clip")->capture_default_str();
  ms->add_option("--size", synth.size, "Frame height and width")->capture_default_str();
  ms->add_option("--test-fraction", synth.test_fraction, "Share of clips tagged test")->capture_default_str();
  ms->add_option("--noise", synth.noise, "Pixel noise standard deviation")->capture_default_str();
  ms->add_option("--seed", synth.seed, "Seed")->capture_default_str();
  ms->callback([&] { run = [&] { return cmd_make_synth(synth); }; });

  DegradeArgs deg;
  auto* dg = app.add_subcommand("degrade", "Bicubic downscale of a clip (volume file or frame directory)");
  dg->add_option("--in", deg.in, "Input clip")->required();
  dg->add_option("--out", deg.out, "Output clip; a .vol suffix writes a volume, anything else a frame directory")
      ->required();
  dg->add_option("--scale", deg.scale, "2, 4 or 8")->capture_default_str();
  dg->add_flag("--down-up", deg.down_up, "Upscale back to the input size (the bicubic baseline input)");
  dg->callback([&] { run = [&] { return cmd_degrade(deg); }; });

  RunArgs sr;
  std::uint64_t sr_seed = 0;
  std::int64_t sr_iters = 0;
  bool e2e = false;
  auto* tsr = app.add_subcommand("train-sr", "Phase 1: reconstruction-only super-resolution training");
  add_run_options(tsr, sr);
  auto* seed_opt = tsr->add_option("--seed", sr_seed, "Seed");
  auto* iters_opt = tsr->add_option("--iterations", sr_iters, "Iterations per stage");
  tsr->add_flag("--end-to-end", e2e, "Build every stage at once instead of growing");
  tsr->add_option("--resume", sr.checkpoint, "Continue from a training checkpoint");
  tsr->callback([&] {
    if (*seed_opt) sr.config.flags["seed"] = sr_seed;
    if (*iters_opt) sr.config.flags["iterations_per_stage"] = sr_iters;
    run = [&] { return cmd_train_sr(sr, e2e); };
  });

  RunArgs joint;
  auto* tj = app.add_subcommand("train-joint", "Phase 2: attention-guided joint training from a phase-1 checkpoint");
  add_run_options(tj, joint);
  tj->add_option("--checkpoint", joint.checkpoint, "Phase-1 checkpoint")->required();
  tj->callback([&] { run = [&] { return cmd_train_joint(joint); }; });

  RunArgs cls;
  bool cls_baseline = false;
  auto* tc = app.add_subcommand("train-classifier", "Phase 3: classifier on frozen generator outputs");
  add_run_options(tc, cls);
  tc->add_option("--checkpoint", cls.checkpoint, "Generator checkpoint (phase 1 or 2)");
  tc->add_flag("--baseline", cls_baseline, "Use bicubic resizing instead of the generator");
  tc->callback([&] { run = [&] { return cmd_train_classifier(cls, cls_baseline); }; });

  EvalArgs ev;
  auto* e = app.add_subcommand("evaluate", "F1/accuracy and PSNR of a trained classifier");
  add_config_options(e, ev.config);
  e->add_option("--checkpoint", ev.checkpoint, "Phase-3 checkpoint")->required();
  e->add_option("--data", ev.data, "Dataset index")->required();
  e->add_option("--split", ev.split, "Records to evaluate: train, test or all")->capture_default_str();
  e->add_flag("--multi-label", ev.multi_label, "Threshold every class independently");
  e->add_flag("--single-label", ev.single_label, "Predict the arg-max class");
  e->add_flag("--baseline,!--no-baseline", ev.baseline, "Force the bicubic front end on or off");
  e->add_option("--out", ev.out, "Write the report here as well as stdout");
  e->add_option("--plot", ev.plot, "Per-class F1 bar chart (SVG)");
  e->callback([&] {
    run = [&] {
      json r = cmd_evaluate(ev);
      if (!ev.out.empty()) std::ofstream(ev.out) << r.dump(2) << '\n';
      return r;
    };
  });

  InferArgs inf;
  auto* in = app.add_subcommand("infer", "Super-resolve one clip");
  in->add_option("--checkpoint", inf.checkpoint, "Generator checkpoint")->required();
  in->add_option("--in", inf.in, "Low-resolution clip")->required();
  in->add_option("--out", inf.out, "Frame directory, or a .vol file")->required();
  in->add_option("--stage", inf.stage, "Output stage; default the last grown one");
  in->callback([&] { run = [&] { return cmd_infer(inf); }; });

  InferArgs att;
  auto* ea = app.add_subcommand("export-attention", "Write per-frame attention maps as grayscale images");
  ea->add_option("--checkpoint", att.checkpoint, "Phase-2 or later checkpoint")->required();
  ea->add_option("--in", att.in, "Low-resolution clip")->required();
  ea->add_option("--out", att.out, "Frame directory")->required();
  ea->callback([&] { run = [&] { return cmd_export_attention(att); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kConfigFailure;
  }

  try {
    const json report = run();
    std::cout << report.dump(2) << '\n';
    if (!report_out.empty()) std::ofstream(report_out) << report.dump(2) << '\n';
    return kOk;
  } catch (const std::exception& ex) {
    std::cerr << "progsr: " << ex.what() << '\n';
    return exit_code_for(ex);
  }
}
