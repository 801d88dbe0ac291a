#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "progsr/core/errors.hpp"
#include "progsr/core/tensor.hpp"
#include "progsr/nn/adam.hpp"
#include "progsr/nn/module.hpp"

namespace progsr::io {

// Layout: magic, u32 version, u64 header length, JSON header, then every
// tensor as little-endian float64 in header order.
inline constexpr char kCheckpointMagic[8] = {'P', 'S', 'R', 'C', 'K', 'P', 'T', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Named float64 tensors plus JSON metadata. Float parameters widen exactly,
/// so one container serves both precisions.
struct Checkpoint {
  std::string kind;
  nlohmann::json meta = nlohmann::json::object();
  nlohmann::json config = nlohmann::json::object();
  std::map<std::string, Tensor<double>> tensors;

  template <typename T>
  void put(const std::string& name, const Tensor<T>& t) {
    tensors[name] = t.template cast<double>();
  }

  bool has(const std::string& name) const { return tensors.count(name) > 0; }

  template <typename T>
  Tensor<T> get(const std::string& name, const Shape& expected) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw CheckpointError("checkpoint has no tensor '" + name + "'");
    if (it->second.shape() != expected) {
      throw CheckpointError("tensor '" + name + "' is " + shape_str(it->second.shape()) +
                            ", model expects " + shape_str(expected));
    }
    return it->second.template cast<T>();
  }
};

namespace detail {

template <typename U>
void write_pod(std::ostream& os, U v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename U>
U read_pod(std::istream& is, const std::string& path) {
  U v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw IoError("truncated checkpoint " + path);
  return v;
}

}  // namespace detail

/// Written to a sibling temp file and renamed, so a crash never leaves a torn file.
inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  static_assert(std::endian::native == std::endian::little, "checkpoint format is little-endian");
  nlohmann::json header{{"kind", ck.kind}, {"meta", ck.meta}, {"config", ck.config}};
  nlohmann::json table = nlohmann::json::array();
  for (const auto& [name, t] : ck.tensors) table.push_back({{"name", name}, {"shape", t.shape()}});
  header["tensors"] = table;
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + tmp.string());
    os.write(kCheckpointMagic, sizeof kCheckpointMagic);
    detail::write_pod(os, kCheckpointVersion);
    detail::write_pod(os, static_cast<std::uint64_t>(text.size()));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [name, t] : ck.tensors) {
      os.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    if (!os) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  char magic[sizeof kCheckpointMagic];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw IoError(path.string() + " is not a checkpoint");
  }
  const auto version = detail::read_pod<std::uint32_t>(is, path.string());
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint version " + std::to_string(version) + ", expected " +
                       std::to_string(kCheckpointVersion));
  }
  const auto len = detail::read_pod<std::uint64_t>(is, path.string());
  if (len > (std::uint64_t{1} << 32)) throw IoError("implausible checkpoint header length");
  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  if (!is) throw IoError("truncated checkpoint header in " + path.string());

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("corrupt checkpoint header in " + path.string() + ": " + e.what());
  }
  Checkpoint ck;
  ck.kind = header.value("kind", std::string{});
  ck.meta = header.value("meta", nlohmann::json::object());
  ck.config = header.value("config", nlohmann::json::object());
  for (const auto& entry : header.at("tensors")) {
    Tensor<double> t(entry.at("shape").get<Shape>());
    is.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!is) throw IoError("truncated tensor data in " + path.string());
    ck.tensors.emplace(entry.at("name").get<std::string>(), std::move(t));
  }
  return ck;
}

template <typename T, typename M>
void store_module(Checkpoint& ck, const std::string& prefix, M& module) {
  for (auto& [name, v] : nn::named_parameters<T>(module)) ck.put(prefix + name, v.value());
}

/// Every parameter of the module must be present with the same shape.
template <typename T, typename M>
void load_module(const Checkpoint& ck, const std::string& prefix, M& module) {
  for (auto& [name, v] : nn::named_parameters<T>(module)) {
    v.mutable_value() = ck.get<T>(prefix + name, v.shape());
  }
}

template <typename T>
void store_adam(Checkpoint& ck, const std::string& prefix, const nn::Adam<T>& opt) {
  nlohmann::json steps = nlohmann::json::object();
  for (const auto& [name, slot] : opt.slots()) {
    ck.put(prefix + name + ".m", slot.m);
    ck.put(prefix + name + ".v", slot.v);
    steps[name] = slot.steps;
  }
  ck.meta[prefix + "steps"] = steps;
}

/// Restores moments for parameters already tracked by `opt`.
template <typename T>
void load_adam(const Checkpoint& ck, const std::string& prefix, nn::Adam<T>& opt) {
  const auto& steps = ck.meta.at(prefix + "steps");
  for (auto& [name, slot] : opt.slots()) {
    if (!steps.contains(name)) throw CheckpointError("no optimizer state for '" + name + "'");
    slot.m = ck.get<T>(prefix + name + ".m", slot.param.shape());
    slot.v = ck.get<T>(prefix + name + ".v", slot.param.shape());
    slot.steps = steps.at(name).template get<std::int64_t>();
  }
}

}  // namespace progsr::io
