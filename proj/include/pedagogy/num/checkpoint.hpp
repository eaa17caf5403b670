#pragma once

// ckpt-v1: a JSON manifest naming every tensor (shape, byte offset) plus a
// companion flat file of little-endian float64 values. Optimizer moments are
// stored as extra entries so a loaded store can resume training.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pedagogy/num/param_store.hpp"

namespace pedagogy::num {

inline constexpr const char* kCheckpointFormat = "ckpt-v1";

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  ParamStore params;
  nlohmann::json meta;  // architecture hyperparameters and anything else the writer attached
};

namespace detail {

inline void write_f64_le(std::ostream& os, const std::vector<double>& values) {
  std::vector<unsigned char> buf(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) buf[i * 8 + static_cast<std::size_t>(b)] = static_cast<unsigned char>(bits >> (8 * b));
  }
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

inline std::vector<double> read_f64_le(const std::vector<unsigned char>& bytes, std::size_t offset, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= std::uint64_t{bytes[offset + i * 8 + static_cast<std::size_t>(b)]} << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

}  // namespace detail

/// Writes `<manifest_path>` and `<manifest_path minus .json>.bin`.
inline void save_checkpoint(const std::filesystem::path& manifest_path, const ParamStore& params,
                            const nlohmann::json& meta = nlohmann::json::object()) {
  auto data_path = manifest_path;
  data_path.replace_extension(".bin");
  if (manifest_path.has_parent_path()) std::filesystem::create_directories(manifest_path.parent_path());

  std::ofstream bin(data_path, std::ios::binary | std::ios::trunc);
  if (!bin) throw CheckpointError("cannot write " + data_path.string());

  nlohmann::json entries = nlohmann::json::array();
  std::size_t offset = 0;
  auto emit = [&](const std::string& name, const char* kind, const Tensor& t) {
    entries.push_back({{"name", name}, {"kind", kind}, {"shape", t.shape()}, {"offset", offset}});
    detail::write_f64_le(bin, t.data());
    offset += t.size() * 8;
  };
  for (const auto& [name, e] : params.entries()) {
    emit(name, "param", e.value);
    emit(name, "adam_m", e.m);
    emit(name, "adam_v", e.v);
  }
  if (!bin) throw CheckpointError("failed writing " + data_path.string());

  nlohmann::json manifest = {{"format", kCheckpointFormat},
                             {"data_file", data_path.filename().string()},
                             {"byte_length", offset},
                             {"step", params.step()},
                             {"entries", entries},
                             {"meta", meta}};
  std::ofstream js(manifest_path, std::ios::trunc);
  if (!js) throw CheckpointError("cannot write " + manifest_path.string());
  js << manifest.dump(2) << '\n';
}

inline Checkpoint load_checkpoint(const std::filesystem::path& manifest_path) {
  std::ifstream js(manifest_path);
  if (!js) throw CheckpointError("cannot open checkpoint manifest " + manifest_path.string());
  nlohmann::json manifest;
  try {
    js >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(manifest_path.string() + ": " + e.what());
  }
  if (manifest.value("format", "") != kCheckpointFormat)
    throw CheckpointError(manifest_path.string() + ": unsupported format '" + manifest.value("format", "") + "'");

  const auto data_path = manifest_path.parent_path() / manifest.at("data_file").get<std::string>();
  std::ifstream bin(data_path, std::ios::binary);
  if (!bin) throw CheckpointError("cannot open checkpoint data " + data_path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
  if (bytes.size() != manifest.at("byte_length").get<std::size_t>())
    throw CheckpointError(data_path.string() + ": expected " + manifest.at("byte_length").dump() + " bytes, found " +
                          std::to_string(bytes.size()));

  Checkpoint ck;
  ck.meta = manifest.value("meta", nlohmann::json::object());
  std::map<std::string, ParamStore::Entry> staged;
  for (const auto& e : manifest.at("entries")) {
    const auto name = e.at("name").get<std::string>();
    const auto kind = e.at("kind").get<std::string>();
    const auto shape = e.at("shape").get<Shape>();
    const auto offset = e.at("offset").get<std::size_t>();
    const auto count = element_count(shape);
    if (offset + count * 8 > bytes.size())
      throw CheckpointError(manifest_path.string() + ": entry '" + name + "' runs past end of data");
    Tensor t(shape, detail::read_f64_le(bytes, offset, count));
    auto& slot = staged[name];
    if (kind == "param") slot.value = std::move(t);
    else if (kind == "adam_m") slot.m = std::move(t);
    else if (kind == "adam_v") slot.v = std::move(t);
    else throw CheckpointError(manifest_path.string() + ": unknown entry kind '" + kind + "'");
  }
  for (auto& [name, e] : staged) {
    if (e.m.shape() != e.value.shape() || e.v.shape() != e.value.shape())
      throw CheckpointError(manifest_path.string() + ": optimizer moments of '" + name + "' do not match its shape");
    ck.params.add(name, e.value);
    auto& slot = ck.params.entry(name);
    slot.m = std::move(e.m);
    slot.v = std::move(e.v);
  }
  ck.params.set_step(manifest.value("step", std::uint64_t{0}));
  return ck;
}

}  // namespace pedagogy::num
