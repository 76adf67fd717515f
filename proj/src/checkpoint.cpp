// Copyright 2026 The hids Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hids/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "hids/error.hpp"

namespace hids {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'H', 'I', 'D', 'S', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw DataError("cannot write " + path.string());
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  template <class T>
  void pod(T v) { bytes(&v, sizeof v); }
  void text(std::string_view s) {
    pod<std::uint64_t>(s.size());
    bytes(s.data(), s.size());
  }
  void matrix(const std::string& name, const ag::Matrix& m) {
    text(name);
    pod<std::uint64_t>(static_cast<std::uint64_t>(m.rows()));
    pod<std::uint64_t>(static_cast<std::uint64_t>(m.cols()));
    bytes(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
  }
  void finish(const std::filesystem::path& path) {
    out_.flush();
    if (!out_) throw DataError("write failed for " + path.string());
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw DataError("cannot open " + path.string());
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw FormatError("checkpoint " + path_.string() + ": truncated file");
    }
  }
  template <class T>
  T pod() {
    T v{};
    bytes(&v, sizeof v);
    return v;
  }
  std::string text() {
    const auto n = pod<std::uint64_t>();
    if (n > (1u << 24)) throw FormatError("checkpoint " + path_.string() + ": implausible string length");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  ag::Matrix matrix(const std::string& expected_name, ag::Index rows, ag::Index cols) {
    const std::string name = text();
    const auto r = pod<std::uint64_t>();
    const auto c = pod<std::uint64_t>();
    if (name != expected_name || static_cast<ag::Index>(r) != rows ||
        static_cast<ag::Index>(c) != cols) {
      throw FormatError("checkpoint " + path_.string() + ": found tensor " + name + " [" +
                        std::to_string(r) + "x" + std::to_string(c) + "], config expects " +
                        expected_name + " [" + std::to_string(rows) + "x" +
                        std::to_string(cols) + "]");
    }
    ag::Matrix m(rows, cols);
    bytes(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
    return m;
  }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const HybridModel& model,
                     const AdamState* optimizer) {
  Writer w(path);
  w.bytes(kMagic, sizeof kMagic);
  w.pod<std::uint32_t>(kCheckpointVersion);
  w.text(model.config().to_text());
  const auto params = model.parameters();
  const auto& running = model.running_stats();
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(params.size() + 2 * running.size()));
  for (const ag::Tensor* t : params) w.matrix(t->name, t->value);
  for (std::size_t l = 0; l < running.size(); ++l) {
    w.matrix("gcn." + std::to_string(l) + ".running_mean", running[l].mean);
    w.matrix("gcn." + std::to_string(l) + ".running_var", running[l].var);
  }
  w.pod<std::uint8_t>(optimizer ? 1 : 0);
  if (optimizer) {
    if (optimizer->m.size() != params.size() || optimizer->v.size() != params.size()) {
      throw ShapeError("save_checkpoint: optimizer state does not match the model");
    }
    w.pod<std::uint64_t>(optimizer->step);
    for (std::size_t i = 0; i < params.size(); ++i) {
      w.matrix(params[i]->name + ".adam_m", optimizer->m[i]);
      w.matrix(params[i]->name + ".adam_v", optimizer->v[i]);
    }
  }
  w.finish(path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Reader r(path);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw FormatError("checkpoint " + path.string() + ": not a checkpoint (bad magic tag)");
  }
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint " + path.string() + ": format version " +
                      std::to_string(version) + ", this build reads version " +
                      std::to_string(kCheckpointVersion));
  }
  Checkpoint ck{HybridModel(ModelConfig::from_text(r.text())), std::nullopt};
  auto params = ck.model.parameters();
  auto& running = ck.model.running_stats();
  const auto count = r.pod<std::uint32_t>();
  if (count != params.size() + 2 * running.size()) {
    throw FormatError("checkpoint " + path.string() + ": " + std::to_string(count) +
                      " tensors, config implies " +
                      std::to_string(params.size() + 2 * running.size()));
  }
  for (ag::Tensor* t : params) t->value = r.matrix(t->name, t->value.rows(), t->value.cols());
  for (std::size_t l = 0; l < running.size(); ++l) {
    const auto width = running[l].mean.cols();
    running[l].mean = r.matrix("gcn." + std::to_string(l) + ".running_mean", 1, width);
    running[l].var = r.matrix("gcn." + std::to_string(l) + ".running_var", 1, width);
  }
  if (r.pod<std::uint8_t>() == 1) {
    AdamState s;
    s.step = r.pod<std::uint64_t>();
    for (const ag::Tensor* t : params) {
      s.m.push_back(r.matrix(t->name + ".adam_m", t->value.rows(), t->value.cols()));
      s.v.push_back(r.matrix(t->name + ".adam_v", t->value.rows(), t->value.cols()));
    }
    ck.optimizer = std::move(s);
  }
  if (!r.at_end()) throw FormatError("checkpoint " + path.string() + ": trailing bytes");
  return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected) {
  Checkpoint ck = load_checkpoint(path);
  const auto diff = config_differences(ck.model.config(), expected);
  if (!diff.empty()) {
    std::string msg = "checkpoint " + path.string() + ": config mismatch (stored vs requested):";
    for (const auto& d : diff) msg += " " + d + ";";
    throw ConfigError(msg);
  }
  return ck;
}

}  // namespace hids
