// Copyright 2026 The switchconv Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "switchconv/checkpoint.h"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "switchconv/config.h"
#include "switchconv/errors.h"

namespace switchconv {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[4] = {'S', 'W', 'C', 'K'};

template <typename T>
void put(std::vector<char>& buf, T value) {
  const char* p = reinterpret_cast<const char*>(&value);
  buf.insert(buf.end(), p, p + sizeof(T));
}

template <typename T>
T take(const std::vector<char>& buf, size_t& pos) {
  if (buf.size() - pos < sizeof(T)) throw IntegrityError("checkpoint is truncated");
  T value;
  std::memcpy(&value, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

void put_tensor(std::vector<char>& buf, const Matrix<float>& m) {
  const char* p = reinterpret_cast<const char*>(m.data());
  buf.insert(buf.end(), p, p + m.size() * sizeof(float));
}

nlohmann::json tensor_index(const ModelParameters<float>& p, const std::string& group) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : p.tensors()) {
    out.push_back({{"group", group},
                   {"name", t.name},
                   {"rows", t.value.rows()},
                   {"cols", t.value.cols()}});
  }
  return out;
}

uint32_t crc_of(const char* data, size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in bounded chunks.
  while (n > 0) {
    const uInt chunk = static_cast<uInt>(std::min<size_t>(n, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data), chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<uint32_t>(crc);
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  ck.params.check_shapes(ck.config);
  if (ck.vocab.size() != ck.config.vocab_size) {
    throw ShapeError("vocabulary size does not match the model config");
  }
  nlohmann::json header = {{"model_kind", ck.model_kind},
                           {"model", to_json(ck.config)},
                           {"vocab", ck.vocab.tokens()},
                           {"experiment", ck.experiment}};
  nlohmann::json tensors = tensor_index(ck.params, "params");
  if (ck.optimizer) {
    for (auto& t : tensor_index(ck.optimizer->first_moment, "m")) tensors.push_back(t);
    for (auto& t : tensor_index(ck.optimizer->second_moment, "v")) tensors.push_back(t);
    header["optimizer_step"] = ck.optimizer->step;
  }
  header["tensors"] = tensors;
  const std::string text = header.dump();

  std::vector<char> buf(kMagic, kMagic + 4);
  put<uint32_t>(buf, kCheckpointVersion);
  put<uint64_t>(buf, text.size());
  buf.insert(buf.end(), text.begin(), text.end());
  for (const auto& t : ck.params.tensors()) put_tensor(buf, t.value);
  if (ck.optimizer) {
    for (const auto& t : ck.optimizer->first_moment.tensors()) put_tensor(buf, t.value);
    for (const auto& t : ck.optimizer->second_moment.tensors()) put_tensor(buf, t.value);
  }
  put<uint32_t>(buf, crc_of(buf.data(), buf.size()));

  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint '" + path.string() + "'");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw Error("short write to '" + path.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const Vocabulary* expected_vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path.string() + "'");
  const std::vector<char> buf((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
  if (buf.size() < 4 + 4 + 8 + 4 || std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw IntegrityError("'" + path.string() + "' is not a checkpoint");
  }
  size_t pos = 4;
  const auto version = take<uint32_t>(buf, pos);
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint version " + std::to_string(version) +
                       " is not supported (expected " +
                       std::to_string(kCheckpointVersion) + ")");
  }
  uint32_t stored_crc;
  std::memcpy(&stored_crc, buf.data() + buf.size() - 4, 4);
  if (crc_of(buf.data(), buf.size() - 4) != stored_crc) {
    throw IntegrityError("checkpoint checksum mismatch in '" + path.string() + "'");
  }
  const auto header_len = take<uint64_t>(buf, pos);
  if (header_len > buf.size() - 4 - pos) throw IntegrityError("checkpoint is truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(buf.begin() + static_cast<std::ptrdiff_t>(pos),
                                   buf.begin() + static_cast<std::ptrdiff_t>(pos + header_len));
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("checkpoint header: ") + e.what());
  }
  pos += header_len;

  Checkpoint ck;
  ck.version = version;
  try {
    ck.model_kind = header.at("model_kind").get<std::string>();
    ck.config = model_config_from_json(header.at("model"));
    ck.vocab = Vocabulary::from_tokens(header.at("vocab").get<std::vector<std::string>>());
    ck.experiment = header.value("experiment", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("checkpoint header: ") + e.what());
  }
  if (ck.vocab.size() != ck.config.vocab_size) {
    throw ShapeError("checkpoint vocabulary has " + std::to_string(ck.vocab.size()) +
                     " tokens but the model expects " +
                     std::to_string(ck.config.vocab_size));
  }
  if (expected_vocab && expected_vocab->size() != ck.vocab.size()) {
    throw ShapeError("checkpoint vocabulary size " + std::to_string(ck.vocab.size()) +
                     " differs from the expected " +
                     std::to_string(expected_vocab->size()));
  }

  ModelParameters<float> m, v;
  bool has_optimizer = false;
  for (const auto& t : header.at("tensors")) {
    const auto rows = t.at("rows").get<int64_t>();
    const auto cols = t.at("cols").get<int64_t>();
    if (rows < 0 || cols < 0) throw IntegrityError("negative tensor shape");
    const size_t bytes = static_cast<size_t>(rows * cols) * sizeof(float);
    if (buf.size() - 4 - pos < bytes) throw IntegrityError("checkpoint is truncated");
    Matrix<float> value(rows, cols);
    std::memcpy(value.data(), buf.data() + pos, bytes);
    pos += bytes;
    const auto group = t.at("group").get<std::string>();
    auto name = t.at("name").get<std::string>();
    if (group == "params") {
      ck.params.add(std::move(name), std::move(value));
    } else if (group == "m") {
      m.add(std::move(name), std::move(value));
      has_optimizer = true;
    } else if (group == "v") {
      v.add(std::move(name), std::move(value));
    } else {
      throw IntegrityError("unknown tensor group '" + group + "'");
    }
  }
  if (pos != buf.size() - 4) throw IntegrityError("trailing bytes in checkpoint");
  ck.params.check_shapes(ck.config);
  if (has_optimizer) {
    m.check_shapes(ck.config);
    v.check_shapes(ck.config);
    ck.optimizer = OptimizerState<float>{std::move(m), std::move(v),
                                         header.value("optimizer_step", int64_t{0})};
  }
  return ck;
}

}  // namespace switchconv
