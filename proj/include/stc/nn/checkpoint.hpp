// stc/nn/checkpoint.hpp

// Copyright 2026  The STC Workbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.
//
// Checkpoint container, all integers little-endian:
//   "STCK"  u32 version (=1)
//   u32 n   n bytes of config echo (JSON text)
//   u32 count
//   count x { u32 name_len, name bytes, u32 ndim, ndim x u32 dims,
//             prod(dims) x float32 row-major }

#ifndef STC_NN_CHECKPOINT_HPP_
#define STC_NN_CHECKPOINT_HPP_

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "stc/nn/tensor.hpp"

namespace stc::nn {

struct TensorRecord {
  std::vector<std::uint32_t> shape;
  std::vector<float> data;
};

struct Checkpoint {
  std::string config_json;
  std::map<std::string, TensorRecord> tensors;
};

namespace internal {
inline void Put32(std::string &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}
class Reader {
 public:
  Reader(const std::string &b, std::string label) : bytes_(b), label_(std::move(label)) {}
  std::uint32_t U32() {
    Need(4);
    const auto *p = reinterpret_cast<const unsigned char *>(bytes_.data() + pos_);
    pos_ += 4;
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
  }
  std::string Str(std::size_t n) {
    Need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  float F32() {
    const std::uint32_t u = U32();
    float f;
    std::memcpy(&f, &u, 4);
    return f;
  }

 private:
  void Need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) Fail(ErrorKind::kLoad, label_ + ": truncated checkpoint");
  }
  const std::string &bytes_;
  std::string label_;
  std::size_t pos_ = 0;
};
}  // namespace internal

inline std::string EncodeCheckpoint(const Checkpoint &ck) {
  std::string out = "STCK";
  internal::Put32(out, 1);
  internal::Put32(out, std::uint32_t(ck.config_json.size()));
  out += ck.config_json;
  internal::Put32(out, std::uint32_t(ck.tensors.size()));
  for (const auto &[name, rec] : ck.tensors) {
    internal::Put32(out, std::uint32_t(name.size()));
    out += name;
    internal::Put32(out, std::uint32_t(rec.shape.size()));
    for (auto d : rec.shape) internal::Put32(out, d);
    for (float f : rec.data) {
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      internal::Put32(out, u);
    }
  }
  return out;
}

inline Checkpoint DecodeCheckpoint(const std::string &bytes, const std::string &label) {
  if (bytes.size() < 8 || bytes.compare(0, 4, "STCK") != 0)
    Fail(ErrorKind::kLoad, label + ": not a checkpoint");
  internal::Reader r(bytes, label);
  r.Str(4);
  if (r.U32() != 1) Fail(ErrorKind::kLoad, label + ": unsupported checkpoint version");
  Checkpoint ck;
  ck.config_json = r.Str(r.U32());
  const std::uint32_t count = r.U32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.Str(r.U32());
    TensorRecord rec;
    rec.shape.resize(r.U32());
    std::size_t total = 1;
    for (auto &d : rec.shape) total *= (d = r.U32());
    rec.data.resize(total);
    for (auto &f : rec.data) f = r.F32();
    ck.tensors.emplace(name, std::move(rec));
  }
  return ck;
}

inline void WriteCheckpoint(const std::string &path, const Checkpoint &ck) {
  std::ofstream os(path, std::ios::binary);
  if (!os) Fail(ErrorKind::kIo, "cannot write " + path);
  const std::string bytes = EncodeCheckpoint(ck);
  os.write(bytes.data(), std::streamsize(bytes.size()));
}

inline Checkpoint ReadCheckpoint(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) Fail(ErrorKind::kLoad, "missing checkpoint " + path);
  std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return DecodeCheckpoint(bytes, path);
}

template <typename S>
void StoreParams(const ParamList<S> &params, Checkpoint &ck) {
  for (const auto *p : params) {
    TensorRecord rec;
    rec.shape = {std::uint32_t(p->value.rows()), std::uint32_t(p->value.cols())};
    rec.data.resize(std::size_t(p->value.size()));
    for (Eigen::Index i = 0; i < p->value.size(); ++i) rec.data[std::size_t(i)] = float(p->value.data()[i]);
    ck.tensors[p->name] = std::move(rec);
  }
}

template <typename S>
void LoadParams(const Checkpoint &ck, const ParamList<S> &params, const std::string &label) {
  for (auto *p : params) {
    auto it = ck.tensors.find(p->name);
    if (it == ck.tensors.end()) Fail(ErrorKind::kLoad, label + ": missing tensor " + p->name);
    const auto &rec = it->second;
    if (rec.shape.size() != 2 || rec.shape[0] != p->value.rows() || rec.shape[1] != p->value.cols())
      Fail(ErrorKind::kLoad, label + ": shape mismatch for " + p->name);
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = S(rec.data[std::size_t(i)]);
  }
}

}  // namespace stc::nn

#endif  // STC_NN_CHECKPOINT_HPP_
