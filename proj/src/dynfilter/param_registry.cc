// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

#include "dynfilt/param_registry.h"

#include <algorithm>
#include <bit>
#include <limits>

#include "dynfilt/byte_io.h"
#include "dynfilt/errors.h"

namespace dynfilt {

void ParamRegistry::Add(std::string name, Tensor tensor) {
  if (Contains(name)) {
    throw ContractError("duplicate parameter name '" + name + "'");
  }
  if (!tensor.defined()) {
    throw ContractError("parameter '" + name + "' is undefined");
  }
  entries_.push_back({std::move(name), std::move(tensor)});
}

void ParamRegistry::Append(const std::vector<NamedTensor>& entries) {
  for (const NamedTensor& e : entries) Add(e.name, e.tensor);
}

bool ParamRegistry::Contains(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const NamedTensor& e) { return e.name == name; });
}

const Tensor& ParamRegistry::Get(std::string_view name) const {
  for (const NamedTensor& e : entries_) {
    if (e.name == name) return e.tensor;
  }
  throw ContractError("no parameter named '" + std::string(name) + "'");
}

std::vector<Tensor> ParamRegistry::Tensors() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const NamedTensor& e : entries_) out.push_back(e.tensor);
  return out;
}

std::size_t ParamRegistry::ParameterCount() const {
  std::size_t n = 0;
  for (const NamedTensor& e : entries_) n += e.tensor.size();
  return n;
}

void ParamRegistry::ZeroGrad() {
  for (NamedTensor& e : entries_) e.tensor.ZeroGrad();
}

std::uint64_t ParamRegistry::Checksum() const {
  std::uint64_t h = 14695981039346656037ull;
  for (const NamedTensor& e : entries_) {
    for (double v : e.tensor.data()) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xff;
        h *= 1099511628211ull;
      }
    }
  }
  return h;
}

std::string EncodeCheckpoint(const std::vector<NamedTensor>& tensors) {
  std::string out;
  bytes::PutU32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const NamedTensor& e : tensors) {
    if (e.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw ContractError("parameter name too long: " + e.name);
    }
    bytes::PutU16(out, static_cast<std::uint16_t>(e.name.size()));
    out += e.name;
    bytes::PutU8(out, static_cast<std::uint8_t>(e.tensor.rank()));
    for (std::size_t d : e.tensor.shape()) {
      bytes::PutU32(out, static_cast<std::uint32_t>(d));
    }
    for (double v : e.tensor.data()) bytes::PutF32(out, static_cast<float>(v));
  }
  return out;
}

std::vector<NamedTensor> DecodeCheckpoint(const std::string& data) {
  bytes::Reader in(data, "checkpoint");
  const std::uint32_t count = in.U32();
  std::vector<NamedTensor> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor e;
    e.name = in.Bytes(in.U16());
    const std::uint8_t rank = in.U8();
    Shape shape(rank);
    for (auto& d : shape) d = in.U32();
    std::vector<double> values(NumElements(shape));
    for (double& v : values) v = in.F32();
    e.tensor = Tensor::FromData(std::move(shape), std::move(values), true);
    out.push_back(std::move(e));
  }
  if (in.remaining() != 0) {
    throw IngestionError("checkpoint: trailing bytes after last tensor");
  }
  return out;
}

void SaveCheckpoint(const std::filesystem::path& path,
                    const ParamRegistry& params) {
  bytes::WriteFileAtomic(path, EncodeCheckpoint(params.entries()));
}

std::vector<NamedTensor> LoadCheckpoint(const std::filesystem::path& path) {
  return DecodeCheckpoint(bytes::ReadFile(path));
}

void RestoreCheckpoint(const std::filesystem::path& path,
                       ParamRegistry& params) {
  const std::vector<NamedTensor> loaded = LoadCheckpoint(path);
  if (loaded.size() != params.size()) {
    throw IngestionError(path.string() + ": checkpoint holds " +
                         std::to_string(loaded.size()) +
                         " tensors, model expects " +
                         std::to_string(params.size()));
  }
  for (const NamedTensor& e : loaded) {
    if (!params.Contains(e.name)) {
      throw IngestionError(path.string() + ": unknown tensor '" + e.name + "'");
    }
    Tensor target = params.Get(e.name);
    if (target.shape() != e.tensor.shape()) {
      throw IngestionError(path.string() + ": tensor '" + e.name +
                           "' has shape " + ShapeToString(e.tensor.shape()) +
                           ", model expects " + ShapeToString(target.shape()));
    }
    auto dst = target.mutable_data();
    std::copy(e.tensor.data().begin(), e.tensor.data().end(), dst.begin());
  }
}

}  // namespace dynfilt
