// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef DYNFILT_PARAM_REGISTRY_H_
#define DYNFILT_PARAM_REGISTRY_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dynfilt/tensor.h"

namespace dynfilt {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Ordered set of learnable tensors addressed by stable dotted names.
// Entries share storage with the model that registered them.
class ParamRegistry {
 public:
  // Throws ContractError on a duplicate name.
  void Add(std::string name, Tensor tensor);
  void Append(const std::vector<NamedTensor>& entries);

  bool Contains(std::string_view name) const;
  const Tensor& Get(std::string_view name) const;
  const std::vector<NamedTensor>& entries() const { return entries_; }
  std::vector<Tensor> Tensors() const;
  std::size_t ParameterCount() const;
  std::size_t size() const { return entries_.size(); }

  void ZeroGrad();
  // FNV-1a over the float64 bit patterns, in registration order.
  std::uint64_t Checksum() const;

 private:
  std::vector<NamedTensor> entries_;
};

// Named-tensor checkpoint, little-endian:
//   u32 count, then per tensor
//   {u16 name_len, name bytes, u8 rank, u32 dims[rank], float32 data[]}.
std::string EncodeCheckpoint(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> DecodeCheckpoint(const std::string& bytes);

void SaveCheckpoint(const std::filesystem::path& path,
                    const ParamRegistry& params);
std::vector<NamedTensor> LoadCheckpoint(const std::filesystem::path& path);

// Copies checkpoint values into the registry's tensors. Every registry entry
// must be present with an identical shape; extra checkpoint entries are an
// error too.
void RestoreCheckpoint(const std::filesystem::path& path,
                       ParamRegistry& params);

}  // namespace dynfilt

#endif  // DYNFILT_PARAM_REGISTRY_H_
