#pragma once

#include <cstdint>
#include <string>

#include "nav3d/qnet.hpp"
#include "nav3d/tensor.hpp"

namespace nav3d::ckpt {

inline constexpr std::uint32_t kFormatVersion = 1;

// Flat named-tensor container, little-endian:
//   magic "DRQN", version u32, tensor count u32, then per tensor:
//   name length u16, name bytes, dtype u8 (0 = f32), rank u8, dims u32 each,
//   raw data.
void save_tensors(const std::string& path, const nn::Params<float>& tensors);
nn::Params<float> load_tensors(const std::string& path);

// A full agent snapshot: architecture metadata, network weights, optional
// Adam moments ("adam/m/...", "adam/v/..."), and progress counters.
struct Snapshot {
  nn::ArchConfig arch;
  nn::Params<float> params;
  nn::AdamState<float> adam;
  bool has_adam = false;
  std::int64_t env_steps = 0;
  std::int64_t train_steps = 0;
  int level = 0;
};

void save_snapshot(const std::string& path, const Snapshot& snap);
Snapshot load_snapshot(const std::string& path);

// Throws with a shape diff when `loaded` does not line up with `expected`.
void check_shapes(const nn::Params<float>& loaded, const nn::Params<float>& expected);

}  // namespace nav3d::ckpt
