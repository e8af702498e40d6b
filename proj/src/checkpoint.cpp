#include "nav3d/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace nav3d::ckpt {

namespace {

constexpr char kMagic[4] = {'D', 'R', 'Q', 'N'};

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const std::string& path) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint truncated: " + path);
  return v;
}

}  // namespace

void save_tensors(const std::string& path, const nn::Params<float>& tensors) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os.write(kMagic, 4);
  write_pod<std::uint32_t>(os, kFormatVersion);
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    write_pod<std::uint16_t>(os, static_cast<std::uint16_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<std::uint8_t>(os, 0);  // dtype f32
    write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(t.shape.size()));
    for (int d : t.shape) write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(d));
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.size() * sizeof(float)));
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

nn::Params<float> load_tensors(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("not a checkpoint file: " + path);
  }
  const auto version = read_pod<std::uint32_t>(is, path);
  if (version != kFormatVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version) +
                             " in " + path);
  }
  const auto count = read_pod<std::uint32_t>(is, path);
  nn::Params<float> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = read_pod<std::uint16_t>(is, path);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw std::runtime_error("checkpoint truncated: " + path);
    const auto dtype = read_pod<std::uint8_t>(is, path);
    if (dtype != 0) {
      throw std::runtime_error("unsupported dtype " + std::to_string(dtype) + " for tensor '" +
                               name + "' in " + path);
    }
    const auto rank = read_pod<std::uint8_t>(is, path);
    std::vector<int> shape(rank);
    for (auto& d : shape) d = static_cast<int>(read_pod<std::uint32_t>(is, path));
    nn::Tensor<float> t(shape);
    is.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(float)));
    if (!is) throw std::runtime_error("checkpoint truncated: " + path);
    if (!out.emplace(name, std::move(t)).second) {
      throw std::runtime_error("duplicate tensor '" + name + "' in " + path);
    }
  }
  return out;
}

void save_snapshot(const std::string& path, const Snapshot& snap) {
  nn::Params<float> all = snap.params;
  const auto arch_ints = snap.arch.encode();
  nn::Tensor<float> arch_t({static_cast<int>(arch_ints.size())});
  for (std::size_t i = 0; i < arch_ints.size(); ++i) arch_t[i] = static_cast<float>(arch_ints[i]);
  all.emplace("meta/arch", std::move(arch_t));

  nn::Tensor<float> counters({4});
  counters[0] = static_cast<float>(snap.env_steps);
  counters[1] = static_cast<float>(snap.train_steps);
  counters[2] = static_cast<float>(snap.level);
  counters[3] = static_cast<float>(snap.has_adam ? snap.adam.t : 0);
  all.emplace("meta/counters", std::move(counters));

  if (snap.has_adam) {
    for (const auto& [name, t] : snap.adam.m) all.emplace("adam/m/" + name, t);
    for (const auto& [name, t] : snap.adam.v) all.emplace("adam/v/" + name, t);
  }
  save_tensors(path, all);
}

Snapshot load_snapshot(const std::string& path) {
  nn::Params<float> all = load_tensors(path);
  Snapshot snap;

  auto arch_it = all.find("meta/arch");
  if (arch_it == all.end()) {
    throw std::runtime_error("checkpoint missing architecture metadata: " + path);
  }
  std::vector<int> arch_ints(arch_it->second.size());
  for (std::size_t i = 0; i < arch_ints.size(); ++i) {
    arch_ints[i] = static_cast<int>(arch_it->second[i]);
  }
  snap.arch = nn::ArchConfig::decode(arch_ints);
  all.erase(arch_it);

  if (auto it = all.find("meta/counters"); it != all.end()) {
    snap.env_steps = static_cast<std::int64_t>(it->second[0]);
    snap.train_steps = static_cast<std::int64_t>(it->second[1]);
    snap.level = static_cast<int>(it->second[2]);
    snap.adam.t = static_cast<std::int64_t>(it->second[3]);
    all.erase(it);
  }

  for (auto it = all.begin(); it != all.end();) {
    if (it->first.rfind("adam/m/", 0) == 0) {
      snap.adam.m.emplace(it->first.substr(7), std::move(it->second));
      it = all.erase(it);
    } else if (it->first.rfind("adam/v/", 0) == 0) {
      snap.adam.v.emplace(it->first.substr(7), std::move(it->second));
      it = all.erase(it);
    } else {
      ++it;
    }
  }
  snap.has_adam = !snap.adam.m.empty();
  snap.params = std::move(all);
  return snap;
}

void check_shapes(const nn::Params<float>& loaded, const nn::Params<float>& expected) {
  std::ostringstream diff;
  for (const auto& [name, t] : expected) {
    auto it = loaded.find(name);
    if (it == loaded.end()) {
      diff << "  missing tensor '" << name << "'\n";
    } else if (it->second.shape != t.shape) {
      auto fmt = [](const std::vector<int>& s) {
        std::string r = "[";
        for (std::size_t i = 0; i < s.size(); ++i) {
          if (i != 0) r += ",";
          r += std::to_string(s[i]);
        }
        return r + "]";
      };
      diff << "  tensor '" << name << "': expected " << fmt(t.shape) << ", found "
           << fmt(it->second.shape) << "\n";
    }
  }
  for (const auto& [name, t] : loaded) {
    if (expected.find(name) == expected.end()) diff << "  unexpected tensor '" << name << "'\n";
  }
  const std::string d = diff.str();
  if (!d.empty()) {
    throw std::runtime_error("checkpoint does not match the configured architecture:\n" + d);
  }
}

}  // namespace nav3d::ckpt
