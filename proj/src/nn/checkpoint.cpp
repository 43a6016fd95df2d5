#include "curioflock/nn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace curioflock::nn {

namespace {

void write_f32_le(std::ostream& out, float value) {
  std::uint32_t bits = std::bit_cast<std::uint32_t>(value);
  unsigned char bytes[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                            static_cast<unsigned char>(bits >> 16), static_cast<unsigned char>(bits >> 24)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

float read_f32_le(const unsigned char* bytes) {
  const std::uint32_t bits = static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
                             (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
  return std::bit_cast<float>(bits);
}

[[noreturn]] void corrupt(const std::filesystem::path& path, const std::string& why) {
  throw std::runtime_error("checkpoint " + path.string() + ": " + why);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const std::vector<const ParameterSet*>& sets,
                     const std::vector<std::pair<std::string, std::string>>& metadata) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << kCheckpointMagic << '\n';
  for (const auto& [key, value] : metadata) out << "meta " << key << ' ' << value << '\n';
  std::size_t count = 0;
  for (const auto* set : sets) count += set->count();
  out << "tensors " << count << '\n';
  for (const auto* set : sets) {
    for (const auto& p : set->parameters()) {
      out << p.name << " f32 row-major";
      for (int d : p.value.shape()) out << ' ' << d;
      out << '\n';
    }
  }
  out << "data\n";
  for (const auto* set : sets) {
    for (const auto& p : set->parameters()) {
      for (Real v : p.value.data()) write_f32_le(out, static_cast<float>(v));
    }
  }
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path,
                                         std::vector<std::pair<std::string, std::string>>* metadata) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing checkpoint " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic) corrupt(path, "bad header");
  std::vector<NamedTensor> tensors;
  std::size_t expected = 0;
  bool have_count = false;
  while (std::getline(in, line)) {
    if (line == "data") break;
    std::istringstream fields(line);
    std::string head;
    fields >> head;
    if (head == "meta") {
      std::string key, value;
      fields >> key;
      std::getline(fields >> std::ws, value);
      if (metadata) metadata->emplace_back(key, value);
    } else if (head == "tensors") {
      fields >> expected;
      have_count = true;
    } else {
      std::string dtype, layout;
      fields >> dtype >> layout;
      if (dtype != "f32" || layout != "row-major") corrupt(path, "unsupported dtype/layout for " + head);
      Shape shape;
      int d;
      while (fields >> d) shape.push_back(d);
      tensors.push_back({head, Tensor(shape)});
    }
  }
  if (line != "data" || !have_count || tensors.size() != expected) corrupt(path, "malformed manifest");
  std::vector<unsigned char> buffer;
  for (auto& nt : tensors) {
    buffer.resize(nt.tensor.size() * 4);
    in.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(buffer.size()));
    if (static_cast<std::size_t>(in.gcount()) != buffer.size()) corrupt(path, "truncated data for " + nt.name);
    for (std::size_t i = 0; i < nt.tensor.size(); ++i) nt.tensor[i] = static_cast<Real>(read_f32_le(&buffer[i * 4]));
  }
  return tensors;
}

void restore_parameters(ParameterSet& params, const std::vector<NamedTensor>& tensors) {
  for (std::size_t i = 0; i < params.count(); ++i) {
    const std::string& name = params.at(i).name;
    const NamedTensor* found = nullptr;
    for (const auto& nt : tensors) {
      if (nt.name == name) {
        found = &nt;
        break;
      }
    }
    if (!found) throw std::runtime_error("checkpoint lacks parameter " + name);
    if (found->tensor.shape() != params.value(i).shape()) {
      throw std::runtime_error("checkpoint shape mismatch for " + name + ": " + shape_string(found->tensor.shape()) +
                               " vs " + shape_string(params.value(i).shape()));
    }
    params.mutable_value(i) = found->tensor;
  }
}

}  // namespace curioflock::nn
