#include "asaprl/neural/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "asaprl/util/rng.hpp"

namespace asaprl::neural {

namespace {

constexpr char kMagic[8] = {'A', 'S', 'A', 'P', 'M', 'L', 'P', '1'};

void put_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& out, const std::vector<float>& v) {
  for (float f : v) put_u32(out, std::bit_cast<uint32_t>(f));
}

std::vector<float> get_f32(std::istream& in, size_t n) {
  std::vector<float> v(n);
  for (size_t i = 0; i < n; ++i) v[i] = std::bit_cast<float>(get_u32(in));
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(kMagic, sizeof(kMagic));
  put_u32(out, static_cast<uint32_t>(c.rows.size()));
  for (size_t l = 0; l < c.rows.size(); ++l) {
    put_u32(out, c.rows[l]);
    put_u32(out, c.cols[l]);
  }
  for (size_t l = 0; l < c.rows.size(); ++l) {
    put_f32(out, c.weights[l]);
    put_f32(out, c.biases[l]);
  }
  if (!out) throw std::runtime_error("short write on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  uint32_t n_layers = get_u32(in);
  if (n_layers == 0 || n_layers > 64) throw std::runtime_error("corrupt checkpoint header");
  Checkpoint c;
  for (uint32_t l = 0; l < n_layers; ++l) {
    c.rows.push_back(get_u32(in));
    c.cols.push_back(get_u32(in));
    if (c.rows.back() == 0 || c.cols.back() == 0 || c.rows.back() > (1u << 20))
      throw std::runtime_error("corrupt checkpoint shape");
  }
  for (uint32_t l = 0; l < n_layers; ++l) {
    c.weights.push_back(get_f32(in, static_cast<size_t>(c.rows[l]) * c.cols[l]));
    c.biases.push_back(get_f32(in, c.rows[l]));
  }
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  return c;
}

uint64_t file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file for hashing: " + path);
  uint64_t h = 0xcbf29ce484222325ull;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a(buf, static_cast<size_t>(in.gcount()), h);
    if (!in) break;
  }
  return h;
}

}  // namespace asaprl::neural
