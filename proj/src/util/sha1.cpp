#include "koopmpc/util/sha1.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace koopmpc::util {
namespace {

struct Sha1State {
  std::array<uint32_t, 5> h = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u, 0xC3D2E1F0u};
  uint64_t total_bytes = 0;
  std::array<unsigned char, 64> block{};
  size_t block_fill = 0;

  void process_block(const unsigned char* p) {
    uint32_t w[80];
    for (int t = 0; t < 16; ++t) {
      w[t] = (uint32_t(p[4 * t]) << 24) | (uint32_t(p[4 * t + 1]) << 16) |
             (uint32_t(p[4 * t + 2]) << 8) | uint32_t(p[4 * t + 3]);
    }
    for (int t = 16; t < 80; ++t) {
      w[t] = std::rotl(w[t - 3] ^ w[t - 8] ^ w[t - 14] ^ w[t - 16], 1);
    }
    uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
    for (int t = 0; t < 80; ++t) {
      uint32_t f = 0;
      uint32_t k = 0;
      if (t < 20) {
        f = (b & c) | ((~b) & d);
        k = 0x5A827999u;
      } else if (t < 40) {
        f = b ^ c ^ d;
        k = 0x6ED9EBA1u;
      } else if (t < 60) {
        f = (b & c) | (b & d) | (c & d);
        k = 0x8F1BBCDCu;
      } else {
        f = b ^ c ^ d;
        k = 0xCA62C1D6u;
      }
      const uint32_t tmp = std::rotl(a, 5) + f + e + k + w[t];
      e = d;
      d = c;
      c = std::rotl(b, 30);
      b = a;
      a = tmp;
    }
    h[0] += a;
    h[1] += b;
    h[2] += c;
    h[3] += d;
    h[4] += e;
  }

  void update(const unsigned char* data, size_t len) {
    total_bytes += len;
    while (len > 0) {
      const size_t take = std::min(len, block.size() - block_fill);
      std::memcpy(block.data() + block_fill, data, take);
      block_fill += take;
      data += take;
      len -= take;
      if (block_fill == block.size()) {
        process_block(block.data());
        block_fill = 0;
      }
    }
  }

  std::string finish() {
    const uint64_t bit_length = total_bytes * 8;
    const unsigned char one = 0x80;
    update(&one, 1);
    const unsigned char zero = 0x00;
    while (block_fill != 56) {
      update(&zero, 1);
    }
    unsigned char length_bytes[8];
    for (int i = 0; i < 8; ++i) {
      length_bytes[i] = static_cast<unsigned char>(bit_length >> (56 - 8 * i));
    }
    update(length_bytes, 8);

    static const char* hex = "0123456789abcdef";
    std::string out(40, '0');
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 4; ++j) {
        const unsigned char byte = static_cast<unsigned char>(h[i] >> (24 - 8 * j));
        out[8 * i + 2 * j] = hex[byte >> 4];
        out[8 * i + 2 * j + 1] = hex[byte & 0x0F];
      }
    }
    return out;
  }
};

}  // namespace

std::string sha1_hex(std::string_view bytes) {
  Sha1State state;
  state.update(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size());
  return state.finish();
}

std::string git_blob_hash(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw std::runtime_error("git_blob_hash: cannot open " + file.string());
  }
  const auto size = std::filesystem::file_size(file);
  Sha1State state;
  std::string header = "blob ";
  header += std::to_string(size);
  header.push_back('\0');
  state.update(reinterpret_cast<const unsigned char*>(header.data()), header.size());

  std::vector<char> buffer(1 << 16);
  while (in) {
    in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    const std::streamsize got = in.gcount();
    if (got > 0) {
      state.update(reinterpret_cast<const unsigned char*>(buffer.data()),
                   static_cast<size_t>(got));
    }
  }
  return state.finish();
}

}  // namespace koopmpc::util
