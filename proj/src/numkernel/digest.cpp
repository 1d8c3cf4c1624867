#include "iosp/numkernel/digest.hpp"

#include <openssl/sha.h>

#include <cstdint>
#include <cstring>
#include <vector>

namespace iosp::num {

std::string sha256_hex(std::span<const unsigned char> bytes) {
  unsigned char md[SHA256_DIGEST_LENGTH];
  SHA256(bytes.data(), bytes.size(), md);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * SHA256_DIGEST_LENGTH);
  for (unsigned char b : md) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xf]);
  }
  return out;
}

std::string sha256_hex(const Tensor& tensor) {
  std::vector<unsigned char> bytes;
  for (std::size_t d : tensor.shape()) {
    const auto v = static_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  const auto* raw = reinterpret_cast<const unsigned char*>(tensor.values().data());
  bytes.insert(bytes.end(), raw, raw + tensor.size() * sizeof(double));
  return sha256_hex(bytes);
}

}  // namespace iosp::num
