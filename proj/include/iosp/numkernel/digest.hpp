#pragma once

#include <span>
#include <string>

#include "iosp/numkernel/tensor.hpp"

namespace iosp::num {

// Hex SHA-256 of the raw bytes (shape included for tensors).
std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_hex(const Tensor& tensor);

}  // namespace iosp::num
