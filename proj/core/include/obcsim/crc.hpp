#pragma once

#include <cstdint>
#include <span>

namespace obcsim {

/// CRC-32 (IEEE 802.3, reflected, init and xorout 0xFFFFFFFF).
std::uint32_t crc32(std::span<const std::uint8_t> bytes);

}  // namespace obcsim
