#ifndef SEQCAST_CRC32_HPP
#define SEQCAST_CRC32_HPP

#include <cstddef>
#include <cstdint>

namespace seqcast {

/// CRC-32 (IEEE 802.3, polynomial 0xEDB88320). Feed data incrementally by
/// passing the previous return value as `crc`; start from 0.
std::uint32_t crc32(std::uint32_t crc, const void* data, std::size_t len);

} // namespace seqcast

#endif // SEQCAST_CRC32_HPP
