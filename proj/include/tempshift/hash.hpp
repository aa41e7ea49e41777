#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace tempshift {

/// Streaming 64-bit FNV-1a. Used for config and dataset fingerprints.
class ContentHash {
public:
    ContentHash& update(std::span<const std::byte> bytes);
    ContentHash& update(std::string_view text);
    ContentHash& update(std::span<const float> values);
    ContentHash& update(std::uint64_t value);

    std::uint64_t value() const noexcept { return state_; }
    std::string hex() const;

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string hash_hex(std::string_view text);

} // namespace tempshift
