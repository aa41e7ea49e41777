#include "tempshift/hash.hpp"

#include <cstdio>
#include <cstring>

namespace tempshift {

namespace {
constexpr std::uint64_t kPrime = 0x100000001b3ULL;
}

ContentHash& ContentHash::update(std::span<const std::byte> bytes) {
    for (std::byte b : bytes) {
        state_ ^= static_cast<std::uint64_t>(b);
        state_ *= kPrime;
    }
    return *this;
}

ContentHash& ContentHash::update(std::string_view text) {
    return update(std::as_bytes(std::span<const char>(text.data(), text.size())));
}

ContentHash& ContentHash::update(std::span<const float> values) {
    return update(std::as_bytes(values));
}

ContentHash& ContentHash::update(std::uint64_t value) {
    std::byte buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<std::byte>((value >> (8 * i)) & 0xff);
    return update(std::span<const std::byte>(buf, 8));
}

std::string ContentHash::hex() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(state_));
    return buf;
}

std::string hash_hex(std::string_view text) {
    return ContentHash{}.update(text).hex();
}

} // namespace tempshift
