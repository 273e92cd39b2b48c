#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace viroclave {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s) noexcept
{
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline Bytes to_bytes(std::string_view s) { return {s.begin(), s.end()}; }

inline std::string to_string(ByteView b) { return {b.begin(), b.end()}; }

std::string to_hex(ByteView bytes);

/// Accepts upper or lower case digits; nullopt on odd length or a bad digit.
std::optional<Bytes> from_hex(std::string_view hex);

/// First occurrence of `needle` in `haystack`, or nullopt. An empty needle never matches.
std::optional<std::size_t> find_bytes(ByteView haystack, ByteView needle);

inline bool contains_bytes(ByteView haystack, ByteView needle)
{
    return find_bytes(haystack, needle).has_value();
}

void put_u16(Bytes& out, std::uint16_t v);

/// Bounds-checked little-endian cursor. Every read past the end throws
/// Error(TruncatedFile).
class ByteReader {
public:
    explicit ByteReader(ByteView data) noexcept : data_(data) {}

    std::uint8_t u8();
    std::uint16_t u16();
    ByteView take(std::size_t n);

    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    std::size_t position() const noexcept { return pos_; }

private:
    ByteView data_;
    std::size_t pos_ = 0;
};

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, ByteView bytes);

}  // namespace viroclave
