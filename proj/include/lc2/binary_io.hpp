#pragma once

// Little-endian primitive readers/writers shared by the on-disk formats.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "lc2/error.hpp"

namespace lc2::io {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats assume a little-endian host");

template <typename T>
void write_pod(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) fail(ErrorKind::DataFormat, "unexpected end of file");
  return value;
}

inline void write_magic(std::ostream& os, std::string_view magic) {
  os.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline void expect_magic(std::istream& is, std::string_view magic) {
  std::array<char, 4> buf{};
  is.read(buf.data(), 4);
  if (!is || std::string_view(buf.data(), 4) != magic) {
    fail(ErrorKind::DataFormat, "bad magic, expected " + std::string(magic));
  }
}

}  // namespace lc2::io
