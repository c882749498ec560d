#pragma once

// Little-endian primitive I/O shared by the adapter and index file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "pact/error.hpp"

namespace pact::detail {

inline void writeU32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline void writeU64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline void writeF64(std::ostream& out, double v) { writeU64(out, std::bit_cast<std::uint64_t>(v)); }

inline void writeString(std::ostream& out, const std::string& s) {
  writeU32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void readExact(std::istream& in, char* dst, std::size_t n) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw Error(ErrorKind::IncompatibleIndex, "unexpected end of file");
  }
}

inline std::uint32_t readU32(std::istream& in) {
  unsigned char b[4];
  readExact(in, reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint64_t readU64(std::istream& in) {
  unsigned char b[8];
  readExact(in, reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline double readF64(std::istream& in) { return std::bit_cast<double>(readU64(in)); }

inline std::string readString(std::istream& in) {
  const std::uint32_t n = readU32(in);
  std::string s(n, '\0');
  if (n > 0) readExact(in, s.data(), n);
  return s;
}

inline void expectMagic(std::istream& in, const char (&magic)[9]) {
  char got[8];
  in.read(got, 8);
  if (in.gcount() != 8 || std::memcmp(got, magic, 8) != 0) {
    throw Error(ErrorKind::IncompatibleIndex, std::string("bad magic, expected ") + magic);
  }
}

}  // namespace pact::detail
