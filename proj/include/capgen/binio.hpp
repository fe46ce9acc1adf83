#pragma once

// Little-endian readers/writers for the CAPF1 and CKPT1 formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "capgen/errors.hpp"

namespace capgen::binio {

template <class U>
U to_little(U v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    U out = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) out = static_cast<U>((out << 8) | ((v >> (8 * i)) & 0xffu));
    return out;
  }
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  template <class U>
  void uint(U v) {
    v = to_little(v);
    bytes(&v, sizeof(v));
  }
  void u16(std::uint16_t v) { uint(v); }
  void u32(std::uint32_t v) { uint(v); }
  void u64(std::uint64_t v) { uint(v); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f32s(std::span<const float> values) {
    if constexpr (std::endian::native == std::endian::little) {
      bytes(values.data(), values.size() * sizeof(float));
    } else {
      for (float v : values) f32(v);
    }
  }

 private:
  std::ostream& out_;
};

// Reads from an in-memory buffer; running past the end throws FormatError
// citing the source name.
class Reader {
 public:
  Reader(std::span<const char> buf, std::string source) : buf_(buf), source_(std::move(source)) {}

  std::size_t remaining() const { return buf_.size() - pos_; }

  void bytes(void* p, std::size_t n) {
    if (remaining() < n)
      throw FormatError(source_ + ": truncated, needed " + std::to_string(n) + " bytes at offset " +
                        std::to_string(pos_) + ", have " + std::to_string(remaining()));
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  template <class U>
  U uint() {
    U v;
    bytes(&v, sizeof(v));
    return to_little(v);
  }
  std::uint16_t u16() { return uint<std::uint16_t>(); }
  std::uint32_t u32() { return uint<std::uint32_t>(); }
  std::uint64_t u64() { return uint<std::uint64_t>(); }
  float f32() { return std::bit_cast<float>(u32()); }
  void f32s(std::span<float> out) {
    if constexpr (std::endian::native == std::endian::little) {
      bytes(out.data(), out.size() * sizeof(float));
    } else {
      for (auto& v : out) v = f32();
    }
  }

 private:
  std::span<const char> buf_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace capgen::binio
