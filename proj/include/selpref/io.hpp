// File stream helpers: transparent gzip by ".gz" extension, CRC32, and
// little-endian binary primitives for the model file format.
#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "selpref/errors.hpp"

namespace selpref {

inline bool has_gz_extension(const std::string& path) {
  return path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
}

namespace detail {

class GzInputBuf : public std::streambuf {
 public:
  explicit GzInputBuf(const std::string& path) : file_(gzopen(path.c_str(), "rb")) {
    if (!file_) throw io_error("cannot open for reading: " + path);
    setg(buf_, buf_, buf_);
  }
  ~GzInputBuf() override {
    if (file_) gzclose(file_);
  }
  GzInputBuf(const GzInputBuf&) = delete;
  GzInputBuf& operator=(const GzInputBuf&) = delete;

 protected:
  int_type underflow() override {
    if (gptr() < egptr()) return traits_type::to_int_type(*gptr());
    int n = gzread(file_, buf_, sizeof(buf_));
    if (n < 0) {
      int errnum = 0;
      const char* msg = gzerror(file_, &errnum);
      throw io_error(std::string("gzip read failed: ") + (msg ? msg : "unknown error"));
    }
    if (n == 0) return traits_type::eof();
    setg(buf_, buf_, buf_ + n);
    return traits_type::to_int_type(*gptr());
  }

 private:
  gzFile file_;
  char buf_[1 << 16];
};

class GzOutputBuf : public std::streambuf {
 public:
  explicit GzOutputBuf(const std::string& path) : file_(gzopen(path.c_str(), "wb")) {
    if (!file_) throw io_error("cannot open for writing: " + path);
  }
  ~GzOutputBuf() override {
    if (file_) gzclose(file_);
  }
  GzOutputBuf(const GzOutputBuf&) = delete;
  GzOutputBuf& operator=(const GzOutputBuf&) = delete;

 protected:
  int_type overflow(int_type ch) override {
    if (ch == traits_type::eof()) return traits_type::not_eof(ch);
    char c = traits_type::to_char_type(ch);
    return gzwrite(file_, &c, 1) == 1 ? ch : traits_type::eof();
  }
  std::streamsize xsputn(const char* s, std::streamsize n) override {
    return gzwrite(file_, s, static_cast<unsigned>(n));
  }

 private:
  gzFile file_;
};

template <typename Stream, typename Buf>
class OwningStream : public Stream {
 public:
  explicit OwningStream(std::unique_ptr<Buf> buf) : Stream(buf.get()), buf_(std::move(buf)) {}

 private:
  std::unique_ptr<Buf> buf_;
};

}  // namespace detail

// Opens a text/binary input stream; ".gz" paths are decompressed on the fly.
// Corrupt gzip data surfaces as io_error rather than a silently short read.
inline std::unique_ptr<std::istream> open_input(const std::string& path) {
  if (has_gz_extension(path)) {
    auto in = std::make_unique<detail::OwningStream<std::istream, detail::GzInputBuf>>(
        std::make_unique<detail::GzInputBuf>(path));
    in->exceptions(std::ios::badbit);  // rethrows the buffer's io_error
    return in;
  }
  auto in = std::make_unique<std::ifstream>(path, std::ios::binary);
  if (!*in) throw io_error("cannot open for reading: " + path);
  return in;
}

inline std::unique_ptr<std::ostream> open_output(const std::string& path) {
  if (has_gz_extension(path)) {
    return std::make_unique<detail::OwningStream<std::ostream, detail::GzOutputBuf>>(
        std::make_unique<detail::GzOutputBuf>(path));
  }
  auto out = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
  if (!*out) throw io_error("cannot open for writing: " + path);
  return out;
}

inline std::uint32_t crc32_update(std::uint32_t crc, const void* data, std::size_t len) {
  return static_cast<std::uint32_t>(
      ::crc32(crc, static_cast<const Bytef*>(data), static_cast<uInt>(len)));
}

// Little-endian writers/readers. Byte-wise so the on-disk format does not
// depend on host endianness.
namespace le {

inline void put_bytes(std::string& out, const void* p, std::size_t n) {
  out.append(static_cast<const char*>(p), n);
}

inline void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.append(b, 4);
}

inline void put_u64(std::string& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.append(b, 8);
}

inline void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

struct Cursor {
  const char* p;
  const char* end;
  bool need(std::size_t n) const { return static_cast<std::size_t>(end - p) >= n; }
  std::uint32_t u32() {
    if (!need(4)) throw model_truncation_error("model file truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    p += 4;
    return v;
  }
  std::uint64_t u64() {
    if (!need(8)) throw model_truncation_error("model file truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    p += 8;
    return v;
  }
  float f32() {
    std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string bytes(std::size_t n) {
    if (!need(n)) throw model_truncation_error("model file truncated");
    std::string s(p, n);
    p += n;
    return s;
  }
};

}  // namespace le

}  // namespace selpref
