#include "arl/core/serialize.hpp"

#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace arl {

namespace {

template <typename T>
void put_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof(T));
  for (size_t i = 0; i < sizeof(T); ++i) buf[i] = (bits >> (8 * i)) & 0xff;
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!is) throw std::runtime_error("binary read: truncated stream");
  uint64_t bits = 0;
  for (size_t i = 0; i < sizeof(T); ++i) bits |= uint64_t(buf[i]) << (8 * i);
  T v;
  std::memcpy(&v, &bits, sizeof(T));
  return v;
}

}  // namespace

void BinWriter::u8(uint8_t v) { put_le(os_, v); }
void BinWriter::u32(uint32_t v) { put_le(os_, v); }
void BinWriter::u64(uint64_t v) { put_le(os_, v); }
void BinWriter::f64(double v) { put_le(os_, v); }

void BinWriter::str(const std::string& s) {
  u32(uint32_t(s.size()));
  os_.write(s.data(), std::streamsize(s.size()));
}

void BinWriter::mat(const Mat& m) {
  u32(uint32_t(m.rows()));
  u32(uint32_t(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
}

void BinReader::pull(char* dst, size_t n) {
  is_.read(dst, std::streamsize(n));
  if (!is_) throw std::runtime_error("binary read: truncated stream");
}

uint8_t BinReader::u8() { return get_le<uint8_t>(is_); }
uint32_t BinReader::u32() { return get_le<uint32_t>(is_); }
uint64_t BinReader::u64() { return get_le<uint64_t>(is_); }
double BinReader::f64() { return get_le<double>(is_); }

std::string BinReader::str() {
  const uint32_t n = u32();
  if (n > (1u << 27)) throw std::runtime_error("binary read: absurd string length");
  std::string s(n, '\0');
  if (n) pull(s.data(), n);
  return s;
}

Mat BinReader::mat() {
  const uint32_t r = u32();
  const uint32_t c = u32();
  if (uint64_t(r) * c > (1ull << 30)) throw std::runtime_error("binary read: absurd matrix");
  Mat m(r, c);
  for (uint32_t i = 0; i < r; ++i)
    for (uint32_t j = 0; j < c; ++j) m(i, j) = f64();
  return m;
}

uint64_t fnv1a(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace arl
