#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "arl/core/types.hpp"

namespace arl {

/// Little-endian binary writer/reader for the on-disk containers
/// (checkpoints, datasets). Matrices go out as row-major f64 runs.
class BinWriter {
 public:
  explicit BinWriter(std::ostream& os) : os_(os) {}
  void u8(uint8_t v);
  void u32(uint32_t v);
  void u64(uint64_t v);
  void f64(double v);
  void str(const std::string& s);
  void mat(const Mat& m);

 private:
  std::ostream& os_;
};

class BinReader {
 public:
  explicit BinReader(std::istream& is) : is_(is) {}
  uint8_t u8();
  uint32_t u32();
  uint64_t u64();
  double f64();
  std::string str();
  Mat mat();

 private:
  void pull(char* dst, size_t n);
  std::istream& is_;
};

/// FNV-1a over a byte string; used for provenance hashes in manifests.
uint64_t fnv1a(const std::string& bytes);

}  // namespace arl
