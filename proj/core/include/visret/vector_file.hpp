#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace visret {

// On-disk embedding matrix: "VIRE" magic, u16 version, u32 dim, u64 count,
// u8 dtype (0 = f32), count*dim little-endian f32s, then count ids each as
// u32 byte length + UTF-8 bytes. All multi-byte fields little-endian.
inline constexpr uint16_t kVectorFileVersion = 1;
inline constexpr uint8_t kVectorFileDtypeF32 = 0;

struct VectorFile {
  uint32_t dim = 0;
  std::vector<std::string> ids;  // one per row
  std::vector<float> data;       // row-major, ids.size() * dim entries

  size_t count() const { return ids.size(); }
  const float* row(size_t i) const { return data.data() + i * dim; }
  std::vector<float> row_copy(size_t i) const;
};

std::string serialize_vectors(const VectorFile& vf);
VectorFile parse_vectors(const std::string& bytes);

// Atomic write (temp file + rename); load throws DataError with the byte
// offset of the first malformed field.
void save_vectors(const std::string& path, const VectorFile& vf);
VectorFile load_vectors(const std::string& path);

}  // namespace visret
