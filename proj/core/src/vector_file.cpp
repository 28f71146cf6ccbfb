#include "visret/vector_file.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include "visret/errors.hpp"
#include "visret/io.hpp"

namespace visret {

namespace {

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  uint64_t take_uint(size_t width, const char* what) {
    if (bytes_.size() - pos_ < width) {
      throw DataError("vector file: truncated " + std::string(what) +
                      " at offset " + std::to_string(pos_));
    }
    uint64_t v = 0;
    for (size_t i = 0; i < width; ++i) {
      v |= static_cast<uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += width;
    return v;
  }

  float take_f32(const char* what) {
    auto bits = static_cast<uint32_t>(take_uint(4, what));
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

  std::string take_bytes(size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw DataError("vector file: truncated " + std::string(what) +
                      " at offset " + std::to_string(pos_));
    }
    std::string v = bytes_.substr(pos_, n);
    pos_ += n;
    return v;
  }

  size_t pos() const { return pos_; }
  size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::string& bytes_;
  size_t pos_ = 0;
};

}  // namespace

std::vector<float> VectorFile::row_copy(size_t i) const {
  const float* p = row(i);
  return std::vector<float>(p, p + dim);
}

std::string serialize_vectors(const VectorFile& vf) {
  if (vf.data.size() != vf.ids.size() * static_cast<size_t>(vf.dim)) {
    throw DataError("vector file: data size does not match count*dim");
  }
  std::string out;
  out.reserve(19 + vf.data.size() * 4 + vf.ids.size() * 8);
  out += "VIRE";
  put_u16(out, kVectorFileVersion);
  put_u32(out, vf.dim);
  put_u64(out, vf.ids.size());
  out.push_back(static_cast<char>(kVectorFileDtypeF32));
  for (float v : vf.data) put_f32(out, v);
  for (const auto& id : vf.ids) {
    if (id.size() > std::numeric_limits<uint32_t>::max()) {
      throw DataError("vector file: id too long");
    }
    put_u32(out, static_cast<uint32_t>(id.size()));
    out += id;
  }
  return out;
}

VectorFile parse_vectors(const std::string& bytes) {
  Reader r(bytes);
  if (r.take_bytes(4, "magic") != "VIRE") {
    throw DataError("vector file: bad magic, expected 'VIRE'");
  }
  auto version = r.take_uint(2, "version");
  if (version != kVectorFileVersion) {
    throw DataError("vector file: unsupported version " +
                    std::to_string(version));
  }
  auto dim = r.take_uint(4, "dim");
  auto count = r.take_uint(8, "count");
  auto dtype = r.take_uint(1, "dtype");
  if (dtype != kVectorFileDtypeF32) {
    throw DataError("vector file: unsupported dtype " + std::to_string(dtype));
  }
  if (dim == 0 && count > 0) {
    throw DataError("vector file: zero dim with nonzero count");
  }
  if (count > 0 && dim > r.remaining() / 4 / count) {
    throw DataError("vector file: truncated data section");
  }

  VectorFile vf;
  vf.dim = static_cast<uint32_t>(dim);
  vf.data.resize(static_cast<size_t>(count * dim));
  for (auto& v : vf.data) {
    v = r.take_f32("vector data");
    if (!std::isfinite(v)) {
      throw DataError("vector file: non-finite value at offset " +
                      std::to_string(r.pos() - 4));
    }
  }
  vf.ids.reserve(static_cast<size_t>(count));
  for (uint64_t i = 0; i < count; ++i) {
    auto len = r.take_uint(4, "id length");
    vf.ids.push_back(r.take_bytes(static_cast<size_t>(len), "id bytes"));
  }
  if (r.remaining() != 0) {
    throw DataError("vector file: " + std::to_string(r.remaining()) +
                    " trailing bytes at offset " + std::to_string(r.pos()));
  }
  return vf;
}

void save_vectors(const std::string& path, const VectorFile& vf) {
  atomic_write(path, serialize_vectors(vf));
}

VectorFile load_vectors(const std::string& path) {
  return parse_vectors(read_file(path));
}

}  // namespace visret
