#include "interir/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "interir/errors.hpp"

namespace interir {

namespace {

constexpr char kMagic[4] = {'I', 'I', 'R', 'W'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const noexcept { return pos_; }

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw ParseError(pos_, std::string("weights: truncated ") + what);
    }
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::uint32_t u32(const char* what) {
    auto s = take(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(s[i]) << (8 * i);
    return v;
  }

  double f64(const char* what) {
    auto s = take(8, what);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(s[i]) << (8 * i);
    return std::bit_cast<double>(bits);
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_tensors(const NamedTensors& tensors) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kWeightsVersion);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : t.data()) put_f64(out, v);
  }
  return out;
}

NamedTensors decode_tensors(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  auto magic = r.take(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0) throw ParseError(0, "weights: bad magic");
  const std::size_t version_at = r.offset();
  if (const auto version = r.u32("version"); version != kWeightsVersion) {
    throw ParseError(version_at, "weights: unsupported version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32("tensor count");
  NamedTensors out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32("name length");
    auto name_bytes = r.take(name_len, "name");
    std::string name(name_bytes.begin(), name_bytes.end());
    const std::size_t rank_at = r.offset();
    const std::uint32_t rank = r.u32("rank");
    if (rank < 1 || rank > 4) {
      throw ParseError(rank_at, "weights: tensor '" + name + "' has rank " + std::to_string(rank));
    }
    Shape shape;
    std::size_t elems = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      const std::size_t dim_at = r.offset();
      const std::uint32_t d = r.u32("dims");
      if (d == 0) throw ParseError(dim_at, "weights: tensor '" + name + "' has a zero extent");
      shape.push_back(d);
      elems *= d;
    }
    if ((bytes.size() - r.offset()) / 8 < elems) {
      throw ParseError(r.offset(), "weights: truncated payload of '" + name + "'");
    }
    std::vector<double> data(elems);
    for (auto& v : data) v = r.f64("payload");
    out.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  if (r.offset() != bytes.size()) {
    throw ParseError(r.offset(), "weights: trailing bytes after last tensor");
  }
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("short write to " + path.string());
}

void save_tensors(const NamedTensors& tensors, const std::filesystem::path& path) {
  write_file(path, encode_tensors(tensors));
}

NamedTensors load_tensors(const std::filesystem::path& path) {
  return decode_tensors(read_file(path));
}

std::string content_hash(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = kHex[h & 0xf];
    h >>= 4;
  }
  return s;
}

}  // namespace interir
