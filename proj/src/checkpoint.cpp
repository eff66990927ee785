#include "mzk/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mzk/error.hpp"

namespace mzk::checkpoint {

namespace {

constexpr char kMagic[5] = {'M', 'Z', 'K', 'V', '1'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

template <class T>
void put(std::vector<unsigned char>& out, T value) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& b) : bytes_(b) {}
  template <class T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw IoError("truncated MZKV1 checkpoint");
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void skip(std::size_t n) { pos_ += n; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<unsigned char> encode(const SystemState& s) {
  validate(s);
  const Grid2D& g = s.grid();
  std::vector<unsigned char> out;
  out.reserve(5 + 24 + g.size() * 7 * sizeof(double));
  out.insert(out.end(), kMagic, kMagic + 5);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(g.nx));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(g.ny));
  put<double>(out, g.L);
  put<double>(out, s.t);
  for (const auto& z : s.e1.values()) {
    put<double>(out, z.real());
    put<double>(out, z.imag());
  }
  for (const auto& z : s.e2.values()) {
    put<double>(out, z.real());
    put<double>(out, z.imag());
  }
  for (double z : s.n.values()) put<double>(out, z);
  for (double z : s.v.x.values()) put<double>(out, z);
  for (double z : s.v.y.values()) put<double>(out, z);
  return out;
}

SystemState decode(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 5 || std::memcmp(bytes.data(), kMagic, 5) != 0) {
    throw IoError("missing MZKV1 magic");
  }
  Reader rd(bytes);
  rd.skip(5);
  const auto nx = rd.get<std::uint32_t>();
  const auto ny = rd.get<std::uint32_t>();
  const double L = rd.get<double>();
  const double t = rd.get<double>();
  const Grid2D g = Grid2D::make(nx, ny, L);
  if (rd.remaining() != g.size() * 7 * sizeof(double)) {
    throw IoError("MZKV1 payload size does not match header");
  }
  SystemState s(g, t);
  for (auto& z : s.e1.values()) {
    const double re = rd.get<double>();
    z = cplx{re, rd.get<double>()};
  }
  for (auto& z : s.e2.values()) {
    const double re = rd.get<double>();
    z = cplx{re, rd.get<double>()};
  }
  for (auto& z : s.n.values()) z = rd.get<double>();
  for (auto& z : s.v.x.values()) z = rd.get<double>();
  for (auto& z : s.v.y.values()) z = rd.get<double>();
  validate(s);
  return s;
}

void write(const std::filesystem::path& path, const SystemState& s) {
  const auto bytes = encode(s);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

SystemState read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return decode(bytes);
}

std::vector<SystemState> read_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".mzk") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<SystemState> states;
  states.reserve(files.size());
  for (const auto& f : files) states.push_back(read(f));
  std::stable_sort(states.begin(), states.end(),
                   [](const SystemState& a, const SystemState& b) { return a.t < b.t; });
  return states;
}

}  // namespace mzk::checkpoint
