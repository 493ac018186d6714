#include "mpedge/matrix_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include "mpedge/errors.hpp"

namespace mpedge {

namespace {

constexpr char kMagic[8] = {'M', 'P', 'E', 'D', 'G', 'E', '0', '1'};

static_assert(std::endian::native == std::endian::little, "matrix dumps assume a little-endian host");

void put_u32(std::ofstream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t get_u32(std::ifstream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

}  // namespace

void dump_matrix(const std::string& path, const Eigen::MatrixXd& x) {
  constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
  if (static_cast<std::uint64_t>(x.rows()) > kMax || static_cast<std::uint64_t>(x.cols()) > kMax)
    throw ValidationError("matrix too large to dump");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + path + " for writing");
  out.write(kMagic, sizeof kMagic);
  put_u32(out, static_cast<std::uint32_t>(x.rows()));
  put_u32(out, static_cast<std::uint32_t>(x.cols()));
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = x;
  out.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(rm.size() * 8));
  if (!out) throw ValidationError("write failed for " + path);
}

Eigen::MatrixXd load_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw ValidationError(path + ": not a matrix dump");
  const std::uint32_t M = get_u32(in), N = get_u32(in);
  if (!in || M == 0 || N == 0) throw ValidationError(path + ": bad header");
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(M, N);
  in.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(rm.size() * 8));
  if (!in) throw ValidationError(path + ": truncated payload");
  if (in.peek() != std::char_traits<char>::eof()) throw ValidationError(path + ": trailing bytes");
  return rm;
}

}  // namespace mpedge
