#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace anchorcast {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raw little-endian binary writer/reader for checkpoints; doubles are copied
// bit-for-bit so round-trips are exact.
class BinaryWriter {
 public:
  explicit BinaryWriter(const std::string& path) : os_(path, std::ios::binary) {
    if (!os_) throw IoError("cannot open for write: " + path);
  }

  void u32(std::uint32_t v) { raw(&v, sizeof(v)); }
  void u64(std::uint64_t v) { raw(&v, sizeof(v)); }
  void i32(std::int32_t v) { raw(&v, sizeof(v)); }
  void f64(double v) { raw(&v, sizeof(v)); }

  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }

  void vec(const Eigen::VectorXd& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    raw(v.data(), static_cast<std::size_t>(v.size()) * sizeof(double));
  }

  void mat(const Eigen::MatrixXd& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    // column-major, Eigen's native layout
    raw(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
  }

  void finish() {
    os_.flush();
    if (!os_) throw IoError("write failed");
  }

 private:
  void raw(const void* p, std::size_t n) {
    os_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  std::ofstream os_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::string& path) : is_(path, std::ios::binary) {
    if (!is_) throw IoError("cannot open for read: " + path);
  }

  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  std::int32_t i32() { return get<std::int32_t>(); }
  double f64() { return get<double>(); }

  std::string str() {
    const auto n = u64();
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }

  Eigen::VectorXd vec() {
    const auto n = u64();
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    raw(v.data(), n * sizeof(double));
    return v;
  }

  Eigen::MatrixXd mat() {
    const auto r = u64();
    const auto c = u64();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    raw(m.data(), r * c * sizeof(double));
    return m;
  }

 private:
  template <class T>
  T get() {
    T v;
    raw(&v, sizeof(v));
    return v;
  }
  void raw(void* p, std::size_t n) {
    is_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!is_) throw IoError("truncated or unreadable checkpoint");
  }
  std::ifstream is_;
};

}  // namespace anchorcast
