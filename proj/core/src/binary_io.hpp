#pragma once

// Little-endian helpers shared by the kernel cache and model file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "qhsvm/errors.hpp"
#include "qhsvm/kernel.hpp"

namespace qhsvm::detail {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

class ByteWriter {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const char*>(data);
    buffer_.insert(buffer_.end(), p, p + n);
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void f64(double v) { bytes(&v, 8); }

  void provenance(const Provenance& p) {
    u8(static_cast<std::uint8_t>(p.kind));
    if (p.kind == Provenance::Kind::QuantumSampled) {
      u64(p.shots);
      u64(p.seed);
    } else if (p.kind == Provenance::Kind::ClassicalRbf) {
      f64(p.gamma);
    }
  }

  void write_file(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
    if (!out) throw FormatError("write to " + path.string() + " failed");
  }

 private:
  std::vector<char> buffer_;
};

class ByteReader {
 public:
  ByteReader(std::vector<char> data, std::string origin)
      : data_(std::move(data)), origin_(std::move(origin)) {}

  static ByteReader from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return ByteReader(std::move(data), path.string());
  }

  std::size_t remaining() const noexcept { return data_.size() - pos_; }

  void bytes(void* out, std::size_t n) {
    if (remaining() < n) fail("truncated");
    std::memcpy(out, data_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t u8() {
    std::uint8_t v = 0;
    bytes(&v, 1);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    bytes(&v, 8);
    return v;
  }
  double f64() {
    double v = 0;
    bytes(&v, 8);
    return v;
  }

  void expect_magic(const char (&magic)[5]) {
    char got[4];
    bytes(got, 4);
    if (std::memcmp(got, magic, 4) != 0) fail(std::string("magic mismatch, expected ") + magic);
  }

  Provenance provenance() {
    const std::uint8_t tag = u8();
    Provenance p;
    switch (tag) {
      case 0:
        return Provenance::quantum_exact();
      case 1: {
        const auto shots = u64();
        const auto seed = u64();
        return Provenance::quantum_sampled(shots, seed);
      }
      case 2:
        return Provenance::classical_linear();
      case 3:
        return Provenance::classical_rbf(f64());
      default:
        fail("unknown provenance tag " + std::to_string(tag));
    }
    return p;
  }

  void expect_end() {
    if (remaining() != 0) fail(std::to_string(remaining()) + " trailing bytes");
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw FormatError(origin_ + ": " + why);
  }

 private:
  std::vector<char> data_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace qhsvm::detail
