#include "pesem/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <memory>
#include <stdexcept>

namespace pesem {
namespace {

std::string to_hex(const unsigned char* data, unsigned int len) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[data[i] >> 4]);
    out.push_back(kHex[data[i] & 0xF]);
  }
  return out;
}

std::string digest_hex(const EVP_MD* md, const void* data, std::size_t len) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> out{};
  unsigned int out_len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), md, nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data, len) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), out.data(), &out_len) != 1) {
    throw std::runtime_error("digest computation failed");
  }
  return to_hex(out.data(), out_len);
}

}  // namespace

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  return digest_hex(EVP_sha256(), bytes.data(), bytes.size());
}

std::string md5_hex(std::span<const std::uint8_t> bytes) {
  return digest_hex(EVP_md5(), bytes.data(), bytes.size());
}

std::string sha256_hex(std::string_view text) { return digest_hex(EVP_sha256(), text.data(), text.size()); }

std::string md5_hex(std::string_view text) { return digest_hex(EVP_md5(), text.data(), text.size()); }

}  // namespace pesem
