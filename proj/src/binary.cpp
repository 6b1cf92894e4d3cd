#include "pesem/binary.hpp"

#include "pesem/error.hpp"

#include <fstream>
#include <iterator>

namespace pesem {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotPe: return "NotPe";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::UnmappedRva: return "UnmappedRva";
    case ErrorCode::EmptyEnsemble: return "EmptyEnsemble";
    case ErrorCode::NonPositiveWeight: return "NonPositiveWeight";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::DuplicateRuleId: return "DuplicateRuleId";
    case ErrorCode::ClassTooSmall: return "ClassTooSmall";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

RawBinary::RawBinary() : data_(std::make_shared<const std::vector<std::uint8_t>>()) {}

RawBinary::RawBinary(std::vector<std::uint8_t> bytes)
    : data_(std::make_shared<const std::vector<std::uint8_t>>(std::move(bytes))) {}

RawBinary RawBinary::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::Io, "read failed: " + path.string());
  return RawBinary(std::move(bytes));
}

std::span<const std::uint8_t> RawBinary::slice(std::size_t offset, std::size_t length) const noexcept {
  if (offset >= size()) return {};
  const std::size_t avail = size() - offset;
  return bytes().subspan(offset, length < avail ? length : avail);
}

std::optional<std::uint8_t> RawBinary::u8(std::size_t offset) const noexcept {
  if (!in_bounds(offset, 1)) return std::nullopt;
  return (*data_)[offset];
}

std::optional<std::uint16_t> RawBinary::u16(std::size_t offset) const noexcept {
  if (!in_bounds(offset, 2)) return std::nullopt;
  const auto& d = *data_;
  return static_cast<std::uint16_t>(d[offset] | (d[offset + 1] << 8));
}

std::optional<std::uint32_t> RawBinary::u32(std::size_t offset) const noexcept {
  if (!in_bounds(offset, 4)) return std::nullopt;
  const auto& d = *data_;
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | d[offset + static_cast<std::size_t>(i)];
  return v;
}

std::optional<std::uint64_t> RawBinary::u64(std::size_t offset) const noexcept {
  if (!in_bounds(offset, 8)) return std::nullopt;
  const auto& d = *data_;
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | d[offset + static_cast<std::size_t>(i)];
  return v;
}

std::optional<std::string> RawBinary::c_string(std::size_t offset, std::size_t max_len) const {
  if (offset >= size()) return std::nullopt;
  const auto& d = *data_;
  std::string out;
  for (std::size_t i = offset; i < size() && i - offset < max_len; ++i) {
    if (d[i] == 0) return out;
    out.push_back(static_cast<char>(d[i]));
  }
  return std::nullopt;
}

}  // namespace pesem
