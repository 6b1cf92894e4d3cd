#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pesem {

/// Immutable byte buffer of one input file. Copies share the same storage.
class RawBinary {
 public:
  RawBinary();
  explicit RawBinary(std::vector<std::uint8_t> bytes);

  static RawBinary from_file(const std::filesystem::path& path);

  [[nodiscard]] std::span<const std::uint8_t> bytes() const noexcept { return {data_->data(), data_->size()}; }
  [[nodiscard]] std::size_t size() const noexcept { return data_->size(); }
  [[nodiscard]] bool empty() const noexcept { return data_->empty(); }

  /// Bytes in [offset, offset + length), clipped to the end of the buffer.
  [[nodiscard]] std::span<const std::uint8_t> slice(std::size_t offset, std::size_t length) const noexcept;

  [[nodiscard]] bool in_bounds(std::size_t offset, std::size_t length) const noexcept {
    return offset <= size() && length <= size() - offset;
  }

  [[nodiscard]] std::optional<std::uint8_t> u8(std::size_t offset) const noexcept;
  [[nodiscard]] std::optional<std::uint16_t> u16(std::size_t offset) const noexcept;
  [[nodiscard]] std::optional<std::uint32_t> u32(std::size_t offset) const noexcept;
  [[nodiscard]] std::optional<std::uint64_t> u64(std::size_t offset) const noexcept;

  /// NUL-terminated string starting at offset, at most max_len bytes.
  /// Empty optional when no terminator is found inside the bound.
  [[nodiscard]] std::optional<std::string> c_string(std::size_t offset, std::size_t max_len) const;

 private:
  std::shared_ptr<const std::vector<std::uint8_t>> data_;
};

}  // namespace pesem
