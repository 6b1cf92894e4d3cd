#pragma once

#include "pesem/binary.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace pesem {

enum class Machine : std::uint16_t {
  I386 = 0x014c,
  Amd64 = 0x8664,
};

namespace coff_flags {
inline constexpr std::uint16_t kExecutableImage = 0x0002;
inline constexpr std::uint16_t kDll = 0x2000;
}  // namespace coff_flags

struct CoffHeaderInfo {
  Machine machine = Machine::I386;
  std::uint16_t num_sections = 0;
  std::uint32_t timestamp = 0;  // seconds since the Unix epoch
  std::uint16_t characteristics = 0;
  std::uint16_t optional_header_size = 0;

  bool operator==(const CoffHeaderInfo&) const = default;
};

struct DataDirectory {
  std::uint32_t rva = 0;
  std::uint32_t size = 0;

  bool operator==(const DataDirectory&) const = default;
};

/// Positional roles of the data directory array.
enum class DirectoryRole : std::size_t {
  Export = 0,
  Import = 1,
  Resource = 2,
  Exception = 3,
  Security = 4,
  BaseReloc = 5,
  Debug = 6,
  Architecture = 7,
  GlobalPtr = 8,
  Tls = 9,
  LoadConfig = 10,
  BoundImport = 11,
  Iat = 12,
  DelayImport = 13,
  ComDescriptor = 14,
  Reserved = 15,
};

inline constexpr std::size_t kDataDirectoryCount = 16;

struct OptionalHeaderInfo {
  bool is_64bit = false;
  std::uint32_t entry_point_rva = 0;
  std::uint64_t image_base = 0;
  std::uint16_t subsystem = 0;
  std::uint32_t size_of_headers = 0;
  std::uint32_t size_of_image = 0;
  /// Always kDataDirectoryCount entries; entries past NumberOfRvaAndSizes are zero.
  std::array<DataDirectory, kDataDirectoryCount> data_directories{};
  /// False when the entry point lies in no section and outside the headers.
  bool entry_point_mapped = true;

  [[nodiscard]] const DataDirectory& directory(DirectoryRole role) const {
    return data_directories[static_cast<std::size_t>(role)];
  }

  bool operator==(const OptionalHeaderInfo&) const = default;
};

namespace section_flags {
inline constexpr std::uint32_t kCntCode = 0x00000020;
inline constexpr std::uint32_t kCntInitializedData = 0x00000040;
inline constexpr std::uint32_t kCntUninitializedData = 0x00000080;
inline constexpr std::uint32_t kMemExecute = 0x20000000;
inline constexpr std::uint32_t kMemRead = 0x40000000;
inline constexpr std::uint32_t kMemWrite = 0x80000000;
}  // namespace section_flags

struct SectionHeaderInfo {
  std::string name;  // printable; other bytes escaped as \xNN
  std::uint32_t virtual_size = 0;
  std::uint32_t virtual_address = 0;
  std::uint32_t raw_size = 0;
  std::uint32_t raw_offset = 0;
  std::uint32_t characteristics = 0;
  bool truncated = false;  // raw data extends past the end of the file

  bool operator==(const SectionHeaderInfo&) const = default;
};

struct ImportByName {
  std::string name;
  bool operator==(const ImportByName&) const = default;
};

struct ImportByOrdinal {
  std::uint16_t ordinal = 0;
  bool operator==(const ImportByOrdinal&) const = default;
};

using ImportEntry = std::variant<ImportByName, ImportByOrdinal>;

struct ImportedLibrary {
  std::string dll_name;
  std::vector<ImportEntry> entries;

  bool operator==(const ImportedLibrary&) const = default;
};

struct ImportTable {
  std::vector<ImportedLibrary> libraries;  // import-directory order

  [[nodiscard]] std::size_t entry_count() const noexcept;
  bool operator==(const ImportTable&) const = default;
};

struct ParsedPe {
  std::uint32_t pe_offset = 0;  // e_lfanew
  CoffHeaderInfo coff;
  OptionalHeaderInfo optional;
  std::vector<SectionHeaderInfo> sections;
  ImportTable imports;
  std::vector<std::string> warnings;

  bool operator==(const ParsedPe&) const = default;
};

// Walk limits against adversarial import directories.
inline constexpr std::size_t kMaxImportDescriptors = 4096;
inline constexpr std::size_t kMaxImportsPerLibrary = 65536;

/// Parses headers, section table and import directory. Recoverable anomalies
/// are appended to ParsedPe::warnings; throws Error with NotPe, Truncated or
/// Unsupported otherwise.
ParsedPe parse_pe(const RawBinary& binary);

/// File offset for an RVA. Throws Error(UnmappedRva) when the RVA is not
/// backed by file data of any section (or of the headers).
std::uint32_t rva_to_offset(const ParsedPe& pe, std::uint32_t rva);

ImportTable extract_imports(const ParsedPe& pe, const RawBinary& binary, std::vector<std::string>& warnings);
ImportTable extract_imports(const ParsedPe& pe, const RawBinary& binary);

/// Escapes an 8-byte raw section name.
std::string render_section_name(std::span<const std::uint8_t> raw);

}  // namespace pesem
