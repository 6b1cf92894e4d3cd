#include "pesem/pe_parser.hpp"

#include "pesem/error.hpp"

#include <algorithm>
#include <cstdio>
#include <optional>

namespace pesem {
namespace {

constexpr std::uint16_t kMzMagic = 0x5A4D;
constexpr std::uint32_t kPeSignature = 0x00004550;
constexpr std::uint16_t kPe32Magic = 0x010b;
constexpr std::uint16_t kPe32PlusMagic = 0x020b;
constexpr std::size_t kCoffHeaderSize = 20;
constexpr std::size_t kSectionHeaderSize = 40;
constexpr std::size_t kImportDescriptorSize = 20;
constexpr std::size_t kMaxDllNameLength = 256;
constexpr std::size_t kMaxImportNameLength = 512;
constexpr std::uint16_t kMaxLoaderSections = 96;

// Offsets inside the optional header that differ between PE32 and PE32+.
struct OptionalLayout {
  std::size_t image_base;
  std::size_t image_base_width;
  std::size_t number_of_rva_and_sizes;
  std::size_t data_directories;
};

constexpr OptionalLayout kPe32Layout{28, 4, 92, 96};
constexpr OptionalLayout kPe32PlusLayout{24, 8, 108, 112};

std::string hex32(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

std::optional<std::uint32_t> try_rva_to_offset(const ParsedPe& pe, std::uint32_t rva) {
  for (const auto& s : pe.sections) {
    const std::uint64_t span = std::max(s.virtual_size, s.raw_size);
    if (rva < s.virtual_address || rva >= std::uint64_t{s.virtual_address} + span) continue;
    const std::uint32_t delta = rva - s.virtual_address;
    if (delta < s.raw_size) return s.raw_offset + delta;
  }
  if (rva < pe.optional.size_of_headers) return rva;
  return std::nullopt;
}

bool entry_point_mapped(const ParsedPe& pe) {
  const std::uint32_t ep = pe.optional.entry_point_rva;
  if (ep == 0 || ep < pe.optional.size_of_headers) return true;
  return std::any_of(pe.sections.begin(), pe.sections.end(), [ep](const SectionHeaderInfo& s) {
    const std::uint64_t span = std::max(s.virtual_size, s.raw_size);
    return ep >= s.virtual_address && ep < std::uint64_t{s.virtual_address} + span;
  });
}

}  // namespace

std::size_t ImportTable::entry_count() const noexcept {
  std::size_t n = 0;
  for (const auto& lib : libraries) n += lib.entries.size();
  return n;
}

std::string render_section_name(std::span<const std::uint8_t> raw) {
  std::string out;
  for (std::uint8_t b : raw) {
    if (b == 0) break;
    if (b >= 0x20 && b <= 0x7E && b != '\\') {
      out.push_back(static_cast<char>(b));
    } else {
      char buf[5];
      std::snprintf(buf, sizeof buf, "\\x%02x", b);
      out += buf;
    }
  }
  return out;
}

ParsedPe parse_pe(const RawBinary& binary) {
  if (binary.size() < 2 || binary.u16(0) != kMzMagic) throw Error(ErrorCode::NotPe, "missing MZ magic");
  const auto lfanew = binary.u32(0x3C);
  if (!lfanew) throw Error(ErrorCode::Truncated, "file ends inside the DOS header");

  ParsedPe pe;
  pe.pe_offset = *lfanew;
  const std::size_t sig_off = *lfanew;
  const auto sig = binary.u32(sig_off);
  if (!sig) throw Error(ErrorCode::Truncated, "file ends before the PE signature at " + hex32(sig_off));
  if (*sig != kPeSignature) throw Error(ErrorCode::NotPe, "missing PE signature at " + hex32(sig_off));

  const std::size_t coff_off = sig_off + 4;
  if (!binary.in_bounds(coff_off, kCoffHeaderSize)) throw Error(ErrorCode::Truncated, "file ends inside the COFF header");
  const std::uint16_t machine = *binary.u16(coff_off);
  if (machine != static_cast<std::uint16_t>(Machine::I386) && machine != static_cast<std::uint16_t>(Machine::Amd64)) {
    throw Error(ErrorCode::Unsupported, "unsupported machine type " + hex32(machine));
  }
  pe.coff.machine = static_cast<Machine>(machine);
  pe.coff.num_sections = *binary.u16(coff_off + 2);
  pe.coff.timestamp = *binary.u32(coff_off + 4);
  pe.coff.optional_header_size = *binary.u16(coff_off + 16);
  pe.coff.characteristics = *binary.u16(coff_off + 18);

  const std::size_t opt_off = coff_off + kCoffHeaderSize;
  const auto magic = binary.u16(opt_off);
  if (!magic) throw Error(ErrorCode::Truncated, "file ends inside the optional header");
  if (*magic == kPe32PlusMagic) {
    pe.optional.is_64bit = true;
  } else if (*magic != kPe32Magic) {
    pe.optional.is_64bit = pe.coff.machine == Machine::Amd64;
    pe.warnings.push_back("unknown optional header magic " + hex32(*magic) + ", layout inferred from machine");
  }
  if (pe.optional.is_64bit != (pe.coff.machine == Machine::Amd64)) {
    pe.warnings.push_back("optional header magic disagrees with machine type");
  }

  const OptionalLayout& layout = pe.optional.is_64bit ? kPe32PlusLayout : kPe32Layout;
  if (!binary.in_bounds(opt_off, layout.data_directories)) {
    throw Error(ErrorCode::Truncated, "file ends inside the optional header");
  }
  if (pe.coff.optional_header_size < layout.data_directories) {
    pe.warnings.push_back("optional header size " + std::to_string(pe.coff.optional_header_size) +
                          " is smaller than its fixed fields");
  }
  pe.optional.entry_point_rva = *binary.u32(opt_off + 16);
  pe.optional.image_base = layout.image_base_width == 8 ? *binary.u64(opt_off + layout.image_base)
                                                        : *binary.u32(opt_off + layout.image_base);
  pe.optional.size_of_image = *binary.u32(opt_off + 56);
  pe.optional.size_of_headers = *binary.u32(opt_off + 60);
  pe.optional.subsystem = *binary.u16(opt_off + 68);

  std::uint32_t dir_count = *binary.u32(opt_off + layout.number_of_rva_and_sizes);
  if (dir_count > kDataDirectoryCount) {
    pe.warnings.push_back("NumberOfRvaAndSizes " + std::to_string(dir_count) + " clamped to 16");
    dir_count = kDataDirectoryCount;
  }
  if (pe.coff.optional_header_size >= layout.data_directories) {
    const std::uint32_t fits = static_cast<std::uint32_t>((pe.coff.optional_header_size - layout.data_directories) / 8);
    if (dir_count > fits) {
      pe.warnings.push_back("data directories exceed the optional header; " + std::to_string(fits) + " kept");
      dir_count = fits;
    }
  }
  const std::size_t dir_off = opt_off + layout.data_directories;
  if (!binary.in_bounds(dir_off, std::size_t{dir_count} * 8)) {
    throw Error(ErrorCode::Truncated, "file ends inside the data directories");
  }
  for (std::uint32_t i = 0; i < dir_count; ++i) {
    pe.optional.data_directories[i] = {*binary.u32(dir_off + i * 8), *binary.u32(dir_off + i * 8 + 4)};
  }

  const std::size_t table_off = opt_off + pe.coff.optional_header_size;
  if (pe.coff.num_sections == 0) pe.warnings.push_back("no sections");
  if (pe.coff.num_sections > kMaxLoaderSections) {
    pe.warnings.push_back(std::to_string(pe.coff.num_sections) + " sections exceed the loader limit of 96");
  }
  if (!binary.in_bounds(table_off, std::size_t{pe.coff.num_sections} * kSectionHeaderSize)) {
    throw Error(ErrorCode::Truncated, "file ends inside the section table");
  }
  pe.sections.reserve(pe.coff.num_sections);
  for (std::size_t i = 0; i < pe.coff.num_sections; ++i) {
    const std::size_t off = table_off + i * kSectionHeaderSize;
    SectionHeaderInfo s;
    s.name = render_section_name(binary.slice(off, 8));
    s.virtual_size = *binary.u32(off + 8);
    s.virtual_address = *binary.u32(off + 12);
    s.raw_size = *binary.u32(off + 16);
    s.raw_offset = *binary.u32(off + 20);
    s.characteristics = *binary.u32(off + 36);
    if (s.raw_size > 0 && !binary.in_bounds(s.raw_offset, s.raw_size)) {
      s.truncated = true;
      pe.warnings.push_back("section " + std::to_string(i) + " (" + s.name + ") raw data extends past end of file");
    }
    pe.sections.push_back(std::move(s));
  }

  pe.optional.entry_point_mapped = entry_point_mapped(pe);
  if (!pe.optional.entry_point_mapped) {
    pe.warnings.push_back("entry point " + hex32(pe.optional.entry_point_rva) + " lies outside all sections");
  }

  pe.imports = extract_imports(pe, binary, pe.warnings);
  return pe;
}

std::uint32_t rva_to_offset(const ParsedPe& pe, std::uint32_t rva) {
  if (auto off = try_rva_to_offset(pe, rva)) return *off;
  throw Error(ErrorCode::UnmappedRva, "rva " + hex32(rva) + " is not backed by file data");
}

ImportTable extract_imports(const ParsedPe& pe, const RawBinary& binary) {
  std::vector<std::string> ignored;
  return extract_imports(pe, binary, ignored);
}

ImportTable extract_imports(const ParsedPe& pe, const RawBinary& binary, std::vector<std::string>& warnings) {
  ImportTable table;
  const DataDirectory& dir = pe.optional.directory(DirectoryRole::Import);
  if (dir.rva == 0) {
    warnings.push_back("no import directory");
    return table;
  }
  const auto base = try_rva_to_offset(pe, dir.rva);
  if (!base) {
    warnings.push_back("import directory rva " + hex32(dir.rva) + " is unmapped");
    return table;
  }

  auto read_string_at_rva = [&](std::uint32_t rva, std::size_t max_len) -> std::optional<std::string> {
    const auto off = try_rva_to_offset(pe, rva);
    if (!off) return std::nullopt;
    return binary.c_string(*off, max_len);
  };

  const std::size_t thunk_size = pe.optional.is_64bit ? 8 : 4;
  const std::uint64_t ordinal_flag = pe.optional.is_64bit ? (std::uint64_t{1} << 63) : (std::uint64_t{1} << 31);

  std::size_t index = 0;
  for (; index < kMaxImportDescriptors; ++index) {
    const std::size_t off = *base + index * kImportDescriptorSize;
    if (!binary.in_bounds(off, kImportDescriptorSize)) {
      warnings.push_back("import descriptor " + std::to_string(index) + " is truncated");
      break;
    }
    const std::uint32_t original_thunk = *binary.u32(off);
    const std::uint32_t name_rva = *binary.u32(off + 12);
    const std::uint32_t first_thunk = *binary.u32(off + 16);
    const bool terminator = std::all_of(binary.bytes().begin() + static_cast<std::ptrdiff_t>(off),
                                        binary.bytes().begin() + static_cast<std::ptrdiff_t>(off + kImportDescriptorSize),
                                        [](std::uint8_t b) { return b == 0; });
    if (terminator) break;
    if (name_rva == 0 || (original_thunk == 0 && first_thunk == 0)) {
      warnings.push_back("malformed import descriptor " + std::to_string(index));
      break;
    }
    auto dll = read_string_at_rva(name_rva, kMaxDllNameLength);
    if (!dll || dll->empty()) {
      warnings.push_back("unreadable dll name in import descriptor " + std::to_string(index));
      break;
    }

    ImportedLibrary lib;
    lib.dll_name = *dll;
    const std::uint32_t thunk_rva = original_thunk != 0 ? original_thunk : first_thunk;
    std::size_t j = 0;
    for (; j < kMaxImportsPerLibrary; ++j) {
      const std::uint64_t entry_rva = std::uint64_t{thunk_rva} + j * thunk_size;
      const auto entry_off = entry_rva <= UINT32_MAX ? try_rva_to_offset(pe, static_cast<std::uint32_t>(entry_rva))
                                                     : std::nullopt;
      const auto value = !entry_off ? std::nullopt
                         : pe.optional.is_64bit ? binary.u64(*entry_off)
                                                : std::optional<std::uint64_t>(binary.u32(*entry_off));
      if (!value) {
        warnings.push_back("import thunks of " + lib.dll_name + " run off mapped data");
        break;
      }
      if (*value == 0) break;
      if (*value & ordinal_flag) {
        lib.entries.push_back(ImportByOrdinal{static_cast<std::uint16_t>(*value & 0xFFFF)});
        continue;
      }
      const auto hint_name_rva = static_cast<std::uint32_t>(*value & 0x7FFFFFFF);
      auto name = read_string_at_rva(hint_name_rva + 2, kMaxImportNameLength);
      if (!name || name->empty()) {
        warnings.push_back("unreadable import name at " + hex32(hint_name_rva) + " in " + lib.dll_name);
        continue;
      }
      lib.entries.push_back(ImportByName{std::move(*name)});
    }
    if (j == kMaxImportsPerLibrary) {
      warnings.push_back("import list of " + lib.dll_name + " truncated at " + std::to_string(kMaxImportsPerLibrary) +
                         " entries");
    }
    table.libraries.push_back(std::move(lib));
  }
  if (index == kMaxImportDescriptors) {
    warnings.push_back("import directory truncated at " + std::to_string(kMaxImportDescriptors) + " descriptors");
  }
  return table;
}

}  // namespace pesem
