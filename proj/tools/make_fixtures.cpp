// Regenerates the fixture binaries and their reference reports.
#include "fixtures.hpp"

#include "pesem/binary.hpp"
#include "pesem/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: make_fixtures <fixture-dir> <golden-dir>\n";
    return 1;
  }
  const fs::path fixture_dir = argv[1], golden_dir = argv[2];
  fs::create_directories(fixture_dir);
  fs::create_directories(golden_dir);
  const auto now = std::chrono::sys_days{std::chrono::year{2026} / 1 / 1};
  for (const auto& f : pesem::testing::fixture_corpus()) {
    const auto bytes = pesem::testing::build_pe(f.spec);
    pesem::write_file_atomic(fixture_dir / f.file_name, std::string(bytes.begin(), bytes.end()));
    const auto report = pesem::analyze(pesem::RawBinary(bytes), f.file_name, {}, now);
    const auto golden = fs::path(f.file_name).stem().string() + ".json";
    pesem::write_file_atomic(golden_dir / golden, pesem::serialize_report(report));
    std::cout << f.file_name << " -> " << golden << "\n";
  }
  return 0;
}
