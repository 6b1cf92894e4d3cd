#pragma once

#include "pe_builder.hpp"

#include <string>
#include <vector>

namespace pesem::testing {

struct Fixture {
  std::string file_name;
  PeSpec spec;
};

/// The checked-in fixture corpus under tests/fixtures.
std::vector<Fixture> fixture_corpus();

}  // namespace pesem::testing
