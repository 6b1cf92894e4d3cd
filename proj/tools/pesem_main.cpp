#include "pesem/cli.hpp"

int main(int argc, char** argv) { return pesem::cli::run(argc, argv); }
