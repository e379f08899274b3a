// Regenerates tests/golden. Only run after an intentional numerical change.

#include <iostream>

#include "interir/verify/suites.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: generate_golden <output-dir>\n";
    return 2;
  }
  try {
    interir::verify::write_golden(argv[1]);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  std::cout << "golden vectors written to " << argv[1] << '\n';
  return 0;
}
