#include "afem/config.hpp"
#include "afem/errors.hpp"
#include "afem/execute.hpp"

#include <iostream>

int main(int argc, char** argv) {
  try {
    const auto config = afem::parse_config(argc, argv);
    if (!config) return 0;
    afem::ExecuteOptions options;
    options.log = &std::cout;
    return afem::execute(*config, options);
  } catch (const afem::ConfigError& e) {
    std::cerr << "config error";
    if (!e.key().empty()) std::cerr << " [" << e.key() << "]";
    std::cerr << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
