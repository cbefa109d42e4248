#include <iostream>
#include <string>
#include <vector>

#include "bilayer/app.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  try {
    const bilayer::RunConfig config = bilayer::parse_config(args);
    const bilayer::RunOutcome outcome = bilayer::run_experiment(config, std::cout);
    switch (outcome.report.reason) {
      case bilayer::Termination::converged:
      case bilayer::Termination::max_iters:
        return 0;
      default:
        return 3;
    }
  } catch (const bilayer::HelpRequested& help) {
    std::cout << help.what();
    return 0;
  } catch (const bilayer::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
