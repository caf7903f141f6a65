#include <plgcir/cli.hpp>

int main(int argc, char** argv) { return plgcir::cli::run(argc, argv, std::cout, std::cerr); }
