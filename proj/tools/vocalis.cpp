#include "cli.hpp"

int main(int argc, char** argv) { return vocalis::cli::run(argc, argv, std::cout, std::cerr); }
