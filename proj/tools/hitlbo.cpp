#include "cli.hpp"

int main(int argc, char** argv) { return hitlbo::cli::run_cli(argc, argv); }
