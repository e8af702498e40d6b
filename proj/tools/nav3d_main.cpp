#include "nav3d/cli.hpp"

int main(int argc, char** argv) { return nav3d::cli::run_cli(argc, argv); }
