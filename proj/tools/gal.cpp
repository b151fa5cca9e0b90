#include "gal/cli.hpp"

int main(int argc, char** argv) { return gal::run_cli(argc, argv); }
