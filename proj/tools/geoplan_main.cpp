#include "geoplan/cli.hpp"

int main(int argc, char** argv) { return geoplan::run_cli(argc, argv); }
