#include "survmed/cli.hpp"

int main(int argc, char** argv) { return survmed::cli_main(argc, argv); }
