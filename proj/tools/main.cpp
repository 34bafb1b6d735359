#include "charax/cli/cli.hpp"

int main(int argc, char** argv) { return charax::cli::run(argc, argv); }
