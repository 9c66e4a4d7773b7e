#include "millerpole/cli.hpp"

int main(int argc, char** argv) { return millerpole::cli::run(argc, argv); }
