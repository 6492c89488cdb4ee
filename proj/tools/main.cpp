#include "epical/cli.hpp"

int main(int argc, char** argv) { return epical::cli::run(argc, argv); }
