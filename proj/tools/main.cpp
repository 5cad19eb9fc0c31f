#include "commands.hpp"

int main(int argc, char** argv) { return bioexp::cli::run(argc, argv); }
