#include "mns/cli/commands.hpp"

int main(int argc, char** argv) { return mns::cli::run(argc, argv); }
