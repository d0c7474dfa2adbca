#include "voclip/cli.hpp"

int main(int argc, char** argv) { return voclip::cli::dispatch(argc, argv); }
