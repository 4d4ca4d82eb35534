#include "selfsim_app.hpp"

int main(int argc, char** argv) { return selfsim::selfsim_main(argc, argv); }
