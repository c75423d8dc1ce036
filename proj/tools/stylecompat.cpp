#include <string>
#include <vector>

#include "stylecompat/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return stylecompat::commands::run(args);
}
