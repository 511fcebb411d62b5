#include <texsr/cli.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    const std::vector<std::string> args(argv, argv + argc);
    const texsr::cli::CommandResult result = texsr::cli::run_command(args);
    for (const auto& line : result.output) std::cout << line << '\n';
    for (const auto& line : result.log) std::cerr << line << '\n';
    return result.exit_code;
}
