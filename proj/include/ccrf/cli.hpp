#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ccrf::cli {

enum class Command { train, mine, decode, evaluate, compare, generate };
enum class Decoder { viterbi, exact_constrained, lagrangian };

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
/// Some sequence could not be decoded exactly; it was labeled by Viterbi instead.
inline constexpr int kExitInfeasible = 4;

/// One field per command-line flag; `--max_iterations` sets max_iterations and so on.
struct RunConfig {
    Command command = Command::decode;
    std::filesystem::path model;
    std::filesystem::path corpus;
    std::filesystem::path constraints;
    /// Predicted corpus for `evaluate`.
    std::filesystem::path predicted;
    /// Synthetic corpus description for `generate`.
    std::filesystem::path spec;
    std::filesystem::path output;
    /// Lagrangian trace CSV; `compare` defaults to `<output>.trace.csv`.
    std::filesystem::path trace;
    Decoder decoder = Decoder::viterbi;
    std::optional<double> tau;
    std::size_t max_iterations = 200;
    std::size_t stall_iterations = 50;
    double tolerance = 1e-6;
    /// Seed of the synthetic generator.
    std::optional<std::uint64_t> seed;
    std::size_t epochs = 10;
    std::size_t min_support = 1;
    double max_violation_rate = 0.1;
    std::vector<std::string> separators;
    /// Refuse exact searches over more than this many paths.
    std::uint64_t cap = 1'000'000;
    /// Abort on the first sequence the chosen decoder cannot solve.
    bool strict = false;
};

const char* command_name(Command c);
const char* decoder_name(Decoder d);

/// Executes one command. Reports go to `out` when no output path is set;
/// warnings and the one-line `error: <class>: <message>` go to `err`.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses the command line (and `--config` file), then runs.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ccrf::cli
