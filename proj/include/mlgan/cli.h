#ifndef MLGAN_CLI_H_
#define MLGAN_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace mlgan {

// Exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;    // bad flags, config, files
inline constexpr int kExitNumeric = 2;  // non-finite loss or gradient

// The mlgan command line: gen-data, pretrain, train, eval, ablate, report.
// argv[0] is the program name.
int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err);
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

// Markdown table of per-method medians over CSV metric rows (header
// "method,C-P,...,mean_labels"). Methods keep first-seen order. Throws on
// mismatched headers or malformed rows, naming sources[i] (or "input i")
// and the line.
std::string MedianReport(const std::vector<std::string>& csv_texts,
                         const std::vector<std::string>& sources = {});

}  // namespace mlgan

#endif  // MLGAN_CLI_H_
