#ifndef MLGAN_TEXT_FORMAT_H_
#define MLGAN_TEXT_FORMAT_H_

// Helpers shared by the whitespace-separated text file formats.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mlgan {

// 17 significant digits; parses back to the identical double.
std::string FormatDouble(double v);
// Fixed-point with `decimals` digits after the point.
std::string FormatFixed(double v, int decimals);

void WriteValuesLine(std::span<const double> values, std::ostream& out);

std::vector<std::string> SplitWhitespace(std::string_view line);
std::string Trim(std::string_view s);

// Line-oriented reader that reports errors as "<source>:<line>: <message>".
class LineReader {
 public:
  LineReader(std::istream& in, std::string source);

  // Reads the next line; throws ParseError at end of input.
  std::string Next();
  // Like Next() but returns false at end of input.
  bool TryNext(std::string& line);
  std::vector<std::string> Tokens() { return SplitWhitespace(Next()); }
  void ExpectLine(std::string_view expected);
  // Next line must hold exactly `count` doubles.
  std::vector<double> Doubles(std::size_t count);
  // Only blank lines may remain.
  void ExpectEnd();

  double ParseDouble(const std::string& token);
  std::size_t ParseCount(const std::string& token);
  std::uint64_t ParseU64(const std::string& token);

  std::size_t line_number() const { return line_; }
  [[noreturn]] void Fail(const std::string& message) const;

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_ = 0;
};

}  // namespace mlgan

#endif  // MLGAN_TEXT_FORMAT_H_
