#include "mlgan/text_format.h"

#include <cctype>
#include <charconv>
#include <cstdint>
#include <istream>
#include <ostream>

#include "mlgan/tensor.h"

namespace mlgan {

std::string FormatDouble(double v) {
  char buf[64];
  auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

std::string FormatFixed(double v, int decimals) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::fixed, decimals);
  return std::string(buf, ptr);
}

void WriteValuesLine(std::span<const double> values, std::ostream& out) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out << ' ';
    out << FormatDouble(values[i]);
  }
  out << '\n';
}

std::vector<std::string> SplitWhitespace(std::string_view line) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    const std::size_t start = i;
    while (i < line.size() &&
           !std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    if (i > start) tokens.emplace_back(line.substr(start, i - start));
  }
  return tokens;
}

std::string Trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

LineReader::LineReader(std::istream& in, std::string source)
    : in_(in), source_(std::move(source)) {}

void LineReader::Fail(const std::string& message) const {
  throw ParseError(source_ + ":" + std::to_string(line_) + ": " + message);
}

bool LineReader::TryNext(std::string& line) {
  if (!std::getline(in_, line)) return false;
  ++line_;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

std::string LineReader::Next() {
  std::string line;
  if (!TryNext(line)) {
    ++line_;
    Fail("unexpected end of file");
  }
  return line;
}

void LineReader::ExpectLine(std::string_view expected) {
  const std::string line = Next();
  if (Trim(line) != expected) {
    Fail("expected '" + std::string(expected) + "', got '" + line + "'");
  }
}

std::vector<double> LineReader::Doubles(std::size_t count) {
  const std::vector<std::string> tokens = Tokens();
  if (tokens.size() != count) {
    Fail("expected " + std::to_string(count) + " values, got " +
         std::to_string(tokens.size()));
  }
  std::vector<double> values;
  values.reserve(count);
  for (const std::string& t : tokens) values.push_back(ParseDouble(t));
  return values;
}

void LineReader::ExpectEnd() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (!Trim(line).empty()) Fail("unexpected trailing content");
  }
}

double LineReader::ParseDouble(const std::string& token) {
  double v = 0.0;
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, v);
  if (ec != std::errc() || ptr != end) Fail("bad number '" + token + "'");
  return v;
}

std::size_t LineReader::ParseCount(const std::string& token) {
  return static_cast<std::size_t>(ParseU64(token));
}

std::uint64_t LineReader::ParseU64(const std::string& token) {
  std::uint64_t v = 0;
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, v);
  if (ec != std::errc() || ptr != end) Fail("bad integer '" + token + "'");
  return v;
}

}  // namespace mlgan
