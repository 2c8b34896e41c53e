#include "evconv/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace evconv {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    if (i >= s.size()) break;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

[[noreturn]] void fail(std::string_view line, const std::string& why) {
  throw ParseError("malformed event line '" + std::string(line) + "': " + why);
}

template <typename T>
T parse_number(std::string_view tok, std::string_view line, const char* field) {
  T value{};
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    fail(line, std::string("non-numeric ") + field + " '" + std::string(tok) + "'");
  }
  return value;
}

void put_u32_le(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                              static_cast<char>((v >> 16) & 0xFF),
                              static_cast<char>((v >> 24) & 0xFF)};
  out.write(b.data(), 4);
}

std::uint32_t get_u32_le(const unsigned char* b) {
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void check_stream(const std::ios& s, const std::string& what) {
  if (!s) throw Error("I/O failure while " + what);
}

}  // namespace

Event parse_event_line(std::string_view line) {
  const auto fields = split_ws(trim(line));
  if (fields.size() != 4) {
    fail(line, "expected 4 fields, got " + std::to_string(fields.size()));
  }
  Event e;
  e.t = parse_number<double>(fields[0], line, "timestamp");
  const long long x = parse_number<long long>(fields[1], line, "x");
  const long long y = parse_number<long long>(fields[2], line, "y");
  const int p = parse_number<int>(fields[3], line, "polarity");
  if (!std::isfinite(e.t) || e.t < 0.0) fail(line, "timestamp must be finite and >= 0");
  if (x < 0 || y < 0 || x > INT32_MAX || y > INT32_MAX) fail(line, "negative or oversized pixel");
  if (p != 0 && p != 1) fail(line, "polarity out of range (expected 0 or 1)");
  e.x = static_cast<int>(x);
  e.y = static_cast<int>(y);
  e.polarity = p == 1 ? Polarity::Positive : Polarity::Negative;
  return e;
}

std::string format_event_line(const Event& e) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), e.t);
  std::string out(buf.data(), ptr);
  out += ' ';
  out += std::to_string(e.x);
  out += ' ';
  out += std::to_string(e.y);
  out += e.polarity == Polarity::Positive ? " 1" : " 0";
  return out;
}

std::vector<Event> read_event_stream(std::istream& in, const SensorGeometry& geom,
                                     ReadOptions opts) {
  std::vector<Event> events;
  std::string line;
  while (std::getline(in, line)) {
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    Event e = parse_event_line(body);
    const std::size_t index = events.size();
    if (!geom.contains(e.x, e.y)) {
      throw BoundsError("event " + std::to_string(index) + " at (" + std::to_string(e.x) + ", " +
                        std::to_string(e.y) + ") lies outside the " + std::to_string(geom.width) +
                        "x" + std::to_string(geom.height) + " sensor");
    }
    if (opts.strict_order && !events.empty() && e.t < events.back().t) {
      throw TemporalOrderError("event " + std::to_string(index) + " timestamp regression: " +
                               format_event_line(e) + " follows t=" +
                               format_event_line(events.back()));
    }
    events.push_back(e);
  }
  if (in.bad()) throw Error("I/O failure while reading event stream");
  return events;
}

std::vector<Event> read_event_file(const std::string& path, const SensorGeometry& geom,
                                   ReadOptions opts) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open event file '" + path + "'");
  return read_event_stream(in, geom, opts);
}

void write_event_stream(std::ostream& out, const std::vector<Event>& events) {
  for (const auto& e : events) out << format_event_line(e) << '\n';
  check_stream(out, "writing event stream");
}

void write_event_file(const std::string& path, const std::vector<Event>& events) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot create event file '" + path + "'");
  write_event_stream(out, events);
}

unsigned char pgm_level(double v, double lo, double hi) {
  double u = (v - lo) / (hi - lo);
  if (!(u > 0.0)) u = 0.0;  // also maps NaN to black
  if (u > 1.0) u = 1.0;
  return static_cast<unsigned char>(std::floor(255.0 * u + 0.5));
}

void write_snapshot_pgm(const ImageF& img, std::ostream& out, double lo, double hi) {
  if (!(hi > lo)) {
    throw ContractError("PGM normalization requires hi > lo");
  }
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  std::vector<char> row(static_cast<std::size_t>(img.width()));
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      row[static_cast<std::size_t>(x)] = static_cast<char>(pgm_level(img(x, y), lo, hi));
    }
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  check_stream(out, "writing PGM");
}

void write_snapshot_raw(const ImageF& img, std::ostream& out) {
  out.write("EVCR", 4);
  put_u32_le(out, static_cast<std::uint32_t>(img.width()));
  put_u32_le(out, static_cast<std::uint32_t>(img.height()));
  for (std::size_t i = 0; i < img.size(); ++i) {
    put_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(img[i])));
  }
  check_stream(out, "writing raw snapshot");
}

ImageF read_snapshot_raw(std::istream& in) {
  std::array<unsigned char, 12> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  if (in.gcount() != static_cast<std::streamsize>(header.size())) {
    throw ParseError("raw snapshot truncated before end of header");
  }
  if (std::memcmp(header.data(), "EVCR", 4) != 0) {
    throw ParseError("bad raw snapshot magic (expected EVCR)");
  }
  const std::uint32_t w = get_u32_le(header.data() + 4);
  const std::uint32_t h = get_u32_le(header.data() + 8);
  if (w == 0 || h == 0 || w > (1u << 16) || h > (1u << 16)) {
    throw ParseError("raw snapshot has implausible geometry " + std::to_string(w) + "x" +
                     std::to_string(h));
  }
  ImageF img(static_cast<int>(w), static_cast<int>(h));
  std::vector<unsigned char> payload(img.size() * 4);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (in.gcount() != static_cast<std::streamsize>(payload.size())) {
    throw ParseError("raw snapshot payload truncated");
  }
  for (std::size_t i = 0; i < img.size(); ++i) {
    img[i] = std::bit_cast<float>(get_u32_le(payload.data() + 4 * i));
  }
  return img;
}

void write_snapshot_raw_file(const std::string& path, const ImageF& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot create '" + path + "'");
  write_snapshot_raw(img, out);
}

ImageF read_snapshot_raw_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_snapshot_raw(in);
}

void write_snapshot_pgm_file(const std::string& path, const ImageF& img, double lo, double hi) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot create '" + path + "'");
  write_snapshot_pgm(img, out, lo, hi);
}

}  // namespace evconv
