#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "evconv/types.hpp"

namespace evconv {

// Parses one "t x y p" record, p in {0,1}. Throws ParseError quoting the line.
Event parse_event_line(std::string_view line);

// Shortest text form that reparses to the identical Event.
std::string format_event_line(const Event& e);

struct ReadOptions {
  bool strict_order = true;
};

// Reads a whole event text stream. Blank lines and '#' comments are skipped.
// Throws BoundsError for pixels outside geom and, under strict_order,
// TemporalOrderError on a timestamp regression. Both name the event index.
std::vector<Event> read_event_stream(std::istream& in, const SensorGeometry& geom,
                                     ReadOptions opts = {});
std::vector<Event> read_event_file(const std::string& path, const SensorGeometry& geom,
                                   ReadOptions opts = {});

void write_event_stream(std::ostream& out, const std::vector<Event>& events);
void write_event_file(const std::string& path, const std::vector<Event>& events);

// Binary PGM (P5, maxval 255). v maps to round(255 * clamp((v-lo)/(hi-lo), 0, 1)),
// ties rounding up.
void write_snapshot_pgm(const ImageF& img, std::ostream& out, double lo, double hi);
unsigned char pgm_level(double v, double lo, double hi);

// "EVCR" magic, u32 width, u32 height, then width*height f32, all little-endian.
void write_snapshot_raw(const ImageF& img, std::ostream& out);
ImageF read_snapshot_raw(std::istream& in);

void write_snapshot_raw_file(const std::string& path, const ImageF& img);
ImageF read_snapshot_raw_file(const std::string& path);
void write_snapshot_pgm_file(const std::string& path, const ImageF& img, double lo, double hi);

}  // namespace evconv
