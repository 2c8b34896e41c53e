#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "evconv/types.hpp"

namespace evconv {

struct Frame {
  double t = 0.0;
  ImageF intensity;  // linear intensity, strictly positive
};

struct FrameSequence {
  SensorGeometry geom;
  std::vector<Frame> frames;

  void validate() const;
};

// Converts frames to events with an ideal contrast-threshold pixel model.
// Log intensity is linear in time between frames; each pixel keeps a reference
// level starting at its frame-0 log intensity, emits an event whenever the
// signal reaches reference +/- c (at the interpolated crossing time) and moves
// the reference by exactly +/- c. Output sorted by (t, y, x, polarity).
std::vector<Event> generate_events(const FrameSequence& seq, ContrastThreshold c);

// Procedural sequences with known ground truth:
//   ramp                      log intensity rising by 1 over the sequence at every pixel
//   translating_checkerboard  8 px squares shifting +1 px in x per frame
//   gaussian_blob_orbit       bright Gaussian blob circling the sensor centre once
// Frames are evenly spaced over [0, duration].
FrameSequence make_test_sequence(std::string_view name, const SensorGeometry& geom, int n_frames,
                                 double duration);
const std::vector<std::string>& test_sequence_names();

inline constexpr int kCheckerSquare = 8;

// Square-corner crossings of the checkerboard at a given frame, as the pixel
// just below-right of each crossing. Interior crossings only.
std::vector<Pixel> checkerboard_crossings(const SensorGeometry& geom, int frame_index);

// Log intensity at time t under the same linear-in-time interpolation the
// event generator uses. t is clamped to the sequence span.
ImageF log_intensity_at(const FrameSequence& seq, double t);

// Exact response of the high-pass filter s/(s+alpha) driven by the
// interpolated log intensity, started from zero at the first frame.
ImageF high_pass_log_at(const FrameSequence& seq, double alpha, double t);

}  // namespace evconv
