#pragma once

#include "vecanim/animate.hpp"
#include "vecanim/raster.hpp"

namespace vecanim {

// Procedural 128x128 cartoon face with matching semantic masks and a
// 10-frame landmark sequence.
struct TestPortrait {
  RasterImage image;
  // Head, hair, neck and shoulders, excluding the local regions.
  Mask fore_mask;
  // Eyes and mouth interior.
  Mask local_mask;
  LandmarkSequence landmarks;
};

inline constexpr int kPortraitSize = 128;
// Frame indices into TestPortrait::landmarks.frames.
inline constexpr int kJawOpenFrame = 3;
inline constexpr int kBlinkFrame = 7;

TestPortrait make_test_portrait();

// Pixel box (inclusive min, exclusive max) around the rest-pose mouth and chin.
struct PixelBox {
  int x0, y0, x1, y1;
};
PixelBox mouth_region(const LandmarkSequence& landmarks, int width, int height);

}  // namespace vecanim
