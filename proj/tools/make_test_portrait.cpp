// Regenerates the bundled test portrait, masks and landmark sequence.
#include <filesystem>
#include <iostream>

#include "vecanim/portrait.hpp"

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : "data";
  try {
    std::filesystem::create_directories(dir);
    const vecanim::TestPortrait p = vecanim::make_test_portrait();
    vecanim::save_image(p.image, dir / "portrait.png");
    vecanim::save_mask(p.fore_mask, dir / "fore_mask.png");
    vecanim::save_mask(p.local_mask, dir / "local_mask.png");
    vecanim::save_landmarks(p.landmarks, dir / "landmarks.json");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cout << "wrote test portrait to " << dir.string() << "\n";
  return 0;
}
