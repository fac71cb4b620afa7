#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "crackdet/dataset.hpp"
#include "crackdet/image.hpp"
#include "crackdet/rng.hpp"

namespace testutil {

namespace fs = std::filesystem;
using crackdet::ImageU8;

// Unique scratch directory removed on destruction.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("crackdet_" + tag + "_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

// Textured patch; cracked ones carry a dark jagged diagonal line.
inline ImageU8 make_patch(uint64_t seed, bool crack, int side = 224) {
  crackdet::Rng rng(seed);
  ImageU8 img;
  img.height = img.width = side;
  img.pixels.resize(static_cast<size_t>(side) * side * 3);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const int base = 150 + static_cast<int>(rng.uniform_int(60));
      img.at(y, x, 0) = static_cast<uint8_t>(base);
      img.at(y, x, 1) = static_cast<uint8_t>(std::max(0, base - 10));
      img.at(y, x, 2) = static_cast<uint8_t>(std::max(0, base - 25));
    }
  }
  if (crack) {
    double cx = side * 0.1 + rng.uniform() * side * 0.2;
    for (int y = 4; y < side - 4; ++y) {
      cx += rng.uniform(-1.5, 2.5);
      const int ix = std::clamp(static_cast<int>(cx), 2, side - 3);
      for (int dx = -2; dx <= 2; ++dx) {
        for (int c = 0; c < 3; ++c) img.at(y, ix + dx, c) = static_cast<uint8_t>(10 + dx * 3 + 6);
      }
    }
  }
  return img;
}

// Writes a <site>/<Crack|No_crack>/ tree with the given per-(site,label)
// counts: {naillac_crack, naillac_nc, stn_crack, stn_nc, rand_crack, rand_nc}.
inline void write_dataset_tree(const fs::path& root, const std::array<int, 6>& n,
                               int side = 32) {
  const char* sites[3] = {"Naillac", "StNikolaos", "Random"};
  uint64_t seed = 1;
  for (int s = 0; s < 3; ++s) {
    for (int l = 0; l < 2; ++l) {
      const fs::path dir = root / sites[s] / (l == 0 ? "Crack" : "No_crack");
      fs::create_directories(dir);
      const int count = n[static_cast<size_t>(s * 2 + l)];
      for (int i = 0; i < count; ++i) {
        const ImageU8 img = make_patch(seed++, l == 0, side);
        crackdet::save_image(dir / ("img_" + std::to_string(i) + ".png"), img);
      }
    }
  }
}

inline std::array<int, 6> table1_counts() { return {22, 14, 8, 16, 26, 12}; }

}  // namespace testutil
