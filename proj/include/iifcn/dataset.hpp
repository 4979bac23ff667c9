#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iifcn/image.hpp"

namespace iifcn {

struct DatasetManifest {
    struct Entry {
        std::string image_path, mask_path, id;
    };
    std::string root;
    std::vector<Entry> entries;
    int64_t candidates = 0; // files considered: images plus orphan masks
};

struct Dataset {
    DatasetManifest manifest;
    std::vector<SamplePair> samples;
};

// Pairs `<id>.png` with `<id>_segmentation.png`, decodes and validates
// (masks strictly {0,255}, sizes equal). With `diagnostics` null every
// problem aborts via std::invalid_argument listing all offenders; otherwise
// problems are appended there and the valid pairs are returned. Always:
// pair count + diagnostic count = candidate count.
Dataset load_dataset(const std::string& dir, std::vector<std::string>* diagnostics = nullptr);

// n textured images with 1-3 filled ellipse "lesions" of distinct dark
// color over a light low-frequency background; the mask is the exact
// ellipse union and never empty. Deterministic per seed.
std::vector<SamplePair> synth_dataset(int64_t n, int64_t h, int64_t w, uint64_t seed);

// Writes `<id>.png` and `<id>_segmentation.png` into dir.
void save_pair(const std::string& dir, const SamplePair& pair);

} // namespace iifcn
