#include "iifcn/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "iifcn/png_io.hpp"
#include "iifcn/rng.hpp"

namespace fs = std::filesystem;

namespace iifcn {

namespace {

const std::string kMaskSuffix = "_segmentation";

// Masks may arrive as RGB scans; collapse when the channels agree.
bool collapse_mask(const ImageU8& in, ImageU8& out, std::string& why) {
    if (in.channels == 1) {
        out = in;
    } else {
        out = ImageU8(in.h, in.w, 1);
        for (int64_t y = 0; y < in.h; ++y)
            for (int64_t x = 0; x < in.w; ++x) {
                uint8_t r = in.at(y, x, 0);
                if (r != in.at(y, x, 1) || r != in.at(y, x, 2)) {
                    why = "mask is not grayscale";
                    return false;
                }
                out.at(y, x, 0) = r;
            }
    }
    for (uint8_t v : out.pixels)
        if (v != 0 && v != 255) {
            why = "mask holds value " + std::to_string(int(v)) + ", expected only 0 and 255";
            return false;
        }
    return true;
}

} // namespace

Dataset load_dataset(const std::string& dir, std::vector<std::string>* diagnostics) {
    if (!fs::is_directory(dir))
        throw std::invalid_argument("load_dataset: " + dir + " is not a directory");

    std::vector<std::string> images, masks;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file() || e.path().extension() != ".png") continue;
        std::string stem = e.path().stem().string();
        if (stem.size() > kMaskSuffix.size() &&
            stem.compare(stem.size() - kMaskSuffix.size(), kMaskSuffix.size(), kMaskSuffix) == 0)
            masks.push_back(stem.substr(0, stem.size() - kMaskSuffix.size()));
        else
            images.push_back(stem);
    }
    std::sort(images.begin(), images.end());
    std::sort(masks.begin(), masks.end());

    std::vector<std::string> problems;
    Dataset ds;
    ds.manifest.root = dir;

    for (const std::string& id : images) {
        ds.manifest.candidates++;
        std::string img_path = (fs::path(dir) / (id + ".png")).string();
        std::string mask_path = (fs::path(dir) / (id + kMaskSuffix + ".png")).string();
        if (!fs::exists(mask_path)) {
            problems.push_back(img_path + ": missing mask " + id + kMaskSuffix + ".png");
            continue;
        }
        SamplePair pair;
        pair.id = id;
        try {
            pair.image = read_png(img_path);
        } catch (const std::exception& e) {
            problems.push_back(img_path + ": " + e.what());
            continue;
        }
        if (pair.image.channels != 3) {
            problems.push_back(img_path + ": image must be 3-channel");
            continue;
        }
        ImageU8 raw_mask;
        try {
            raw_mask = read_png(mask_path);
        } catch (const std::exception& e) {
            problems.push_back(mask_path + ": " + e.what());
            continue;
        }
        std::string why;
        if (!collapse_mask(raw_mask, pair.mask, why)) {
            problems.push_back(mask_path + ": " + why);
            continue;
        }
        if (pair.mask.h != pair.image.h || pair.mask.w != pair.image.w) {
            problems.push_back(mask_path + ": size " + std::to_string(pair.mask.h) + "x" +
                               std::to_string(pair.mask.w) + " does not match image " +
                               std::to_string(pair.image.h) + "x" + std::to_string(pair.image.w));
            continue;
        }
        ds.manifest.entries.push_back({img_path, mask_path, id});
        ds.samples.push_back(std::move(pair));
    }
    for (const std::string& id : masks) {
        if (std::binary_search(images.begin(), images.end(), id)) continue;
        ds.manifest.candidates++;
        problems.push_back((fs::path(dir) / (id + kMaskSuffix + ".png")).string() +
                           ": mask has no image " + id + ".png");
    }

    if (diagnostics) {
        diagnostics->insert(diagnostics->end(), problems.begin(), problems.end());
    } else if (!problems.empty()) {
        std::string msg = "load_dataset: " + std::to_string(problems.size()) + " problem(s):";
        for (const auto& p : problems) msg += "\n  " + p;
        throw std::invalid_argument(msg);
    }
    return ds;
}

namespace {

struct Ellipse {
    real cy, cx, a, b, cs, sn; // semi-axes a (x-direction), b (y-direction)
};

bool inside(const Ellipse& e, int64_t y, int64_t x) {
    real dy = real(y) - e.cy, dx = real(x) - e.cx;
    real u = e.cs * dx + e.sn * dy;
    real v = -e.sn * dx + e.cs * dy;
    return (u * u) / (e.a * e.a) + (v * v) / (e.b * e.b) <= 1.0;
}

} // namespace

std::vector<SamplePair> synth_dataset(int64_t n, int64_t h, int64_t w, uint64_t seed) {
    if (n < 0) throw std::invalid_argument("synth_dataset: n must be nonnegative");
    if (h < 16 || w < 16) throw std::invalid_argument("synth_dataset: size too small");
    std::vector<SamplePair> out;
    out.reserve(static_cast<size_t>(n));

    for (int64_t idx = 0; idx < n; ++idx) {
        Rng rng = Rng::stream(seed, 0xB10B, uint64_t(idx), 0);
        SamplePair s;
        s.id = "synth_" + std::to_string(idx);
        s.image = ImageU8(h, w, 3);
        s.mask = ImageU8(h, w, 1);

        // Light background with a coarse 4x4 brightness field.
        real base[3] = {rng.uniform(170, 210), rng.uniform(140, 180), rng.uniform(120, 160)};
        const int64_t G = 4;
        std::vector<real> grid(static_cast<size_t>(G * G));
        for (auto& g : grid) g = rng.uniform(-14, 14);
        auto field = [&](int64_t y, int64_t x) {
            real fy = (real(y) + 0.5) / real(h) * (G - 1);
            real fx = (real(x) + 0.5) / real(w) * (G - 1);
            int64_t y0 = std::min<int64_t>(int64_t(fy), G - 2);
            int64_t x0 = std::min<int64_t>(int64_t(fx), G - 2);
            real wy = fy - real(y0), wx = fx - real(x0);
            return (1 - wy) * ((1 - wx) * grid[static_cast<size_t>(y0 * G + x0)] + wx * grid[static_cast<size_t>(y0 * G + x0 + 1)]) +
                   wy * ((1 - wx) * grid[static_cast<size_t>((y0 + 1) * G + x0)] + wx * grid[static_cast<size_t>((y0 + 1) * G + x0 + 1)]);
        };

        int64_t count = 1 + int64_t(rng.uniform_int(3));
        std::vector<Ellipse> ellipses;
        std::vector<std::array<real, 3>> colors;
        real min_side = real(std::min(h, w));
        for (int64_t k = 0; k < count; ++k) {
            Ellipse e;
            e.a = std::max(3.0, rng.uniform(0.10, 0.25) * min_side);
            e.b = std::max(3.0, rng.uniform(0.10, 0.25) * min_side);
            real rad = rng.uniform(0.0, std::acos(-1.0));
            e.cs = std::cos(rad);
            e.sn = std::sin(rad);
            real margin = std::max(e.a, e.b) + 1;
            e.cy = rng.uniform(margin, real(h) - 1 - margin);
            e.cx = rng.uniform(margin, real(w) - 1 - margin);
            ellipses.push_back(e);
            colors.push_back({rng.uniform(40, 90), rng.uniform(30, 70), rng.uniform(25, 65)});
        }

        for (int64_t y = 0; y < h; ++y)
            for (int64_t x = 0; x < w; ++x) {
                int64_t hit = -1;
                for (size_t k = 0; k < ellipses.size(); ++k)
                    if (inside(ellipses[k], y, x)) {
                        hit = int64_t(k);
                        break;
                    }
                real jitter = rng.uniform(-8, 8);
                for (int64_t c = 0; c < 3; ++c) {
                    real v = hit < 0 ? base[c] + field(y, x) : colors[static_cast<size_t>(hit)][static_cast<size_t>(c)];
                    s.image.at(y, x, c) = clamp_u8(v + jitter);
                }
                s.mask.at(y, x, 0) = hit < 0 ? 0 : 255;
            }
        out.push_back(std::move(s));
    }
    return out;
}

void save_pair(const std::string& dir, const SamplePair& pair) {
    pair.validate();
    fs::create_directories(dir);
    write_png((fs::path(dir) / (pair.id + ".png")).string(), pair.image);
    write_png((fs::path(dir) / (pair.id + kMaskSuffix + ".png")).string(), pair.mask);
}

} // namespace iifcn
