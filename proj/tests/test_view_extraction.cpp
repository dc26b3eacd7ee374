#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "evidfuse/errors.hpp"
#include "evidfuse/rng.hpp"
#include "evidfuse/view_extraction.hpp"
#include "test_support.hpp"

using namespace evidfuse;

namespace {

RasterImage noisy_disk_image(std::size_t size, SplitMix64& rng) {
    RasterImage img = RasterImage::zeros(size, size);
    const double cx = static_cast<double>(size) * 0.55;
    const double cy = static_cast<double>(size) * 0.45;
    const double radius = static_cast<double>(size) * 0.3;
    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
            const double dx = static_cast<double>(x) - cx;
            const double dy = static_cast<double>(y) - cy;
            const double inside = std::hypot(dx, dy) < radius ? 400.0 : 20.0;
            img.at(y, x) = inside + rng.uniform(0.0, 10.0);
        }
    }
    return img;
}

// Independent bilinear interpolation used as the resampling oracle.
double bilinear_at(const RasterImage& img, double sy, double sx) {
    sy = std::clamp(sy, 0.0, static_cast<double>(img.height - 1));
    sx = std::clamp(sx, 0.0, static_cast<double>(img.width - 1));
    const auto y0 = static_cast<std::size_t>(sy);
    const auto x0 = static_cast<std::size_t>(sx);
    const std::size_t y1 = std::min(y0 + 1, img.height - 1);
    const std::size_t x1 = std::min(x0 + 1, img.width - 1);
    const double fy = sy - static_cast<double>(y0);
    const double fx = sx - static_cast<double>(x0);
    return img.at(y0, x0) * (1 - fy) * (1 - fx) + img.at(y0, x1) * (1 - fy) * fx +
           img.at(y1, x0) * fy * (1 - fx) + img.at(y1, x1) * fy * fx;
}

} // namespace

TEST_CASE("resample at the target spacing is the identity") {
    SplitMix64 rng(91);
    RasterImage img = RasterImage::zeros(64, 48);
    img.spacing_x = 1.5;
    img.spacing_y = 1.5;
    for (double& p : img.pixels) p = rng.uniform(0.0, 100.0);
    const RasterImage out = resample_bilinear(img, 1.5, 1.5);
    REQUIRE(out.width == img.width);
    REQUIRE(out.height == img.height);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        CHECK(std::abs(out.pixels[i] - img.pixels[i]) <= 1e-12);
    }
}

TEST_CASE("resampling a ramp matches the brute-force bilinear oracle") {
    RasterImage img = RasterImage::zeros(40, 40);
    img.spacing_x = 2.0;
    img.spacing_y = 2.0;
    for (std::size_t y = 0; y < 40; ++y) {
        for (std::size_t x = 0; x < 40; ++x) {
            img.at(y, x) = 3.0 * static_cast<double>(x) + 0.5 * static_cast<double>(y);
        }
    }
    const RasterImage out = resample_bilinear(img, 1.5, 1.5);
    CHECK(out.width == 53); // round(40 * 2.0 / 1.5)
    const double ratio = 1.5 / 2.0;
    for (std::size_t y = 0; y < out.height; ++y) {
        for (std::size_t x = 0; x < out.width; ++x) {
            const double sy = (static_cast<double>(y) + 0.5) * ratio - 0.5;
            const double sx = (static_cast<double>(x) + 0.5) * ratio - 0.5;
            CHECK(std::abs(out.at(y, x) - bilinear_at(img, sy, sx)) <= 1e-10);
        }
    }
}

TEST_CASE("center crop and pad") {
    RasterImage img = RasterImage::zeros(10, 10);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<double>(i);
    const RasterImage cropped = center_crop_pad(img, 6);
    CHECK(cropped.at(0, 0) == img.at(2, 2));
    CHECK(cropped.at(5, 5) == img.at(7, 7));

    const RasterImage padded = center_crop_pad(img, 14);
    CHECK(padded.at(0, 0) == 0.0);
    CHECK(padded.at(2, 2) == img.at(0, 0));
    CHECK(padded.at(11, 11) == img.at(9, 9));
}

TEST_CASE("z-score over the foreground") {
    SplitMix64 rng(92);
    RasterImage img = noisy_disk_image(64, rng);
    const double threshold = otsu_threshold(img);
    const RasterImage z = zscore_foreground(img, threshold);

    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        if (img.pixels[i] > threshold) {
            sum += z.pixels[i];
            sq += z.pixels[i] * z.pixels[i];
            ++n;
        }
    }
    const double mean = sum / static_cast<double>(n);
    const double sd = std::sqrt(sq / static_cast<double>(n) - mean * mean);
    CHECK(std::abs(mean) <= 1e-6);
    CHECK(std::abs(sd - 1.0) <= 1e-6);
}

TEST_CASE("degenerate images raise zero-std errors") {
    RasterImage constant = RasterImage::zeros(16, 16);
    for (double& p : constant.pixels) p = 7.0;
    CHECK_THROWS_AS(preprocess(constant), domain_error);
    CHECK_THROWS_AS(zscore_foreground(constant, 10.0), domain_error); // empty foreground
    CHECK_THROWS_AS(zscore_foreground(constant, 5.0), domain_error);  // zero std
}

TEST_CASE("preprocess resamples, crops, and normalizes") {
    SplitMix64 rng(93);
    RasterImage img = noisy_disk_image(128, rng);
    img.spacing_x = 3.0;
    img.spacing_y = 3.0;
    const RasterImage out = preprocess(img);
    CHECK(out.width == 256);
    CHECK(out.height == 256);
    CHECK(out.spacing_x == 1.5);
}

TEST_CASE("segmentation keeps the bright square exactly") {
    RasterImage img = RasterImage::zeros(32, 32);
    for (std::size_t y = 8; y < 16; ++y) {
        for (std::size_t x = 10; x < 18; ++x) img.at(y, x) = 100.0;
    }
    const BinaryMask mask = segment_foreground(img, 50.0);
    CHECK(mask.count() == 64);
    for (std::size_t y = 0; y < 32; ++y) {
        for (std::size_t x = 0; x < 32; ++x) {
            CHECK(mask.at(y, x) == (y >= 8 && y < 16 && x >= 10 && x < 18));
        }
    }
}

TEST_CASE("segmentation keeps only the largest of two blobs") {
    RasterImage img = RasterImage::zeros(32, 32);
    for (std::size_t y = 2; y < 8; ++y)
        for (std::size_t x = 2; x < 8; ++x) img.at(y, x) = 100.0; // 36 px
    for (std::size_t y = 20; y < 24; ++y)
        for (std::size_t x = 20; x < 24; ++x) img.at(y, x) = 100.0; // 16 px
    const BinaryMask mask = segment_foreground(img, 50.0);
    CHECK(mask.count() == 36);
    CHECK(mask.at(3, 3));
    CHECK(!mask.at(21, 21));
}

TEST_CASE("empty segmentation is an error") {
    const RasterImage img = RasterImage::zeros(8, 8);
    CHECK_THROWS_AS(segment_foreground(img, 5.0), domain_error);
}

TEST_CASE("centroid fixtures") {
    // Centered square.
    RasterImage img = RasterImage::zeros(21, 21);
    for (std::size_t y = 8; y < 13; ++y)
        for (std::size_t x = 8; x < 13; ++x) img.at(y, x) = 1.0;
    const auto [cx, cy] = centroid(segment_foreground(img, 0.5));
    CHECK(cx == 10);
    CHECK(cy == 10);

    // Single pixel.
    RasterImage dot = RasterImage::zeros(9, 9);
    dot.at(2, 6) = 1.0;
    const auto [px, py] = centroid(segment_foreground(dot, 0.5));
    CHECK(px == 6);
    CHECK(py == 2);

    // L-shape against the coordinate-mean oracle.
    RasterImage ell = RasterImage::zeros(16, 16);
    double sx = 0.0, sy = 0.0, n = 0.0;
    for (std::size_t y = 2; y < 10; ++y) {
        ell.at(y, 2) = 1.0;
        sx += 2.0; sy += static_cast<double>(y); n += 1.0;
    }
    for (std::size_t x = 3; x < 8; ++x) {
        ell.at(9, x) = 1.0;
        sx += static_cast<double>(x); sy += 9.0; n += 1.0;
    }
    const auto [lx, ly] = centroid(segment_foreground(ell, 0.5));
    CHECK(lx == static_cast<std::size_t>(std::lround(sx / n)));
    CHECK(ly == static_cast<std::size_t>(std::lround(sy / n)));
}

TEST_CASE("view extraction defaults give nine bit-exact views") {
    SplitMix64 rng(94);
    RasterImage img = RasterImage::zeros(256, 256);
    for (double& p : img.pixels) p = rng.uniform(0.0, 1.0);
    const ViewSet set = extract_views_at(img, 128, 128, 160, 96, 32);
    REQUIRE(set.locals.size() == 9);
    CHECK(set.global.width == 160);
    CHECK(set.geometry.origins.size() == 9);

    for (std::size_t v = 0; v < 9; ++v) {
        const auto [ox, oy] = set.geometry.origins[v];
        for (std::size_t y = 0; y < 96; ++y) {
            for (std::size_t x = 0; x < 96; ++x) {
                REQUIRE(set.locals[v].at(y, x) == set.global.at(oy + y, ox + x)); // bit exact
            }
        }
    }
}

TEST_CASE("view grid geometry formula over fuzzed parameters") {
    SplitMix64 rng(95);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t stride = 1 + rng.below(16);
        const std::size_t steps = rng.below(5);
        const std::size_t window = 1 + rng.below(32);
        const std::size_t roi = window + steps * stride;
        RasterImage img = RasterImage::zeros(roi + rng.below(40), roi + rng.below(40));
        const ViewSet set = extract_views_at(img, img.width / 2, img.height / 2, roi, window,
                                             stride);
        CHECK(set.locals.size() == (steps + 1) * (steps + 1));
        for (const auto& view : set.locals) {
            CHECK(view.width == window);
            CHECK(view.height == window);
        }
    }
}

TEST_CASE("roi == window yields exactly the ROI") {
    RasterImage img = RasterImage::zeros(64, 64);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<double>(i);
    const ViewSet set = extract_views_at(img, 32, 32, 40, 40, 8);
    REQUIRE(set.locals.size() == 1);
    CHECK(set.locals[0].pixels == set.global.pixels);
}

TEST_CASE("roi=128 window=96 stride=32 gives four views at origins {0,32}^2") {
    RasterImage img = RasterImage::zeros(200, 200);
    const ViewSet set = extract_views_at(img, 100, 100, 128, 96, 32);
    REQUIRE(set.locals.size() == 4);
    const std::vector<std::pair<std::size_t, std::size_t>> expect{
        {0, 0}, {32, 0}, {0, 32}, {32, 32}};
    CHECK(set.geometry.origins == expect);
}

TEST_CASE("invalid geometry is rejected") {
    RasterImage img = RasterImage::zeros(200, 200);
    CHECK_THROWS_AS(extract_views_at(img, 100, 100, 96, 160, 32), domain_error); // window > roi
    CHECK_THROWS_AS(extract_views_at(img, 100, 100, 160, 96, 48), domain_error); // not divisible
    RasterImage small = RasterImage::zeros(100, 100);
    CHECK_THROWS_AS(extract_views_at(small, 50, 50, 160, 96, 32), domain_error); // roi too big
}

TEST_CASE("ROI is clamped near image borders") {
    RasterImage img = RasterImage::zeros(200, 200);
    const ViewSet set = extract_views_at(img, 5, 195, 160, 96, 32);
    CHECK(set.geometry.roi_x0 == 0);
    CHECK(set.geometry.roi_y0 == 40);
}

TEST_CASE("full pipeline on a synthetic liver-like image") {
    SplitMix64 rng(96);
    RasterImage img = noisy_disk_image(256, rng);
    const ViewSet set = extract_views(img, 160, 96, 32);
    CHECK(set.locals.size() == 9);
    // Deterministic: same input gives identical bytes.
    const ViewSet again = extract_views(img, 160, 96, 32);
    for (std::size_t v = 0; v < 9; ++v) {
        CHECK(set.locals[v].pixels == again.locals[v].pixels);
    }
    CHECK(set.geometry.roi_x0 == again.geometry.roi_x0);
}

TEST_CASE("PGM round trip with spacing sidecar") {
    SplitMix64 rng(97);
    RasterImage img = RasterImage::zeros(24, 31);
    img.spacing_x = 2.0;
    img.spacing_y = 1.25;
    for (double& p : img.pixels) p = rng.uniform(-3.0, 3.0);

    const auto dir = std::filesystem::temp_directory_path();
    const auto path = dir / "evidfuse_pgm_test.pgm";
    const PgmScale scale = write_pgm16(path, img);
    const RasterImage back = read_pgm(path);
    CHECK(back.width == img.width);
    CHECK(back.height == img.height);
    CHECK(back.spacing_x == img.spacing_x);
    CHECK(back.spacing_y == img.spacing_y);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        const double restored = back.pixels[i] * scale.scale + scale.offset;
        CHECK(std::abs(restored - img.pixels[i]) <= scale.scale); // quantization bound
    }
    std::filesystem::remove(path);
    std::filesystem::remove(path.string() + ".spacing");
}

TEST_CASE("8-bit PGM input without sidecar defaults to 1.0 mm") {
    const auto path = std::filesystem::temp_directory_path() / "evidfuse_pgm8_test.pgm";
    std::string bytes = "P5\n# comment line\n4 2\n255\n";
    for (unsigned char v : {0, 32, 64, 96, 128, 160, 192, 255}) {
        bytes.push_back(static_cast<char>(v));
    }
    {
        std::ofstream out(path, std::ios::binary);
        out << bytes;
    }
    const RasterImage img = read_pgm(path);
    CHECK(img.width == 4);
    CHECK(img.height == 2);
    CHECK(img.spacing_x == 1.0);
    CHECK(img.at(0, 0) == 0.0);
    CHECK(img.at(1, 3) == 255.0);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(read_pgm(path), io_error); // now gone
}

TEST_CASE("geometry manifest JSON shape") {
    RasterImage img = RasterImage::zeros(200, 200);
    const ViewSet set = extract_views_at(img, 100, 100, 128, 96, 32);
    const auto j = geometry_to_json(set.geometry);
    CHECK(j.at("roi") == 128);
    CHECK(j.at("origins").size() == 4);
    CHECK(j.at("origins")[1].at("x") == 32);
}
