#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

namespace evidfuse {

// Single-channel raster with physical pixel spacing in mm/pixel.
struct RasterImage {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> pixels; // row-major
    double spacing_x = 1.0;
    double spacing_y = 1.0;

    static RasterImage zeros(std::size_t h, std::size_t w);
    void validate() const;
    double at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
    double& at(std::size_t y, std::size_t x) { return pixels[y * width + x]; }
};

struct BinaryMask {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> data;

    bool at(std::size_t y, std::size_t x) const { return data[y * width + x] != 0; }
    std::size_t count() const;
};

struct ViewGeometry {
    std::size_t roi = 160;
    std::size_t window = 96;
    std::size_t stride = 32;
    std::size_t roi_x0 = 0; // ROI origin in the source image
    std::size_t roi_y0 = 0;
    std::vector<std::pair<std::size_t, std::size_t>> origins; // (x, y) relative to the ROI
};

struct ViewSet {
    std::vector<RasterImage> locals; // row-major over the window grid
    RasterImage global;              // the full ROI
    ViewGeometry geometry;
};

// Histogram Otsu threshold (256 bins over the intensity range).
double otsu_threshold(const RasterImage& img);

// Bilinear resampling onto the target spacing; pixel centers are aligned.
RasterImage resample_bilinear(const RasterImage& img, double target_sx, double target_sy);

// Center crop, zero-padding where the source is smaller.
RasterImage center_crop_pad(const RasterImage& img, std::size_t size);

// Z-score over pixels above `threshold`, applied to the whole image.
// All-equal or empty foregrounds raise a zero-std error.
RasterImage zscore_foreground(const RasterImage& img, double threshold);

// Resample to 1.5 mm, center-crop/pad to 256, z-score over the foreground
// (threshold defaults to Otsu).
RasterImage preprocess(const RasterImage& img, std::optional<double> threshold = {},
                       double target_spacing = 1.5, std::size_t crop = 256);

// pixels > threshold, then the largest 4-connected component.
BinaryMask segment_foreground(const RasterImage& img, double threshold);

// Mean foreground coordinate, rounded to the nearest pixel. Returns (cx, cy).
std::pair<std::size_t, std::size_t> centroid(const BinaryMask& mask);

// Square ROI centered at (cx, cy) (clamped inside the image), cut into
// ((roi-window)/stride + 1)^2 overlapping windows; the defaults give 9.
ViewSet extract_views_at(const RasterImage& img, std::size_t cx, std::size_t cy,
                         std::size_t roi = 160, std::size_t window = 96,
                         std::size_t stride = 32);

// Full pipeline: segment (Otsu unless given), centroid, extract_views_at.
ViewSet extract_views(const RasterImage& img, std::size_t roi = 160, std::size_t window = 96,
                      std::size_t stride = 32, std::optional<double> threshold = {});

nlohmann::ordered_json geometry_to_json(const ViewGeometry& geometry);

// PGM (P5) input, 8- or 16-bit, with an optional `<path>.spacing` sidecar
// containing `spacing=<sx>,<sy>`; a missing sidecar means 1.0 mm and logs a
// warning.
RasterImage read_pgm(const std::filesystem::path& path);

// 16-bit PGM output; float pixels are affinely mapped onto [0, 65535] and the
// mapping is returned so the manifest can record it. A spacing sidecar is
// written next to the file.
struct PgmScale {
    double offset = 0.0; // pixel value mapped to 0
    double scale = 1.0;  // pixel units per grey level
};
PgmScale write_pgm16(const std::filesystem::path& path, const RasterImage& img);

} // namespace evidfuse
