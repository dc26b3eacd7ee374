#include "evidfuse/view_extraction.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "evidfuse/csv.hpp"
#include "evidfuse/errors.hpp"
#include "evidfuse/log.hpp"

namespace evidfuse {

RasterImage RasterImage::zeros(std::size_t h, std::size_t w) {
    RasterImage img;
    img.height = h;
    img.width = w;
    img.pixels.assign(h * w, 0.0);
    img.validate();
    return img;
}

void RasterImage::validate() const {
    if (height < 1 || width < 1) throw domain_error("raster dimensions must be >= 1");
    if (pixels.size() != height * width) throw domain_error("raster buffer size mismatch");
    if (!(spacing_x > 0.0) || !(spacing_y > 0.0)) throw domain_error("spacing must be > 0");
    for (double p : pixels) {
        if (!std::isfinite(p)) throw domain_error("raster pixels must be finite");
    }
}

std::size_t BinaryMask::count() const {
    std::size_t n = 0;
    for (std::uint8_t v : data) n += (v != 0);
    return n;
}

double otsu_threshold(const RasterImage& img) {
    img.validate();
    const auto [lo_it, hi_it] = std::minmax_element(img.pixels.begin(), img.pixels.end());
    const double lo = *lo_it, hi = *hi_it;
    if (lo == hi) throw domain_error("Otsu threshold undefined for a constant image");

    constexpr std::size_t kBins = 256;
    std::vector<std::size_t> hist(kBins, 0);
    const double scale = static_cast<double>(kBins) / (hi - lo);
    for (double p : img.pixels) {
        auto bin = static_cast<std::size_t>((p - lo) * scale);
        if (bin >= kBins) bin = kBins - 1;
        ++hist[bin];
    }

    const double total = static_cast<double>(img.pixels.size());
    double sum_all = 0.0;
    for (std::size_t b = 0; b < kBins; ++b) sum_all += static_cast<double>(b) * hist[b];

    double best_between = -1.0;
    std::size_t best_bin = 0;
    double w0 = 0.0, sum0 = 0.0;
    for (std::size_t b = 0; b + 1 < kBins; ++b) {
        w0 += static_cast<double>(hist[b]);
        if (w0 == 0.0) continue;
        const double w1 = total - w0;
        if (w1 == 0.0) break;
        sum0 += static_cast<double>(b) * hist[b];
        const double mu0 = sum0 / w0;
        const double mu1 = (sum_all - sum0) / w1;
        const double between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (between > best_between) {
            best_between = between;
            best_bin = b;
        }
    }
    // Threshold at the upper edge of the chosen bin, in pixel units.
    return lo + (static_cast<double>(best_bin) + 1.0) / scale;
}

RasterImage resample_bilinear(const RasterImage& img, double target_sx, double target_sy) {
    img.validate();
    if (!(target_sx > 0.0) || !(target_sy > 0.0)) throw domain_error("target spacing must be > 0");

    const std::size_t out_w = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(img.width * img.spacing_x / target_sx)));
    const std::size_t out_h = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(img.height * img.spacing_y / target_sy)));

    RasterImage out = RasterImage::zeros(out_h, out_w);
    out.spacing_x = target_sx;
    out.spacing_y = target_sy;
    const double rx = target_sx / img.spacing_x;
    const double ry = target_sy / img.spacing_y;
    for (std::size_t y = 0; y < out_h; ++y) {
        // Pixel centers: output center (y + 0.5) maps to input coordinate
        // (y + 0.5) * ratio, both measured in pixel units.
        double sy = (static_cast<double>(y) + 0.5) * ry - 0.5;
        sy = std::clamp(sy, 0.0, static_cast<double>(img.height - 1));
        const std::size_t y0 = static_cast<std::size_t>(sy);
        const std::size_t y1 = std::min(y0 + 1, img.height - 1);
        const double fy = sy - static_cast<double>(y0);
        for (std::size_t x = 0; x < out_w; ++x) {
            double sx = (static_cast<double>(x) + 0.5) * rx - 0.5;
            sx = std::clamp(sx, 0.0, static_cast<double>(img.width - 1));
            const std::size_t x0 = static_cast<std::size_t>(sx);
            const std::size_t x1 = std::min(x0 + 1, img.width - 1);
            const double fx = sx - static_cast<double>(x0);
            const double top = img.at(y0, x0) * (1.0 - fx) + img.at(y0, x1) * fx;
            const double bottom = img.at(y1, x0) * (1.0 - fx) + img.at(y1, x1) * fx;
            out.at(y, x) = top * (1.0 - fy) + bottom * fy;
        }
    }
    return out;
}

RasterImage center_crop_pad(const RasterImage& img, std::size_t size) {
    img.validate();
    if (size < 1) throw domain_error("crop size must be >= 1");
    RasterImage out = RasterImage::zeros(size, size);
    out.spacing_x = img.spacing_x;
    out.spacing_y = img.spacing_y;
    const long off_x = (static_cast<long>(img.width) - static_cast<long>(size)) / 2;
    const long off_y = (static_cast<long>(img.height) - static_cast<long>(size)) / 2;
    for (std::size_t y = 0; y < size; ++y) {
        const long sy = static_cast<long>(y) + off_y;
        if (sy < 0 || sy >= static_cast<long>(img.height)) continue;
        for (std::size_t x = 0; x < size; ++x) {
            const long sx = static_cast<long>(x) + off_x;
            if (sx < 0 || sx >= static_cast<long>(img.width)) continue;
            out.at(y, x) = img.at(static_cast<std::size_t>(sy), static_cast<std::size_t>(sx));
        }
    }
    return out;
}

RasterImage zscore_foreground(const RasterImage& img, double threshold) {
    img.validate();
    double sum = 0.0;
    std::size_t n = 0;
    for (double p : img.pixels) {
        if (p > threshold) {
            sum += p;
            ++n;
        }
    }
    if (n == 0) throw domain_error("z-score foreground is empty");
    const double mean = sum / static_cast<double>(n);
    double var = 0.0;
    for (double p : img.pixels) {
        if (p > threshold) var += (p - mean) * (p - mean);
    }
    var /= static_cast<double>(n);
    if (var < 1e-24) throw domain_error("z-score undefined: zero standard deviation");
    const double inv_sd = 1.0 / std::sqrt(var);
    RasterImage out = img;
    for (double& p : out.pixels) p = (p - mean) * inv_sd;
    return out;
}

RasterImage preprocess(const RasterImage& img, std::optional<double> threshold,
                       double target_spacing, std::size_t crop) {
    RasterImage resampled = resample_bilinear(img, target_spacing, target_spacing);
    RasterImage cropped = center_crop_pad(resampled, crop);
    const double t = threshold ? *threshold : otsu_threshold(cropped);
    return zscore_foreground(cropped, t);
}

BinaryMask segment_foreground(const RasterImage& img, double threshold) {
    img.validate();
    BinaryMask above{img.height, img.width,
                     std::vector<std::uint8_t>(img.pixels.size(), 0)};
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        above.data[i] = img.pixels[i] > threshold ? 1 : 0;
    }
    if (above.count() == 0) throw domain_error("segmentation produced an empty mask");

    // Largest 4-connected component by flood fill.
    std::vector<std::int32_t> label(img.pixels.size(), -1);
    std::vector<std::size_t> stack;
    std::vector<std::size_t> component_size;
    for (std::size_t start = 0; start < label.size(); ++start) {
        if (above.data[start] == 0 || label[start] >= 0) continue;
        const auto id = static_cast<std::int32_t>(component_size.size());
        std::size_t size = 0;
        stack.push_back(start);
        label[start] = id;
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            ++size;
            const std::size_t y = p / img.width, x = p % img.width;
            const std::size_t neighbors[4] = {
                y > 0 ? p - img.width : p,
                y + 1 < img.height ? p + img.width : p,
                x > 0 ? p - 1 : p,
                x + 1 < img.width ? p + 1 : p,
            };
            for (std::size_t q : neighbors) {
                if (q != p && above.data[q] != 0 && label[q] < 0) {
                    label[q] = id;
                    stack.push_back(q);
                }
            }
        }
        component_size.push_back(size);
    }
    const auto largest = static_cast<std::int32_t>(std::distance(
        component_size.begin(),
        std::max_element(component_size.begin(), component_size.end())));
    BinaryMask mask{img.height, img.width, std::vector<std::uint8_t>(img.pixels.size(), 0)};
    for (std::size_t i = 0; i < label.size(); ++i) {
        mask.data[i] = label[i] == largest ? 1 : 0;
    }
    return mask;
}

std::pair<std::size_t, std::size_t> centroid(const BinaryMask& mask) {
    double sum_x = 0.0, sum_y = 0.0;
    std::size_t n = 0;
    for (std::size_t y = 0; y < mask.height; ++y) {
        for (std::size_t x = 0; x < mask.width; ++x) {
            if (mask.at(y, x)) {
                sum_x += static_cast<double>(x);
                sum_y += static_cast<double>(y);
                ++n;
            }
        }
    }
    if (n == 0) throw domain_error("centroid of an empty mask");
    const auto cx = static_cast<std::size_t>(std::lround(sum_x / static_cast<double>(n)));
    const auto cy = static_cast<std::size_t>(std::lround(sum_y / static_cast<double>(n)));
    return {cx, cy};
}

namespace {

RasterImage crop(const RasterImage& img, std::size_t x0, std::size_t y0, std::size_t size) {
    RasterImage out = RasterImage::zeros(size, size);
    out.spacing_x = img.spacing_x;
    out.spacing_y = img.spacing_y;
    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
            out.at(y, x) = img.at(y0 + y, x0 + x);
        }
    }
    return out;
}

} // namespace

ViewSet extract_views_at(const RasterImage& img, std::size_t cx, std::size_t cy,
                         std::size_t roi, std::size_t window, std::size_t stride) {
    img.validate();
    if (window < 1 || roi < window) throw domain_error("need 1 <= window <= roi");
    if (roi > img.width || roi > img.height) {
        throw domain_error("ROI of " + std::to_string(roi) + " does not fit in a " +
                           std::to_string(img.width) + "x" + std::to_string(img.height) +
                           " image");
    }
    if (stride < 1) throw domain_error("stride must be >= 1");
    if ((roi - window) % stride != 0) {
        throw domain_error("(roi - window) must be divisible by stride");
    }

    // Clamp so the ROI stays inside the image when the centroid sits near a
    // border.
    const std::size_t half = roi / 2;
    const std::size_t x0 = std::min(cx > half ? cx - half : 0, img.width - roi);
    const std::size_t y0 = std::min(cy > half ? cy - half : 0, img.height - roi);

    ViewSet set;
    set.geometry.roi = roi;
    set.geometry.window = window;
    set.geometry.stride = stride;
    set.geometry.roi_x0 = x0;
    set.geometry.roi_y0 = y0;
    set.global = crop(img, x0, y0, roi);

    const std::size_t per_axis = (roi - window) / stride + 1;
    for (std::size_t gy = 0; gy < per_axis; ++gy) {
        for (std::size_t gx = 0; gx < per_axis; ++gx) {
            const std::size_t ox = gx * stride, oy = gy * stride;
            set.geometry.origins.emplace_back(ox, oy);
            set.locals.push_back(crop(img, x0 + ox, y0 + oy, window));
        }
    }
    return set;
}

ViewSet extract_views(const RasterImage& img, std::size_t roi, std::size_t window,
                      std::size_t stride, std::optional<double> threshold) {
    const double t = threshold ? *threshold : otsu_threshold(img);
    const BinaryMask mask = segment_foreground(img, t);
    const auto [cx, cy] = centroid(mask);
    return extract_views_at(img, cx, cy, roi, window, stride);
}

nlohmann::ordered_json geometry_to_json(const ViewGeometry& geometry) {
    nlohmann::ordered_json origins = nlohmann::ordered_json::array();
    for (const auto& [x, y] : geometry.origins) {
        origins.push_back({{"x", x}, {"y", y}});
    }
    return nlohmann::ordered_json{{"roi", geometry.roi},
                                  {"window", geometry.window},
                                  {"stride", geometry.stride},
                                  {"roi_x0", geometry.roi_x0},
                                  {"roi_y0", geometry.roi_y0},
                                  {"origins", std::move(origins)}};
}

namespace {

int next_pgm_token(std::istream& in) {
    // Skips whitespace and '#' comments, returns the next integer.
    while (true) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    int value = -1;
    in >> value;
    if (!in) throw parse_error("malformed PGM header");
    return value;
}

} // namespace

RasterImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path.string());
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (magic[0] != 'P' || magic[1] != '5') {
        throw parse_error(path.string() + " is not a binary PGM (P5) file");
    }
    const int width = next_pgm_token(in);
    const int height = next_pgm_token(in);
    const int maxval = next_pgm_token(in);
    if (width < 1 || height < 1 || maxval < 1 || maxval > 65535) {
        throw parse_error("bad PGM dimensions or maxval in " + path.string());
    }
    in.get(); // single whitespace after maxval

    RasterImage img = RasterImage::zeros(static_cast<std::size_t>(height),
                                         static_cast<std::size_t>(width));
    const std::size_t n = img.pixels.size();
    if (maxval <= 255) {
        std::vector<unsigned char> buf(n);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
        if (!in) throw parse_error("truncated PGM data in " + path.string());
        for (std::size_t i = 0; i < n; ++i) img.pixels[i] = static_cast<double>(buf[i]);
    } else {
        std::vector<unsigned char> buf(2 * n);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(2 * n));
        if (!in) throw parse_error("truncated PGM data in " + path.string());
        for (std::size_t i = 0; i < n; ++i) {
            img.pixels[i] = static_cast<double>(256 * buf[2 * i] + buf[2 * i + 1]);
        }
    }

    const std::filesystem::path sidecar = path.string() + ".spacing";
    if (std::filesystem::exists(sidecar)) {
        std::string text = read_text_file(sidecar);
        while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
        if (text.rfind("spacing=", 0) != 0) {
            throw parse_error(sidecar.string() + " must contain spacing=<sx>,<sy>");
        }
        const auto fields = split_csv_line(text.substr(8));
        if (fields.size() != 2) {
            throw parse_error(sidecar.string() + " must contain spacing=<sx>,<sy>");
        }
        img.spacing_x = parse_double_field(fields[0], sidecar.string());
        img.spacing_y = parse_double_field(fields[1], sidecar.string());
        if (!(img.spacing_x > 0.0) || !(img.spacing_y > 0.0)) {
            throw parse_error("spacing must be > 0 in " + sidecar.string());
        }
    } else {
        log_warn("no spacing sidecar for " + path.string() + ", assuming 1.0 mm/pixel");
    }
    return img;
}

PgmScale write_pgm16(const std::filesystem::path& path, const RasterImage& img) {
    img.validate();
    const auto [lo_it, hi_it] = std::minmax_element(img.pixels.begin(), img.pixels.end());
    const double lo = *lo_it, hi = *hi_it;
    PgmScale scale;
    scale.offset = lo;
    scale.scale = hi > lo ? (hi - lo) / 65535.0 : 1.0;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path.string());
    out << "P5\n" << img.width << " " << img.height << "\n65535\n";
    for (double p : img.pixels) {
        const auto v = static_cast<unsigned>(std::lround((p - scale.offset) / scale.scale));
        const auto clamped = std::min(v, 65535u);
        out.put(static_cast<char>(clamped >> 8));
        out.put(static_cast<char>(clamped & 0xff));
    }
    if (!out) throw io_error("short write to " + path.string());

    write_text_file(path.string() + ".spacing",
                    "spacing=" + format_double(img.spacing_x) + "," +
                        format_double(img.spacing_y) + "\n");
    return scale;
}

} // namespace evidfuse
