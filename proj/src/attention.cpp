#include "evidfuse/attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "evidfuse/errors.hpp"

namespace evidfuse {

ImageTensor ImageTensor::zeros(std::size_t h, std::size_t w, std::size_t c) {
    ImageTensor img{h, w, c, std::vector<double>(h * w * c, 0.0)};
    img.validate();
    return img;
}

void ImageTensor::validate() const {
    if (height < 1 || width < 1 || channels < 1) {
        throw domain_error("image dimensions must be >= 1");
    }
    if (data.size() != height * width * channels) {
        throw domain_error("image buffer size does not match H*W*C");
    }
    for (double v : data) {
        if (!std::isfinite(v)) throw domain_error("image pixels must be finite");
    }
}

double ImageTensor::at(std::size_t y, std::size_t x, std::size_t c) const {
    return data[(y * width + x) * channels + c];
}

double& ImageTensor::at(std::size_t y, std::size_t x, std::size_t c) {
    return data[(y * width + x) * channels + c];
}

TokenMatrix TokenMatrix::zeros(std::size_t n, std::size_t d) {
    return TokenMatrix{n, d, std::vector<double>(n * d, 0.0)};
}

void TokenMatrix::validate() const {
    if (num_tokens < 1 || dim < 1) throw domain_error("token matrix dimensions must be >= 1");
    if (data.size() != num_tokens * dim) {
        throw domain_error("token buffer size does not match n*dim");
    }
}

LinearProj LinearProj::zeros(std::size_t in, std::size_t out) {
    return LinearProj{in, out, std::vector<double>(in * out, 0.0),
                      std::vector<double>(out, 0.0)};
}

LinearProj LinearProj::random(std::size_t in, std::size_t out, SplitMix64& rng) {
    LinearProj proj = zeros(in, out);
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    for (double& w : proj.weights) w = rng.uniform(-bound, bound);
    return proj;
}

std::vector<double> LinearProj::apply(const double* x) const {
    std::vector<double> y(out_dim);
    for (std::size_t i = 0; i < out_dim; ++i) {
        double acc = bias[i];
        const double* row = weights.data() + i * in_dim;
        for (std::size_t j = 0; j < in_dim; ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
    return y;
}

LSAParams LSAParams::random(std::size_t token_dim, std::size_t d_k, std::size_t d_v,
                            SplitMix64& rng) {
    LSAParams params;
    params.query = LinearProj::random(token_dim, d_k, rng);
    params.key = LinearProj::random(token_dim, d_k, rng);
    params.value = LinearProj::random(token_dim, d_v, rng);
    params.temperature = std::sqrt(static_cast<double>(d_k));
    return params;
}

void LSAParams::validate(std::size_t token_dim) const {
    if (!(temperature > 0.0)) throw domain_error("temperature must be > 0");
    if (query.in_dim != token_dim || key.in_dim != token_dim || value.in_dim != token_dim) {
        throw domain_error("projection input dims must match token dim");
    }
    if (query.out_dim != key.out_dim) {
        throw domain_error("query and key projections must agree on d_k");
    }
}

ImageTensor shift_image(const ImageTensor& img, long dy, long dx) {
    img.validate();
    ImageTensor out = ImageTensor::zeros(img.height, img.width, img.channels);
    for (std::size_t y = 0; y < img.height; ++y) {
        const long sy = static_cast<long>(y) - dy;
        if (sy < 0 || sy >= static_cast<long>(img.height)) continue;
        for (std::size_t x = 0; x < img.width; ++x) {
            const long sx = static_cast<long>(x) - dx;
            if (sx < 0 || sx >= static_cast<long>(img.width)) continue;
            for (std::size_t c = 0; c < img.channels; ++c) {
                out.at(y, x, c) = img.at(static_cast<std::size_t>(sy),
                                         static_cast<std::size_t>(sx), c);
            }
        }
    }
    return out;
}

namespace {

void check_patch(const ImageTensor& img, std::size_t patch) {
    if (patch == 0 || patch % 2 != 0) {
        throw domain_error("patch size must be even and positive, got " + std::to_string(patch));
    }
    if (img.height % patch != 0 || img.width % patch != 0) {
        throw domain_error("patch size must divide both image dimensions");
    }
}

} // namespace

ImageTensor spt_concat(const ImageTensor& img, std::size_t patch) {
    img.validate();
    check_patch(img, patch);
    const long s = static_cast<long>(patch / 2);
    const ImageTensor shifts[4] = {
        shift_image(img, -s, -s),
        shift_image(img, -s, +s),
        shift_image(img, +s, -s),
        shift_image(img, +s, +s),
    };
    ImageTensor out = ImageTensor::zeros(img.height, img.width, 5 * img.channels);
    for (std::size_t y = 0; y < img.height; ++y) {
        for (std::size_t x = 0; x < img.width; ++x) {
            for (std::size_t c = 0; c < img.channels; ++c) {
                out.at(y, x, c) = img.at(y, x, c);
                for (std::size_t k = 0; k < 4; ++k) {
                    out.at(y, x, (k + 1) * img.channels + c) = shifts[k].at(y, x, c);
                }
            }
        }
    }
    return out;
}

TokenMatrix patchify(const ImageTensor& img, std::size_t patch) {
    img.validate();
    if (patch == 0 || img.height % patch != 0 || img.width % patch != 0) {
        throw domain_error("patch size must divide both image dimensions");
    }
    const std::size_t gy = img.height / patch;
    const std::size_t gx = img.width / patch;
    const std::size_t raw_dim = patch * patch * img.channels;
    TokenMatrix tokens = TokenMatrix::zeros(gy * gx, raw_dim);
    for (std::size_t ty = 0; ty < gy; ++ty) {
        for (std::size_t tx = 0; tx < gx; ++tx) {
            double* row = tokens.data.data() + (ty * gx + tx) * raw_dim;
            std::size_t j = 0;
            for (std::size_t py = 0; py < patch; ++py) {
                for (std::size_t px = 0; px < patch; ++px) {
                    for (std::size_t c = 0; c < img.channels; ++c) {
                        row[j++] = img.at(ty * patch + py, tx * patch + px, c);
                    }
                }
            }
        }
    }
    return tokens;
}

std::size_t spt_raw_dim(std::size_t channels, std::size_t patch) {
    return 5 * channels * patch * patch;
}

TokenMatrix spt_tokenize(const ImageTensor& img, std::size_t patch, const LinearProj& proj) {
    const TokenMatrix raw = patchify(spt_concat(img, patch), patch);
    if (proj.in_dim != raw.dim) {
        throw domain_error("projection expects raw dim " + std::to_string(proj.in_dim) +
                           ", tokens have " + std::to_string(raw.dim));
    }
    TokenMatrix tokens = TokenMatrix::zeros(raw.num_tokens, proj.out_dim);
    for (std::size_t t = 0; t < raw.num_tokens; ++t) {
        const std::vector<double> projected = proj.apply(raw.data.data() + t * raw.dim);
        std::copy(projected.begin(), projected.end(), tokens.data.begin() + t * proj.out_dim);
    }
    return tokens;
}

TokenMatrix lsa_attention(const TokenMatrix& tokens, const LSAParams& params) {
    tokens.validate();
    params.validate(tokens.dim);
    const std::size_t n = tokens.num_tokens;
    if (params.mask_diagonal && n < 2) {
        throw domain_error("diagonal masking needs at least 2 tokens");
    }

    const std::size_t d_k = params.query.out_dim;
    TokenMatrix q = TokenMatrix::zeros(n, d_k);
    TokenMatrix k = TokenMatrix::zeros(n, d_k);
    for (std::size_t t = 0; t < n; ++t) {
        const double* x = tokens.data.data() + t * tokens.dim;
        const auto qt = params.query.apply(x);
        const auto kt = params.key.apply(x);
        std::copy(qt.begin(), qt.end(), q.data.begin() + t * d_k);
        std::copy(kt.begin(), kt.end(), k.data.begin() + t * d_k);
    }

    TokenMatrix attn = TokenMatrix::zeros(n, n);
    std::vector<double> logits(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t m = 0; m < d_k; ++m) dot += q.at(i, m) * k.at(j, m);
            // Mask after scaling: the paper's -inf diagonal is unaffected by
            // the temperature, so its finite stand-in must be too.
            logits[j] = (params.mask_diagonal && i == j) ? kDiagonalMask
                                                         : dot / params.temperature;
        }
        const double peak = *std::max_element(logits.begin(), logits.end());
        double norm = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            logits[j] = std::exp(logits[j] - peak);
            norm += logits[j];
        }
        for (std::size_t j = 0; j < n; ++j) attn.at(i, j) = logits[j] / norm;
    }
    return attn;
}

TokenMatrix lsa_forward(const TokenMatrix& tokens, const LSAParams& params) {
    const TokenMatrix attn = lsa_attention(tokens, params);
    const std::size_t n = tokens.num_tokens;
    const std::size_t d_v = params.value.out_dim;
    TokenMatrix v = TokenMatrix::zeros(n, d_v);
    for (std::size_t t = 0; t < n; ++t) {
        const auto vt = params.value.apply(tokens.data.data() + t * tokens.dim);
        std::copy(vt.begin(), vt.end(), v.data.begin() + t * d_v);
    }
    TokenMatrix out = TokenMatrix::zeros(n, d_v);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double a = attn.at(i, j);
            if (a == 0.0) continue;
            for (std::size_t m = 0; m < d_v; ++m) out.at(i, m) += a * v.at(j, m);
        }
    }
    return out;
}

} // namespace evidfuse
