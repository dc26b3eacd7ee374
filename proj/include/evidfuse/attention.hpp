#pragma once

#include <cstddef>
#include <vector>

#include "evidfuse/rng.hpp"

namespace evidfuse {

// Row-major H x W x C image, channel fastest: data[(y*W + x)*C + c].
struct ImageTensor {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;
    std::vector<double> data;

    static ImageTensor zeros(std::size_t h, std::size_t w, std::size_t c);
    void validate() const;
    double at(std::size_t y, std::size_t x, std::size_t c) const;
    double& at(std::size_t y, std::size_t x, std::size_t c);
};

// Row-major num_tokens x dim matrix.
struct TokenMatrix {
    std::size_t num_tokens = 0;
    std::size_t dim = 0;
    std::vector<double> data;

    static TokenMatrix zeros(std::size_t n, std::size_t d);
    void validate() const;
    double at(std::size_t t, std::size_t j) const { return data[t * dim + j]; }
    double& at(std::size_t t, std::size_t j) { return data[t * dim + j]; }
};

// Affine map y = W x + b with W row-major [out_dim x in_dim].
struct LinearProj {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    static LinearProj zeros(std::size_t in, std::size_t out);
    static LinearProj random(std::size_t in, std::size_t out, SplitMix64& rng);
    std::vector<double> apply(const double* x) const;
};

struct LSAParams {
    LinearProj query;
    LinearProj key;
    LinearProj value;
    double temperature = 1.0;   // learnable tau, initialized sqrt(d_k)
    bool mask_diagonal = true;  // disabling recovers standard attention

    // tau = sqrt(d_k) so the untrained module matches standard scaled
    // dot-product attention.
    static LSAParams random(std::size_t token_dim, std::size_t d_k, std::size_t d_v,
                            SplitMix64& rng);
    void validate(std::size_t token_dim) const;
};

// Mask constant: finite stand-in for -inf that still drives diagonal
// attention mass below 1e-6 without producing NaNs.
inline constexpr double kDiagonalMask = -1e9;

// Content shifted by (dy, dx); vacated border pixels are zero.
ImageTensor shift_image(const ImageTensor& img, long dy, long dx);

// Concatenates the image with its four half-patch diagonal shifts along the
// channel axis: [original, up-left, up-right, down-left, down-right].
ImageTensor spt_concat(const ImageTensor& img, std::size_t patch);

// Cuts non-overlapping patch x patch tiles (row-major over the patch grid)
// into raw tokens of dimension patch^2 * channels, pixel-major with channel
// fastest.
TokenMatrix patchify(const ImageTensor& img, std::size_t patch);

// Shifted Patch Tokenization: shift-concat, patchify, project.
TokenMatrix spt_tokenize(const ImageTensor& img, std::size_t patch, const LinearProj& proj);

// Raw token dimension produced by spt_concat + patchify.
std::size_t spt_raw_dim(std::size_t channels, std::size_t patch);

// softmax(M(q k^T) / tau) row-stochastic attention map.
TokenMatrix lsa_attention(const TokenMatrix& tokens, const LSAParams& params);

// Locality Self-Attention output: attention map times projected values.
TokenMatrix lsa_forward(const TokenMatrix& tokens, const LSAParams& params);

} // namespace evidfuse
