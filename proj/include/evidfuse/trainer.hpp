#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "evidfuse/dataset.hpp"
#include "evidfuse/fusion.hpp"
#include "evidfuse/loss.hpp"
#include "evidfuse/metrics.hpp"
#include "evidfuse/opinion.hpp"
#include "evidfuse/rng.hpp"

namespace evidfuse {

using Vec = std::vector<double>;

struct DenseLayer {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    Vec weights; // row-major [out_dim x in_dim]
    Vec bias;    // [out_dim]
};

// Small dense classifier with rectifier hidden layers and softplus output,
// so the produced evidence is strictly positive and alpha = e + 1 > 1.
struct EvidentialNet {
    std::size_t input_dim = 0;
    std::size_t num_classes = 0;
    std::vector<DenseLayer> layers;
};

EvidentialNet make_evidential_net(std::size_t input_dim,
                                  const std::vector<std::size_t>& hidden_dims,
                                  std::size_t num_classes, SplitMix64& rng);

Evidence forward(const EvidentialNet& net, const Vec& x);

// K per-view nets followed by the global-view net.
struct MultiViewModel {
    std::size_t num_classes = 0;
    std::vector<EvidentialNet> nets;

    std::size_t num_local_views() const { return nets.size() - 1; }
    const EvidentialNet& global_net() const { return nets.back(); }
};

MultiViewModel make_model(const MultiViewDataset& shape_of,
                          const std::vector<std::size_t>& hidden_dims,
                          std::uint64_t seed);

struct NetGrads {
    std::vector<Vec> weights;
    std::vector<Vec> bias;
};

struct ModelGrads {
    std::vector<NetGrads> nets;
    void zero();
    void scale(double factor);
};

ModelGrads make_grads(const MultiViewModel& model);

// Flat parameter views used by the finite-difference harness and Adam tests.
Vec flatten_params(const MultiViewModel& model);
void unflatten_params(MultiViewModel& model, const Vec& flat);
Vec flatten_grads(const ModelGrads& grads);

// Loss of one sample through forward + fusion + Eq.-style overall loss;
// gradients are accumulated (+=) into `grads`. With include_combined false
// only the per-view terms are evaluated (warm-up mode).
double sample_loss_and_grad(const MultiViewModel& model, ModelGrads& grads,
                            const MultiViewSample& sample, double lambda,
                            bool include_combined = true);

// Loss without gradients (plain forward path).
double sample_loss(const MultiViewModel& model, const MultiViewSample& sample,
                   double lambda, bool include_combined = true);

struct AdamState {
    Vec m;
    Vec v;
    std::int64_t step = 0;
};

// Standard bias-corrected Adam update on a flat tensor.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

// base_lr * (1 - step/total)^power; steps past `total` give 0.
double poly_lr(double base_lr, std::int64_t step, std::int64_t total, double power);

struct TrainConfig {
    double learning_rate = 1e-4;
    std::int64_t epochs = 100;
    double poly_power = 0.9;
    std::uint64_t seed = 0;
    std::size_t batch_size = 32;            // 0 = full batch
    AnnealSchedule lambda_schedule{0, 0};   // total_steps 0 = anneal over all epochs
    double lambda_max = 1.0;                // 0 disables the KL term entirely
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::int64_t warmup_epochs = 0;         // per-view-only epochs with lambda = 0
    std::vector<std::size_t> hidden_dims = {16};
    double test_fraction = 0.25;            // used by the CLI to split off a test set

    void validate() const;
};

nlohmann::ordered_json train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct EpochStats {
    std::int64_t epoch = 0;
    double loss = 0.0;                  // mean per-sample loss over the epoch
    double accuracy = 0.0;              // combined-opinion accuracy on the train set
    std::vector<double> mean_uncertainty; // per view, locals then global
    double lambda = 0.0;
    double learning_rate = 0.0;
};

// Lambda anneals per epoch, the polynomial schedule decays per epoch, and
// gradients accumulate over each batch in sample order, so two runs with the
// same seed are bitwise identical.
std::vector<EpochStats> train(MultiViewModel& model, const MultiViewDataset& data,
                              const TrainConfig& config);

std::string history_to_csv(const std::vector<EpochStats>& history);

struct SamplePrediction {
    std::vector<Opinion> view_opinions; // locals then global
    FusionResult fused;
    ProbVector probs;                   // expected probabilities of the combined opinion
};

SamplePrediction predict(const MultiViewModel& model, const MultiViewSample& sample);
std::vector<PredictionRecord> predict_records(const MultiViewModel& model,
                                              const MultiViewDataset& data);
// Mean fused-opinion uncertainty per view over a dataset, locals then global.
std::vector<double> per_view_mean_uncertainty(const MultiViewModel& model,
                                              const MultiViewDataset& data);

// Versioned JSON checkpoint: layer shapes plus row-major weight arrays.
nlohmann::ordered_json model_to_json(const MultiViewModel& model);
MultiViewModel model_from_json(const nlohmann::json& j);
void save_model(const std::filesystem::path& path, const MultiViewModel& model);
MultiViewModel load_model(const std::filesystem::path& path);

} // namespace evidfuse
