#include "evidfuse/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "evidfuse/autodiff.hpp"
#include "evidfuse/csv.hpp"
#include "evidfuse/errors.hpp"

namespace evidfuse {

namespace {

constexpr std::uint64_t kInitStream = 0x494e4954;    // model initialization
constexpr std::uint64_t kShuffleStream = 0x53485546; // epoch shuffling
constexpr int kCheckpointVersion = 1;

double stable_softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

void check_sample_dims(const MultiViewModel& model, const MultiViewSample& sample) {
    if (sample.local_views.size() != model.num_local_views()) {
        throw domain_error("sample has " + std::to_string(sample.local_views.size()) +
                           " local views, model expects " +
                           std::to_string(model.num_local_views()));
    }
    for (std::size_t k = 0; k < sample.local_views.size(); ++k) {
        if (sample.local_views[k].size() != model.nets[k].input_dim) {
            throw domain_error("view " + std::to_string(k) + " feature size mismatch");
        }
    }
    if (sample.global_view.size() != model.global_net().input_dim) {
        throw domain_error("global view feature size mismatch");
    }
    if (sample.label >= model.num_classes) {
        throw domain_error("sample label out of range");
    }
}

// Builds the tape subgraph of one evidential net and returns the node id of
// its opinion vector [b_1..b_C, u].
int build_view_opinion(autodiff::Tape& tape, const EvidentialNet& net, NetGrads& grads,
                       const Vec& features) {
    int x = tape.input(features);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const DenseLayer& layer = net.layers[l];
        const int w = tape.param(&layer.weights, &grads.weights[l]);
        const int b = tape.param(&layer.bias, &grads.bias[l]);
        x = tape.dense(w, b, x, layer.out_dim, layer.in_dim);
        x = (l + 1 == net.layers.size()) ? tape.softplus(x) : tape.relu(x);
    }
    const int alpha = tape.add_scalar(x, 1.0);
    return tape.alpha_to_opinion(alpha);
}

int build_loss_term(autodiff::Tape& tape, int alpha, std::size_t label, double lambda,
                    std::vector<int>& terms, std::vector<double>& coeffs) {
    terms.push_back(tape.integrated_ce(alpha, label));
    coeffs.push_back(1.0);
    if (lambda > 0.0) {
        terms.push_back(tape.kl_masked(alpha, label));
        coeffs.push_back(lambda);
    }
    return terms.back();
}

int build_sample_loss(autodiff::Tape& tape, const MultiViewModel& model, ModelGrads& grads,
                      const MultiViewSample& sample, double lambda, bool include_combined) {
    std::vector<int> opinions;
    opinions.reserve(model.nets.size());
    for (std::size_t k = 0; k < model.num_local_views(); ++k) {
        opinions.push_back(
            build_view_opinion(tape, model.nets[k], grads.nets[k], sample.local_views[k]));
    }
    opinions.push_back(build_view_opinion(tape, model.global_net(), grads.nets.back(),
                                          sample.global_view));

    std::vector<int> terms;
    std::vector<double> coeffs;
    for (int opinion : opinions) {
        const int alpha = tape.opinion_to_alpha(opinion);
        build_loss_term(tape, alpha, sample.label, lambda, terms, coeffs);
    }
    if (include_combined) {
        int fused = opinions.front();
        for (std::size_t i = 1; i < opinions.size(); ++i) {
            fused = tape.combine_pair(fused, opinions[i]);
        }
        const int alpha = tape.opinion_to_alpha(fused);
        build_loss_term(tape, alpha, sample.label, lambda, terms, coeffs);
    }
    return tape.weighted_sum(std::move(terms), std::move(coeffs));
}

} // namespace

EvidentialNet make_evidential_net(std::size_t input_dim,
                                  const std::vector<std::size_t>& hidden_dims,
                                  std::size_t num_classes, SplitMix64& rng) {
    if (input_dim == 0) throw domain_error("net input dimension must be positive");
    if (num_classes < 2) throw domain_error("net needs at least 2 classes");
    EvidentialNet net;
    net.input_dim = input_dim;
    net.num_classes = num_classes;
    std::size_t in_dim = input_dim;
    std::vector<std::size_t> dims(hidden_dims);
    dims.push_back(num_classes);
    for (std::size_t out_dim : dims) {
        if (out_dim == 0) throw domain_error("layer width must be positive");
        DenseLayer layer;
        layer.in_dim = in_dim;
        layer.out_dim = out_dim;
        layer.weights.resize(in_dim * out_dim);
        layer.bias.assign(out_dim, 0.0);
        // Glorot-uniform weights, zero bias.
        const double bound = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
        for (double& w : layer.weights) w = rng.uniform(-bound, bound);
        net.layers.push_back(std::move(layer));
        in_dim = out_dim;
    }
    return net;
}

Evidence forward(const EvidentialNet& net, const Vec& x) {
    if (x.size() != net.input_dim) {
        throw domain_error("input has " + std::to_string(x.size()) + " features, net expects " +
                           std::to_string(net.input_dim));
    }
    Vec cur = x;
    Vec next;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const DenseLayer& layer = net.layers[l];
        next.assign(layer.out_dim, 0.0);
        for (std::size_t i = 0; i < layer.out_dim; ++i) {
            double acc = layer.bias[i];
            const double* row = layer.weights.data() + i * layer.in_dim;
            for (std::size_t j = 0; j < layer.in_dim; ++j) acc += row[j] * cur[j];
            next[i] = (l + 1 == net.layers.size()) ? stable_softplus(acc) : std::max(acc, 0.0);
        }
        cur.swap(next);
    }
    for (double e : cur) {
        if (!std::isfinite(e)) throw numeric_error("non-finite activation in forward pass");
    }
    return Evidence(std::move(cur));
}

MultiViewModel make_model(const MultiViewDataset& shape_of,
                          const std::vector<std::size_t>& hidden_dims, std::uint64_t seed) {
    if (shape_of.samples.empty()) throw domain_error("cannot shape a model from an empty dataset");
    const MultiViewSample& first = shape_of.samples.front();
    MultiViewModel model;
    model.num_classes = shape_of.num_classes;
    SplitMix64 rng = SplitMix64(seed).substream(kInitStream);
    for (const auto& view : first.local_views) {
        model.nets.push_back(
            make_evidential_net(view.size(), hidden_dims, shape_of.num_classes, rng));
    }
    model.nets.push_back(
        make_evidential_net(first.global_view.size(), hidden_dims, shape_of.num_classes, rng));
    return model;
}

void ModelGrads::zero() {
    for (auto& net : nets) {
        for (auto& w : net.weights) std::fill(w.begin(), w.end(), 0.0);
        for (auto& b : net.bias) std::fill(b.begin(), b.end(), 0.0);
    }
}

void ModelGrads::scale(double factor) {
    for (auto& net : nets) {
        for (auto& w : net.weights)
            for (double& v : w) v *= factor;
        for (auto& b : net.bias)
            for (double& v : b) v *= factor;
    }
}

ModelGrads make_grads(const MultiViewModel& model) {
    ModelGrads grads;
    grads.nets.resize(model.nets.size());
    for (std::size_t n = 0; n < model.nets.size(); ++n) {
        for (const DenseLayer& layer : model.nets[n].layers) {
            grads.nets[n].weights.emplace_back(layer.weights.size(), 0.0);
            grads.nets[n].bias.emplace_back(layer.bias.size(), 0.0);
        }
    }
    return grads;
}

Vec flatten_params(const MultiViewModel& model) {
    Vec flat;
    for (const auto& net : model.nets) {
        for (const auto& layer : net.layers) {
            flat.insert(flat.end(), layer.weights.begin(), layer.weights.end());
            flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
        }
    }
    return flat;
}

void unflatten_params(MultiViewModel& model, const Vec& flat) {
    std::size_t pos = 0;
    for (auto& net : model.nets) {
        for (auto& layer : net.layers) {
            if (pos + layer.weights.size() + layer.bias.size() > flat.size()) {
                throw domain_error("flat parameter vector too short");
            }
            std::copy_n(flat.begin() + pos, layer.weights.size(), layer.weights.begin());
            pos += layer.weights.size();
            std::copy_n(flat.begin() + pos, layer.bias.size(), layer.bias.begin());
            pos += layer.bias.size();
        }
    }
    if (pos != flat.size()) throw domain_error("flat parameter vector too long");
}

Vec flatten_grads(const ModelGrads& grads) {
    Vec flat;
    for (const auto& net : grads.nets) {
        for (std::size_t l = 0; l < net.weights.size(); ++l) {
            flat.insert(flat.end(), net.weights[l].begin(), net.weights[l].end());
            flat.insert(flat.end(), net.bias[l].begin(), net.bias[l].end());
        }
    }
    return flat;
}

double sample_loss_and_grad(const MultiViewModel& model, ModelGrads& grads,
                            const MultiViewSample& sample, double lambda,
                            bool include_combined) {
    check_sample_dims(model, sample);
    autodiff::Tape tape;
    const int root = build_sample_loss(tape, model, grads, sample, lambda, include_combined);
    tape.backward(root);
    return tape.scalar(root);
}

double sample_loss(const MultiViewModel& model, const MultiViewSample& sample, double lambda,
                   bool include_combined) {
    check_sample_dims(model, sample);
    const OneHotLabel y(sample.label, model.num_classes);
    std::vector<DirichletParams> view_params;
    std::vector<Opinion> opinions;
    for (std::size_t k = 0; k < model.num_local_views(); ++k) {
        const Evidence e = forward(model.nets[k], sample.local_views[k]);
        view_params.push_back(evidence_to_dirichlet(e));
        opinions.push_back(evidence_to_opinion(e));
    }
    const Evidence global_e = forward(model.global_net(), sample.global_view);
    const DirichletParams global_params = evidence_to_dirichlet(global_e);
    opinions.push_back(evidence_to_opinion(global_e));

    double loss = view_loss(global_params, y, lambda);
    for (const auto& p : view_params) loss += view_loss(p, y, lambda);
    if (include_combined) {
        const FusionResult fused = combine_many(opinions);
        loss += view_loss(opinion_to_dirichlet(fused.combined), y, lambda);
    }
    return loss;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr, double beta1, double beta2, double epsilon) {
    if (params.size() != grads.size()) throw domain_error("adam_step size mismatch");
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    if (state.m.size() != params.size()) throw domain_error("adam state size mismatch");
    ++state.step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grads[i];
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grads[i] * grads[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + epsilon);
    }
}

double poly_lr(double base_lr, std::int64_t step, std::int64_t total, double power) {
    if (total < 1) throw domain_error("poly_lr needs total >= 1");
    if (step < 0) throw domain_error("poly_lr step must be non-negative");
    if (step >= total) return 0.0;
    const double frac = 1.0 - static_cast<double>(step) / static_cast<double>(total);
    return base_lr * std::pow(frac, power);
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw domain_error("learning_rate must be > 0");
    if (epochs < 1) throw domain_error("epochs must be >= 1");
    if (!(poly_power >= 0.0)) throw domain_error("poly_power must be >= 0");
    if (!(lambda_max >= 0.0 && lambda_max <= 1.0)) {
        throw domain_error("lambda_max must lie in [0, 1]");
    }
    if (warmup_epochs < 0) throw domain_error("warmup_epochs must be >= 0");
    if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
        throw domain_error("test_fraction must lie in [0, 1)");
    }
    if (hidden_dims.empty()) throw domain_error("at least one hidden layer width required");
}

nlohmann::ordered_json train_config_to_json(const TrainConfig& config) {
    return nlohmann::ordered_json{
        {"learning_rate", config.learning_rate},
        {"epochs", config.epochs},
        {"poly_power", config.poly_power},
        {"seed", config.seed},
        {"batch_size", config.batch_size},
        {"lambda_total_steps", config.lambda_schedule.total_steps},
        {"lambda_max", config.lambda_max},
        {"adam_beta1", config.adam_beta1},
        {"adam_beta2", config.adam_beta2},
        {"adam_epsilon", config.adam_epsilon},
        {"warmup_epochs", config.warmup_epochs},
        {"hidden_dims", config.hidden_dims},
        {"test_fraction", config.test_fraction},
    };
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig config;
    try {
        config.learning_rate = j.value("learning_rate", config.learning_rate);
        config.epochs = j.value("epochs", config.epochs);
        config.poly_power = j.value("poly_power", config.poly_power);
        config.seed = j.value("seed", config.seed);
        config.batch_size = j.value("batch_size", config.batch_size);
        config.lambda_schedule.total_steps = j.value("lambda_total_steps", std::int64_t{0});
        config.lambda_max = j.value("lambda_max", config.lambda_max);
        config.adam_beta1 = j.value("adam_beta1", config.adam_beta1);
        config.adam_beta2 = j.value("adam_beta2", config.adam_beta2);
        config.adam_epsilon = j.value("adam_epsilon", config.adam_epsilon);
        config.warmup_epochs = j.value("warmup_epochs", config.warmup_epochs);
        config.hidden_dims = j.value("hidden_dims", config.hidden_dims);
        config.test_fraction = j.value("test_fraction", config.test_fraction);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("bad train config JSON: ") + e.what());
    }
    config.validate();
    return config;
}

std::vector<EpochStats> train(MultiViewModel& model, const MultiViewDataset& data,
                              const TrainConfig& config) {
    config.validate();
    if (data.samples.empty()) throw domain_error("cannot train on an empty dataset");
    for (const auto& sample : data.samples) check_sample_dims(model, sample);

    AnnealSchedule schedule = config.lambda_schedule;
    if (schedule.total_steps <= 0) schedule.total_steps = std::max<std::int64_t>(1, config.epochs);

    ModelGrads grads = make_grads(model);
    // One Adam state per tensor, stepped together.
    std::vector<AdamState> adam(2 * [&] {
        std::size_t layers = 0;
        for (const auto& net : model.nets) layers += net.layers.size();
        return layers;
    }());

    SplitMix64 shuffle_rng = SplitMix64(config.seed).substream(kShuffleStream);
    std::vector<std::size_t> order(data.samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t batch =
        config.batch_size == 0 ? data.samples.size() : config.batch_size;

    std::vector<EpochStats> history;
    history.reserve(static_cast<std::size_t>(config.epochs));
    for (std::int64_t epoch = 0; epoch < config.epochs; ++epoch) {
        const bool warm = epoch < config.warmup_epochs;
        const double lambda = warm ? 0.0 : config.lambda_max * schedule.lambda_at(epoch);
        const double lr = poly_lr(config.learning_rate, epoch, config.epochs, config.poly_power);

        fisher_yates(order, shuffle_rng);
        double loss_sum = 0.0;
        std::size_t cursor = 0;
        while (cursor < order.size()) {
            const std::size_t end = std::min(cursor + batch, order.size());
            grads.zero();
            for (std::size_t i = cursor; i < end; ++i) {
                loss_sum += sample_loss_and_grad(model, grads, data.samples[order[i]], lambda,
                                                 !warm);
            }
            grads.scale(1.0 / static_cast<double>(end - cursor));
            std::size_t tensor = 0;
            for (std::size_t n = 0; n < model.nets.size(); ++n) {
                for (std::size_t l = 0; l < model.nets[n].layers.size(); ++l) {
                    DenseLayer& layer = model.nets[n].layers[l];
                    adam_step(layer.weights, grads.nets[n].weights[l], adam[tensor++], lr,
                              config.adam_beta1, config.adam_beta2, config.adam_epsilon);
                    adam_step(layer.bias, grads.nets[n].bias[l], adam[tensor++], lr,
                              config.adam_beta1, config.adam_beta2, config.adam_epsilon);
                }
            }
            cursor = end;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.loss = loss_sum / static_cast<double>(data.samples.size());
        if (!std::isfinite(stats.loss)) {
            throw numeric_error("training diverged: non-finite loss at epoch " +
                                std::to_string(epoch));
        }
        const auto records = predict_records(model, data);
        stats.accuracy = accuracy(records);
        stats.mean_uncertainty = per_view_mean_uncertainty(model, data);
        stats.lambda = lambda;
        stats.learning_rate = lr;
        history.push_back(std::move(stats));
    }
    return history;
}

std::string history_to_csv(const std::vector<EpochStats>& history) {
    std::ostringstream out;
    const std::size_t views = history.empty() ? 0 : history.front().mean_uncertainty.size();
    out << "epoch,loss,acc";
    for (std::size_t k = 0; k < views; ++k) out << ",mean_u_view_" << k;
    out << ",lambda,lr\n";
    for (const EpochStats& s : history) {
        out << s.epoch << "," << format_double(s.loss) << "," << format_double(s.accuracy);
        for (double u : s.mean_uncertainty) out << "," << format_double(u);
        out << "," << format_double(s.lambda) << "," << format_double(s.learning_rate) << "\n";
    }
    return out.str();
}

SamplePrediction predict(const MultiViewModel& model, const MultiViewSample& sample) {
    check_sample_dims(model, sample);
    std::vector<Opinion> opinions;
    std::vector<std::string> ids;
    for (std::size_t k = 0; k < model.num_local_views(); ++k) {
        opinions.push_back(evidence_to_opinion(forward(model.nets[k], sample.local_views[k])));
        ids.push_back("view_" + std::to_string(k));
    }
    opinions.push_back(evidence_to_opinion(forward(model.global_net(), sample.global_view)));
    ids.push_back("global");
    FusionResult fused = combine_many(opinions, std::move(ids));
    ProbVector probs = expected_probabilities(opinion_to_dirichlet(fused.combined));
    return SamplePrediction{std::move(opinions), std::move(fused), std::move(probs)};
}

std::vector<PredictionRecord> predict_records(const MultiViewModel& model,
                                              const MultiViewDataset& data) {
    std::vector<PredictionRecord> records;
    records.reserve(data.samples.size());
    for (const auto& sample : data.samples) {
        SamplePrediction p = predict(model, sample);
        records.emplace_back(std::move(p.probs), sample.label, p.fused.combined.uncertainty());
    }
    return records;
}

std::vector<double> per_view_mean_uncertainty(const MultiViewModel& model,
                                              const MultiViewDataset& data) {
    if (data.samples.empty()) throw domain_error("empty dataset");
    std::vector<double> sums(model.nets.size(), 0.0);
    for (const auto& sample : data.samples) {
        check_sample_dims(model, sample);
        for (std::size_t k = 0; k < model.num_local_views(); ++k) {
            sums[k] +=
                evidence_to_opinion(forward(model.nets[k], sample.local_views[k])).uncertainty();
        }
        sums.back() +=
            evidence_to_opinion(forward(model.global_net(), sample.global_view)).uncertainty();
    }
    for (double& s : sums) s /= static_cast<double>(data.samples.size());
    return sums;
}

nlohmann::ordered_json model_to_json(const MultiViewModel& model) {
    nlohmann::ordered_json nets = nlohmann::ordered_json::array();
    for (std::size_t n = 0; n < model.nets.size(); ++n) {
        const EvidentialNet& net = model.nets[n];
        nlohmann::ordered_json layers = nlohmann::ordered_json::array();
        for (const DenseLayer& layer : net.layers) {
            layers.push_back({{"in_dim", layer.in_dim},
                              {"out_dim", layer.out_dim},
                              {"weights", layer.weights},
                              {"bias", layer.bias}});
        }
        nets.push_back({{"role", n + 1 == model.nets.size() ? "global" : "local"},
                        {"input_dim", net.input_dim},
                        {"layers", std::move(layers)}});
    }
    return nlohmann::ordered_json{{"format", "evidfuse-model"},
                                  {"version", kCheckpointVersion},
                                  {"num_classes", model.num_classes},
                                  {"nets", std::move(nets)}};
}

MultiViewModel model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "evidfuse-model" ||
            j.at("version").get<int>() != kCheckpointVersion) {
            throw parse_error("unsupported model checkpoint format/version");
        }
        MultiViewModel model;
        model.num_classes = j.at("num_classes").get<std::size_t>();
        for (const auto& jn : j.at("nets")) {
            EvidentialNet net;
            net.input_dim = jn.at("input_dim").get<std::size_t>();
            net.num_classes = model.num_classes;
            for (const auto& jl : jn.at("layers")) {
                DenseLayer layer;
                layer.in_dim = jl.at("in_dim").get<std::size_t>();
                layer.out_dim = jl.at("out_dim").get<std::size_t>();
                layer.weights = jl.at("weights").get<Vec>();
                layer.bias = jl.at("bias").get<Vec>();
                if (layer.weights.size() != layer.in_dim * layer.out_dim ||
                    layer.bias.size() != layer.out_dim) {
                    throw parse_error("checkpoint layer shape mismatch");
                }
                net.layers.push_back(std::move(layer));
            }
            if (net.layers.empty() || net.layers.back().out_dim != model.num_classes) {
                throw parse_error("checkpoint net output does not match num_classes");
            }
            model.nets.push_back(std::move(net));
        }
        if (model.nets.size() < 2) throw parse_error("checkpoint needs local and global nets");
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("bad model checkpoint: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const MultiViewModel& model) {
    write_text_file(path, model_to_json(model).dump(2) + "\n");
}

MultiViewModel load_model(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(path.string() + ": " + e.what());
    }
    return model_from_json(j);
}

} // namespace evidfuse
