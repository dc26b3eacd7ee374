// Python bindings for the core operations: subjective-logic opinions,
// Dempster fusion, Dirichlet losses, special functions, metrics, SPT/LSA
// kernels, and the synthetic benchmark generator/trainer.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "evidfuse/attention.hpp"
#include "evidfuse/errors.hpp"
#include "evidfuse/fusion.hpp"
#include "evidfuse/loss.hpp"
#include "evidfuse/metrics.hpp"
#include "evidfuse/opinion.hpp"
#include "evidfuse/special_functions.hpp"
#include "evidfuse/synth.hpp"
#include "evidfuse/trainer.hpp"
#include "evidfuse/version.hpp"

namespace py = pybind11;
using namespace evidfuse;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

TokenMatrix tokens_from_array(const Array& arr) {
    if (arr.ndim() != 2) throw domain_error("token matrix must be 2-D");
    TokenMatrix tokens;
    tokens.num_tokens = static_cast<std::size_t>(arr.shape(0));
    tokens.dim = static_cast<std::size_t>(arr.shape(1));
    tokens.data.assign(arr.data(), arr.data() + arr.size());
    tokens.validate();
    return tokens;
}

Array tokens_to_array(const TokenMatrix& tokens) {
    Array arr({tokens.num_tokens, tokens.dim});
    std::copy(tokens.data.begin(), tokens.data.end(), arr.mutable_data());
    return arr;
}

ImageTensor image_from_array(const Array& arr) {
    ImageTensor img;
    if (arr.ndim() == 2) {
        img.height = static_cast<std::size_t>(arr.shape(0));
        img.width = static_cast<std::size_t>(arr.shape(1));
        img.channels = 1;
    } else if (arr.ndim() == 3) {
        img.height = static_cast<std::size_t>(arr.shape(0));
        img.width = static_cast<std::size_t>(arr.shape(1));
        img.channels = static_cast<std::size_t>(arr.shape(2));
    } else {
        throw domain_error("image must be (H, W) or (H, W, C)");
    }
    img.data.assign(arr.data(), arr.data() + arr.size());
    img.validate();
    return img;
}

LinearProj proj_from_arrays(const Array& weights, const py::object& bias) {
    if (weights.ndim() != 2) throw domain_error("projection weights must be 2-D (out x in)");
    LinearProj proj;
    proj.out_dim = static_cast<std::size_t>(weights.shape(0));
    proj.in_dim = static_cast<std::size_t>(weights.shape(1));
    proj.weights.assign(weights.data(), weights.data() + weights.size());
    if (bias.is_none()) {
        proj.bias.assign(proj.out_dim, 0.0);
    } else {
        const Array b = bias.cast<Array>();
        if (b.ndim() != 1 || static_cast<std::size_t>(b.shape(0)) != proj.out_dim) {
            throw domain_error("projection bias must be 1-D of length out_dim");
        }
        proj.bias.assign(b.data(), b.data() + b.size());
    }
    return proj;
}

LSAParams lsa_params(const Array& wq, const Array& wk, const Array& wv, double tau,
                     bool mask_diagonal) {
    LSAParams params;
    params.query = proj_from_arrays(wq, py::none());
    params.key = proj_from_arrays(wk, py::none());
    params.value = proj_from_arrays(wv, py::none());
    params.temperature =
        tau > 0.0 ? tau : std::sqrt(static_cast<double>(params.query.out_dim));
    params.mask_diagonal = mask_diagonal;
    return params;
}

std::vector<PredictionRecord> records_from_arrays(const Array& probs,
                                                  const std::vector<std::size_t>& labels,
                                                  const std::vector<double>& uncertainties) {
    if (probs.ndim() != 2) throw domain_error("probs must be 2-D (N x C)");
    const auto n = static_cast<std::size_t>(probs.shape(0));
    const auto c = static_cast<std::size_t>(probs.shape(1));
    if (labels.size() != n) throw domain_error("labels must have one entry per row");
    if (!uncertainties.empty() && uncertainties.size() != n) {
        throw domain_error("uncertainties must be empty or one per row");
    }
    std::vector<PredictionRecord> records;
    records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(probs.data() + i * c, probs.data() + (i + 1) * c);
        records.emplace_back(ProbVector(std::move(row)), labels[i],
                             uncertainties.empty() ? 0.0 : uncertainties[i]);
    }
    return records;
}

// Full synthetic pipeline: generate -> split -> train -> evaluate, driven by
// JSON strings so the python wrapper can pass plain dicts.
std::string train_synthetic_json(const std::string& spec_json, const std::string& config_json) {
    const SynthSpec spec = synth_spec_from_json(nlohmann::json::parse(spec_json));
    const TrainConfig config = train_config_from_json(nlohmann::json::parse(config_json));

    const MultiViewDataset full = generate(spec);
    const auto n_test = static_cast<std::size_t>(
        std::llround(config.test_fraction * static_cast<double>(full.samples.size())));
    MultiViewDataset train_set{full.num_classes, full.num_views, {}};
    MultiViewDataset test_set{full.num_classes, full.num_views, {}};
    train_set.samples.assign(full.samples.begin(), full.samples.end() - n_test);
    test_set.samples.assign(full.samples.end() - n_test, full.samples.end());
    const MultiViewDataset& eval_set = n_test > 0 ? test_set : train_set;

    MultiViewModel model = make_model(train_set, config.hidden_dims, config.seed);
    const auto history = train(model, train_set, config);
    const auto records = predict_records(model, eval_set);

    nlohmann::ordered_json out;
    out["test_accuracy"] = accuracy(records);
    out["test_ece"] = ece(records, 10);
    out["mean_uncertainty"] = mean_uncertainty(records);
    out["per_view_mean_uncertainty"] = per_view_mean_uncertainty(model, eval_set);
    out["bayes_combined"] = bayes_accuracy_combined(spec);
    out["final_train_loss"] = history.back().loss;
    out["final_train_accuracy"] = history.back().accuracy;
    return out.dump();
}

} // namespace

PYBIND11_MODULE(_evidfuse, m) {
    m.doc() = "uncertainty-aware multi-view evidential fusion";
    m.attr("__version__") = kVersion;

    py::register_exception<domain_error>(m, "DomainError", PyExc_ValueError);
    py::register_exception<parse_error>(m, "ParseError", PyExc_ValueError);
    py::register_exception<numeric_error>(m, "NumericError", PyExc_ArithmeticError);
    py::register_exception<io_error>(m, "IoError", PyExc_OSError);

    py::class_<Opinion>(m, "Opinion")
        .def(py::init<std::vector<double>, double>(), py::arg("beliefs"),
             py::arg("uncertainty"))
        .def_property_readonly("beliefs", &Opinion::beliefs)
        .def_property_readonly("uncertainty", &Opinion::uncertainty)
        .def_property_readonly("num_classes", &Opinion::num_classes)
        .def("__repr__", [](const Opinion& o) {
            return "Opinion(beliefs=" + nlohmann::json(o.beliefs()).dump() +
                   ", uncertainty=" + std::to_string(o.uncertainty()) + ")";
        });

    py::class_<FusionResult>(m, "FusionResult")
        .def_readonly("combined", &FusionResult::combined)
        .def_readonly("conflict", &FusionResult::conflict)
        .def_readonly("step_conflicts", &FusionResult::step_conflicts)
        .def_readonly("order", &FusionResult::order);

    // Opinions and Dirichlet parameters; alphas travel as plain lists.
    m.def("evidence_to_opinion",
          [](const std::vector<double>& e) { return evidence_to_opinion(Evidence(e)); },
          py::arg("evidence"));
    m.def("vacuous_opinion", &vacuous_opinion, py::arg("num_classes"));
    m.def("opinion_to_dirichlet",
          [](const Opinion& o) { return opinion_to_dirichlet(o).alpha(); }, py::arg("opinion"));
    m.def("evidence_to_dirichlet",
          [](const std::vector<double>& e) { return evidence_to_dirichlet(Evidence(e)).alpha(); },
          py::arg("evidence"));
    m.def("expected_probabilities",
          [](const std::vector<double>& alpha) {
              return expected_probabilities(DirichletParams(alpha)).probs();
          },
          py::arg("alpha"));

    m.def("combine_pair", &combine_pair, py::arg("first"), py::arg("second"));
    m.def("combine_many",
          [](const std::vector<Opinion>& opinions) { return combine_many(opinions); },
          py::arg("opinions"));

    m.def("digamma", &digamma, py::arg("x"));
    m.def("trigamma", &trigamma, py::arg("x"));
    m.def("log_gamma", &log_gamma, py::arg("x"));

    m.def("integrated_ce",
          [](const std::vector<double>& alpha, std::size_t label) {
              return integrated_ce(DirichletParams(alpha), OneHotLabel(label, alpha.size()));
          },
          py::arg("alpha"), py::arg("label"));
    m.def("kl_to_uniform",
          [](const std::vector<double>& alpha) { return kl_to_uniform(DirichletParams(alpha)); },
          py::arg("alpha"));
    m.def("masked_alpha",
          [](const std::vector<double>& alpha, std::size_t label) {
              return masked_alpha(DirichletParams(alpha), OneHotLabel(label, alpha.size()))
                  .alpha();
          },
          py::arg("alpha"), py::arg("label"));
    m.def("view_loss",
          [](const std::vector<double>& alpha, std::size_t label, double lambda) {
              return view_loss(DirichletParams(alpha), OneHotLabel(label, alpha.size()), lambda);
          },
          py::arg("alpha"), py::arg("label"), py::arg("lambda_"));
    m.def("overall_loss",
          [](const std::vector<std::vector<double>>& views, const std::vector<double>& global,
             const std::vector<double>& combined, std::size_t label, double lambda) {
              std::vector<DirichletParams> view_params;
              view_params.reserve(views.size());
              for (const auto& v : views) view_params.emplace_back(v);
              return overall_loss(view_params, DirichletParams(global),
                                  DirichletParams(combined),
                                  OneHotLabel(label, global.size()), lambda);
          },
          py::arg("views"), py::arg("global_"), py::arg("combined"), py::arg("label"),
          py::arg("lambda_"));
    m.def("anneal_lambda",
          [](std::int64_t step, std::int64_t total_steps) {
              return AnnealSchedule{total_steps, 0}.lambda_at(step);
          },
          py::arg("step"), py::arg("total_steps"));
    m.def("poly_lr", &poly_lr, py::arg("base_lr"), py::arg("step"), py::arg("total"),
          py::arg("power"));

    m.def("accuracy",
          [](const Array& probs, const std::vector<std::size_t>& labels) {
              return accuracy(records_from_arrays(probs, labels, {}));
          },
          py::arg("probs"), py::arg("labels"));
    m.def("auc_binary", &auc_binary, py::arg("scores"), py::arg("labels"));
    m.def("ece",
          [](const Array& probs, const std::vector<std::size_t>& labels, int bins) {
              return ece(records_from_arrays(probs, labels, {}), bins);
          },
          py::arg("probs"), py::arg("labels"), py::arg("bins") = 10);

    m.def("spt_tokenize",
          [](const Array& image, std::size_t patch, const Array& weights,
             const py::object& bias) {
              return tokens_to_array(
                  spt_tokenize(image_from_array(image), patch, proj_from_arrays(weights, bias)));
          },
          py::arg("image"), py::arg("patch"), py::arg("weights"), py::arg("bias") = py::none());
    m.def("spt_raw_dim", &spt_raw_dim, py::arg("channels"), py::arg("patch"));
    m.def("lsa_attention",
          [](const Array& tokens, const Array& wq, const Array& wk, const Array& wv, double tau,
             bool mask_diagonal) {
              return tokens_to_array(lsa_attention(tokens_from_array(tokens),
                                                   lsa_params(wq, wk, wv, tau, mask_diagonal)));
          },
          py::arg("tokens"), py::arg("wq"), py::arg("wk"), py::arg("wv"), py::arg("tau") = 0.0,
          py::arg("mask_diagonal") = true);
    m.def("lsa_forward",
          [](const Array& tokens, const Array& wq, const Array& wk, const Array& wv, double tau,
             bool mask_diagonal) {
              return tokens_to_array(lsa_forward(tokens_from_array(tokens),
                                                 lsa_params(wq, wk, wv, tau, mask_diagonal)));
          },
          py::arg("tokens"), py::arg("wq"), py::arg("wk"), py::arg("wv"), py::arg("tau") = 0.0,
          py::arg("mask_diagonal") = true);

    m.def("_generate_json", [](const std::string& spec_json) {
        const SynthSpec spec = synth_spec_from_json(nlohmann::json::parse(spec_json));
        const MultiViewDataset data = generate(spec);
        const auto n = data.samples.size();
        const auto d = spec.features_per_view;
        Array views({spec.num_views, n, d});
        py::array_t<std::int64_t> labels(static_cast<py::ssize_t>(n));
        for (std::size_t i = 0; i < n; ++i) {
            labels.mutable_data()[i] = static_cast<std::int64_t>(data.samples[i].label);
            for (std::size_t k = 0; k < spec.num_views; ++k) {
                std::copy(data.samples[i].local_views[k].begin(),
                          data.samples[i].local_views[k].end(),
                          views.mutable_data() + (k * n + i) * d);
            }
        }
        return py::make_tuple(views, labels);
    });
    m.def("_bayes_accuracy_json",
          [](const std::string& spec_json, const std::vector<std::size_t>& views) {
              const SynthSpec spec = synth_spec_from_json(nlohmann::json::parse(spec_json));
              return views.empty() ? bayes_accuracy_combined(spec) : bayes_accuracy(spec, views);
          });
    m.def("_train_synthetic_json", &train_synthetic_json);
}
