// evidfuse: uncertainty-aware multi-view fusion pipeline.
//
// Subcommands: gen-data, extract-views, train, fuse, evaluate, lsa-demo.
// Every run writes its artifacts plus one manifest.json into --output-dir;
// reruns with the same seed and config are byte-identical.
//
// Exit codes: 0 success, 2 usage, 3 malformed input, 4 invariant violation,
// 5 I/O failure, 6 numeric failure, 1 internal error. Failures print one
// machine-readable JSON object to stderr.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "evidfuse/attention.hpp"
#include "evidfuse/csv.hpp"
#include "evidfuse/dataset.hpp"
#include "evidfuse/errors.hpp"
#include "evidfuse/fusion.hpp"
#include "evidfuse/manifest.hpp"
#include "evidfuse/metrics.hpp"
#include "evidfuse/opinion.hpp"
#include "evidfuse/rng.hpp"
#include "evidfuse/synth.hpp"
#include "evidfuse/trainer.hpp"
#include "evidfuse/version.hpp"
#include "evidfuse/view_extraction.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct CommonOpts {
    std::string output_dir;
    std::optional<std::uint64_t> seed;
};

void emit_error(const std::string& kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
}

fs::path prepare_output_dir(const std::string& dir) {
    if (dir.empty()) throw evidfuse::domain_error("--output-dir is required");
    fs::path path(dir);
    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec) throw evidfuse::io_error("cannot create output dir " + path.string());
    return path;
}

void write_manifest(const fs::path& out_dir, const std::string& command, std::uint64_t seed,
                    const std::string& resolved_config,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& artifacts) {
    evidfuse::RunManifest manifest;
    manifest.command = command;
    manifest.tool_version = evidfuse::kVersion;
    manifest.seed = seed;
    manifest.config_hash = evidfuse::fnv1a64_hex(resolved_config);
    for (const auto& input : inputs) {
        manifest.inputs.emplace_back(input, evidfuse::hash_file(input));
    }
    manifest.artifacts = artifacts;
    evidfuse::save_manifest(out_dir / "manifest.json", manifest);
}

json parse_json_file(const std::string& path) {
    try {
        return json::parse(evidfuse::read_text_file(path));
    } catch (const json::exception& e) {
        throw evidfuse::parse_error(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------- gen-data

int run_gen_data(const std::string& config_path, const CommonOpts& opts) {
    evidfuse::SynthSpec spec = evidfuse::synth_spec_from_json(parse_json_file(config_path));
    if (opts.seed) spec.seed = *opts.seed;
    const fs::path out = prepare_output_dir(opts.output_dir);

    const evidfuse::MultiViewDataset data = evidfuse::generate(spec);
    evidfuse::write_features_csv(out / "features.csv", data);

    const std::string resolved = evidfuse::synth_spec_to_json(spec).dump(2) + "\n";
    evidfuse::write_text_file(out / "spec.json", resolved);

    ordered_json bayes;
    ordered_json per_view = ordered_json::array();
    for (std::size_t k = 0; k < spec.num_views; ++k) {
        per_view.push_back(evidfuse::bayes_accuracy_single(spec, k));
    }
    bayes["per_view"] = std::move(per_view);
    bayes["combined"] = evidfuse::bayes_accuracy_combined(spec);
    evidfuse::write_text_file(out / "bayes.json", bayes.dump(2) + "\n");

    write_manifest(out, "gen-data", spec.seed, resolved, {config_path},
                   {"features.csv", "spec.json", "bayes.json"});
    std::cout << "wrote " << data.samples.size() << " samples ("
              << spec.num_views << " views) to " << out.string() << "\n";
    return 0;
}

// ------------------------------------------------------------------- train

ordered_json prediction_line(std::size_t sample_id, const evidfuse::SamplePrediction& p,
                             std::size_t label) {
    ordered_json line;
    line["sample_id"] = sample_id;
    line["probs"] = p.probs.probs();
    line["label"] = label;
    line["uncertainty"] = p.fused.combined.uncertainty();
    std::vector<double> view_u;
    view_u.reserve(p.view_opinions.size());
    for (const auto& o : p.view_opinions) view_u.push_back(o.uncertainty());
    line["view_uncertainties"] = std::move(view_u);
    line["conflicts"] = p.fused.step_conflicts;
    return line;
}

ordered_json metrics_json(const std::vector<evidfuse::PredictionRecord>& records,
                          std::size_t num_classes, int bins) {
    ordered_json m;
    m["acc"] = evidfuse::accuracy(records);
    if (num_classes == 2) {
        std::vector<double> scores;
        std::vector<int> labels;
        bool both = false, seen0 = false, seen1 = false;
        for (const auto& r : records) {
            scores.push_back(r.probs().probs()[1]);
            labels.push_back(r.label() == 1 ? 1 : 0);
            seen0 |= r.label() == 0;
            seen1 |= r.label() == 1;
        }
        both = seen0 && seen1;
        if (both) {
            m["auc"] = evidfuse::auc_binary(scores, labels);
        } else {
            m["auc"] = nullptr;
        }
    } else {
        m["auc"] = nullptr; // one-vs-rest AUC is out of scope for C > 2
    }
    m["ece"] = evidfuse::ece(records, bins);
    m["mean_uncertainty"] = evidfuse::mean_uncertainty(records);
    return m;
}

int run_train(const std::string& config_path, const std::string& input_path,
              const CommonOpts& opts) {
    evidfuse::TrainConfig config = evidfuse::train_config_from_json(parse_json_file(config_path));
    if (opts.seed) config.seed = *opts.seed;
    const fs::path out = prepare_output_dir(opts.output_dir);

    const evidfuse::MultiViewDataset full = evidfuse::read_features_csv(input_path);
    const auto n_test = static_cast<std::size_t>(
        std::llround(config.test_fraction * static_cast<double>(full.samples.size())));
    if (full.samples.size() - n_test < 1) {
        throw evidfuse::domain_error("test_fraction leaves no training samples");
    }
    evidfuse::MultiViewDataset train_set{full.num_classes, full.num_views, {}};
    evidfuse::MultiViewDataset test_set{full.num_classes, full.num_views, {}};
    train_set.samples.assign(full.samples.begin(), full.samples.end() - n_test);
    test_set.samples.assign(full.samples.end() - n_test, full.samples.end());

    evidfuse::MultiViewModel model =
        evidfuse::make_model(train_set, config.hidden_dims, config.seed);
    const auto history = evidfuse::train(model, train_set, config);

    evidfuse::save_model(out / "model.json", model);
    evidfuse::write_text_file(out / "history.csv", evidfuse::history_to_csv(history));

    const evidfuse::MultiViewDataset& eval_set = n_test > 0 ? test_set : train_set;
    const std::size_t id_offset = n_test > 0 ? train_set.samples.size() : 0;
    std::ostringstream lines;
    std::vector<evidfuse::PredictionRecord> records;
    for (std::size_t i = 0; i < eval_set.samples.size(); ++i) {
        const auto p = evidfuse::predict(model, eval_set.samples[i]);
        lines << prediction_line(id_offset + i, p, eval_set.samples[i].label).dump() << "\n";
        records.emplace_back(p.probs, eval_set.samples[i].label,
                             p.fused.combined.uncertainty());
    }
    evidfuse::write_text_file(out / "predictions.jsonl", lines.str());

    const ordered_json metrics = metrics_json(records, full.num_classes, 10);
    evidfuse::write_text_file(out / "metrics.json", metrics.dump(2) + "\n");

    const std::string resolved = evidfuse::train_config_to_json(config).dump(2) + "\n";
    evidfuse::write_text_file(out / "train_config.json", resolved);
    write_manifest(out, "train", config.seed, resolved, {config_path, input_path},
                   {"model.json", "history.csv", "predictions.jsonl", "metrics.json",
                    "train_config.json"});
    std::cout << metrics.dump(2) << "\n";
    return 0;
}

// -------------------------------------------------------------------- fuse

struct FuseInput {
    std::map<long, std::map<long, evidfuse::Opinion>> opinions; // sample -> view -> opinion
    std::map<long, long> labels;                                // optional labels
};

FuseInput read_opinions_jsonl(const std::string& path) {
    FuseInput input;
    std::istringstream stream(evidfuse::read_text_file(path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw evidfuse::parse_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.contains("sample_id") || !j.contains("view_id")) {
            throw evidfuse::parse_error(path + ":" + std::to_string(line_no) +
                                        ": opinion lines need sample_id and view_id");
        }
        const long sample = j.at("sample_id").get<long>();
        const long view = j.at("view_id").get<long>();
        if (!input.opinions[sample].emplace(view, evidfuse::opinion_from_json(j)).second) {
            throw evidfuse::parse_error("duplicate (sample, view) line " +
                                        std::to_string(line_no) + " in " + path);
        }
        if (j.contains("label")) input.labels[sample] = j.at("label").get<long>();
    }
    if (input.opinions.empty()) throw evidfuse::parse_error("no opinion lines in " + path);
    return input;
}

FuseInput read_evidence_csv(const std::string& path) {
    std::vector<std::string> header;
    const auto rows = evidfuse::read_csv(path, header);
    if (header.size() < 5 || header[0] != "sample_id" || header[1] != "view_id" ||
        header[2] != "label") {
        throw evidfuse::parse_error(
            "evidence CSV must have header sample_id,view_id,label,e_1,...,e_C");
    }
    const std::size_t c = header.size() - 3;
    FuseInput input;
    for (const auto& row : rows) {
        const long sample = evidfuse::parse_long_field(row[0], path);
        const long view = evidfuse::parse_long_field(row[1], path);
        const long label = evidfuse::parse_long_field(row[2], path);
        std::vector<double> e(c);
        for (std::size_t i = 0; i < c; ++i) {
            e[i] = evidfuse::parse_double_field(row[3 + i], path);
        }
        if (!input.opinions[sample]
                 .emplace(view, evidfuse::evidence_to_opinion(evidfuse::Evidence(e)))
                 .second) {
            throw evidfuse::parse_error("duplicate (sample, view) row in " + path);
        }
        input.labels[sample] = label;
    }
    return input;
}

int run_fuse(const std::string& input_path, const CommonOpts& opts) {
    const fs::path out = prepare_output_dir(opts.output_dir);
    const bool is_csv = fs::path(input_path).extension() == ".csv";
    const FuseInput input = is_csv ? read_evidence_csv(input_path)
                                   : read_opinions_jsonl(input_path);

    std::ostringstream lines;
    for (const auto& [sample, views] : input.opinions) {
        std::vector<evidfuse::Opinion> opinions;
        std::vector<std::string> ids;
        for (const auto& [view, opinion] : views) {
            opinions.push_back(opinion);
            ids.push_back(std::to_string(view));
        }
        const evidfuse::FusionResult fused = evidfuse::combine_many(opinions, std::move(ids));
        ordered_json line;
        line["sample_id"] = sample;
        line["combined"] = evidfuse::opinion_to_json(fused.combined);
        line["conflicts"] = fused.step_conflicts;
        line["order"] = fused.order;
        line["probs"] =
            evidfuse::expected_probabilities(evidfuse::opinion_to_dirichlet(fused.combined))
                .probs();
        const auto label = input.labels.find(sample);
        if (label != input.labels.end()) line["label"] = label->second;
        lines << line.dump() << "\n";
    }
    evidfuse::write_text_file(out / "fused.jsonl", lines.str());

    const std::string resolved = json{{"input", fs::path(input_path).filename().string()}}.dump();
    write_manifest(out, "fuse", opts.seed.value_or(0), resolved, {input_path}, {"fused.jsonl"});
    std::cout << "fused " << input.opinions.size() << " samples\n";
    return 0;
}

// ---------------------------------------------------------------- evaluate

int run_evaluate(const std::string& input_path, int bins, const CommonOpts& opts) {
    const fs::path out = prepare_output_dir(opts.output_dir);
    std::istringstream stream(evidfuse::read_text_file(input_path));
    std::string line;
    std::vector<evidfuse::PredictionRecord> records;
    std::size_t num_classes = 0;
    std::size_t line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw evidfuse::parse_error(input_path + ":" + std::to_string(line_no) + ": " +
                                        e.what());
        }
        try {
            evidfuse::ProbVector probs(j.at("probs").get<std::vector<double>>());
            num_classes = probs.num_classes();
            records.emplace_back(std::move(probs), j.at("label").get<std::size_t>(),
                                 j.value("uncertainty", 0.0));
        } catch (const json::exception& e) {
            throw evidfuse::parse_error(input_path + ":" + std::to_string(line_no) + ": " +
                                        e.what());
        }
    }
    if (records.empty()) throw evidfuse::parse_error("no prediction lines in " + input_path);

    const ordered_json metrics = metrics_json(records, num_classes, bins);
    evidfuse::write_text_file(out / "metrics.json", metrics.dump(2) + "\n");
    const std::string resolved = json{{"bins", bins}}.dump();
    write_manifest(out, "evaluate", opts.seed.value_or(0), resolved, {input_path},
                   {"metrics.json"});
    std::cout << metrics.dump(2) << "\n";
    return 0;
}

// ------------------------------------------------------------ extract-views

int run_extract_views(const std::string& input_path, std::size_t roi, std::size_t window,
                      std::size_t stride, const std::string& threshold_arg, bool skip_preprocess,
                      const CommonOpts& opts) {
    const fs::path out = prepare_output_dir(opts.output_dir);
    std::optional<double> threshold;
    if (threshold_arg != "otsu") {
        threshold = evidfuse::parse_double_field(threshold_arg, "--threshold");
    }

    evidfuse::RasterImage img = evidfuse::read_pgm(input_path);
    if (!skip_preprocess) img = evidfuse::preprocess(img);
    const evidfuse::ViewSet set = evidfuse::extract_views(img, roi, window, stride, threshold);

    std::vector<std::string> artifacts;
    ordered_json scales = ordered_json::array();
    for (std::size_t v = 0; v < set.locals.size(); ++v) {
        const std::string name = "view_" + std::to_string(v) + ".pgm";
        const evidfuse::PgmScale scale = evidfuse::write_pgm16(out / name, set.locals[v]);
        scales.push_back({{"file", name}, {"offset", scale.offset}, {"scale", scale.scale}});
        artifacts.push_back(name);
    }
    const evidfuse::PgmScale gscale = evidfuse::write_pgm16(out / "global.pgm", set.global);
    scales.push_back({{"file", "global.pgm"}, {"offset", gscale.offset}, {"scale", gscale.scale}});
    artifacts.push_back("global.pgm");

    ordered_json geometry = evidfuse::geometry_to_json(set.geometry);
    geometry["preprocessing"] = ordered_json{{"enabled", !skip_preprocess},
                                             {"target_spacing_mm", 1.5},
                                             {"crop", 256},
                                             {"zscore", "foreground"}};
    geometry["threshold"] = threshold ? ordered_json(*threshold) : ordered_json("otsu");
    geometry["pgm_scaling"] = std::move(scales);
    evidfuse::write_text_file(out / "geometry.json", geometry.dump(2) + "\n");
    artifacts.push_back("geometry.json");

    const std::string resolved = json{{"roi", roi},
                                      {"window", window},
                                      {"stride", stride},
                                      {"threshold", threshold_arg},
                                      {"preprocess", !skip_preprocess}}
                                     .dump();
    write_manifest(out, "extract-views", opts.seed.value_or(0), resolved, {input_path},
                   artifacts);
    std::cout << "extracted " << set.locals.size() << " views into " << out.string() << "\n";
    return 0;
}

// ----------------------------------------------------------------- lsa-demo

int run_lsa_demo(const std::string& input_path, std::size_t patch, std::size_t dim, double tau,
                 const CommonOpts& opts) {
    const fs::path out = prepare_output_dir(opts.output_dir);
    const std::uint64_t seed = opts.seed.value_or(0);
    evidfuse::SplitMix64 rng(seed);

    evidfuse::ImageTensor img;
    std::vector<std::string> inputs;
    if (!input_path.empty()) {
        const evidfuse::RasterImage raster = evidfuse::read_pgm(input_path);
        img = evidfuse::ImageTensor{raster.height, raster.width, 1, raster.pixels};
        inputs.push_back(input_path);
    } else {
        img = evidfuse::ImageTensor::zeros(32, 32, 1);
        for (double& v : img.data) v = rng.normal();
    }

    const auto raw_dim = evidfuse::spt_raw_dim(img.channels, patch);
    const auto proj = evidfuse::LinearProj::random(raw_dim, dim, rng);
    evidfuse::LSAParams params = evidfuse::LSAParams::random(dim, dim, dim, rng);
    if (tau > 0.0) params.temperature = tau;

    const evidfuse::TokenMatrix tokens = evidfuse::spt_tokenize(img, patch, proj);
    const evidfuse::TokenMatrix attn = evidfuse::lsa_attention(tokens, params);
    const evidfuse::TokenMatrix output = evidfuse::lsa_forward(tokens, params);

    auto matrix_csv = [](const evidfuse::TokenMatrix& m) {
        std::ostringstream text;
        for (std::size_t i = 0; i < m.num_tokens; ++i) {
            for (std::size_t j = 0; j < m.dim; ++j) {
                if (j) text << ",";
                text << evidfuse::format_double(m.at(i, j));
            }
            text << "\n";
        }
        return text.str();
    };
    evidfuse::write_text_file(out / "attention.csv", matrix_csv(attn));
    evidfuse::write_text_file(out / "lsa_output.csv", matrix_csv(output));

    const std::string resolved = json{{"patch", patch},
                                      {"dim", dim},
                                      {"tau", params.temperature},
                                      {"tokens", tokens.num_tokens}}
                                     .dump();
    write_manifest(out, "lsa-demo", seed, resolved, inputs, {"attention.csv", "lsa_output.csv"});
    std::cout << "attention map for " << tokens.num_tokens << " tokens written to "
              << out.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"uncertainty-aware multi-view evidential fusion"};
    app.require_subcommand(1);
    app.set_version_flag("--version", evidfuse::kVersion);

    CommonOpts opts;
    std::string config_path, input_path, threshold = "otsu";
    std::size_t roi = 160, window = 96, stride = 32;
    std::size_t patch = 8, dim = 16;
    double tau = 0.0;
    int bins = 10;
    bool skip_preprocess = false;

    auto add_common = [&](CLI::App* cmd, bool with_seed = true) {
        cmd->add_option("--output-dir", opts.output_dir, "directory for artifacts + manifest")
            ->required();
        if (with_seed) {
            cmd->add_option("--seed", [&opts](const CLI::results_t& res) {
                std::uint64_t seed = 0;
                const char* end = res[0].data() + res[0].size();
                auto [ptr, ec] = std::from_chars(res[0].data(), end, seed);
                if (ec != std::errc{} || ptr != end) return false;
                opts.seed = seed;
                return true;
            }, "seed override (all randomness flows from this)");
        }
    };

    CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic multi-view dataset");
    gen->add_option("--config", config_path, "synth spec JSON")->required();
    add_common(gen);

    CLI::App* train_cmd = app.add_subcommand("train", "train evidential nets through fusion");
    train_cmd->add_option("--config", config_path, "train config JSON")->required();
    train_cmd->add_option("--input", input_path, "feature CSV")->required();
    add_common(train_cmd);

    CLI::App* fuse_cmd = app.add_subcommand("fuse", "combine per-view opinions or evidence");
    fuse_cmd->add_option("--input", input_path, "opinions .jsonl or evidence .csv")->required();
    add_common(fuse_cmd);

    CLI::App* eval_cmd = app.add_subcommand("evaluate", "metrics over prediction JSON lines");
    eval_cmd->add_option("--input", input_path, "predictions .jsonl")->required();
    eval_cmd->add_option("--bins", bins, "ECE bin count")->default_val(10);
    add_common(eval_cmd);

    CLI::App* extract = app.add_subcommand("extract-views", "Fig-style view extraction from PGM");
    extract->add_option("--input", input_path, "grayscale PGM (P5)")->required();
    extract->add_option("--roi", roi, "ROI side length")->default_val(160);
    extract->add_option("--window", window, "window side length")->default_val(96);
    extract->add_option("--stride", stride, "window stride")->default_val(32);
    extract->add_option("--threshold", threshold, "segmentation threshold or 'otsu'");
    extract->add_flag("--skip-preprocess", skip_preprocess,
                      "operate on raw pixels (no resample/crop/z-score)");
    add_common(extract);

    CLI::App* lsa = app.add_subcommand("lsa-demo", "dump an SPT+LSA attention map as CSV");
    lsa->add_option("--input", input_path, "optional PGM input (random image otherwise)");
    lsa->add_option("--patch", patch, "patch size (even)")->default_val(8);
    lsa->add_option("--dim", dim, "token embedding dim")->default_val(16);
    lsa->add_option("--tau", tau, "temperature override (default sqrt(d_k))");
    add_common(lsa);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        emit_error("usage", e.what());
        return 2;
    }

    try {
        if (gen->parsed()) return run_gen_data(config_path, opts);
        if (train_cmd->parsed()) return run_train(config_path, input_path, opts);
        if (fuse_cmd->parsed()) return run_fuse(input_path, opts);
        if (eval_cmd->parsed()) return run_evaluate(input_path, bins, opts);
        if (extract->parsed()) {
            return run_extract_views(input_path, roi, window, stride, threshold, skip_preprocess,
                                     opts);
        }
        if (lsa->parsed()) return run_lsa_demo(input_path, patch, dim, tau, opts);
        emit_error("usage", "no subcommand given");
        return 2;
    } catch (const evidfuse::parse_error& e) {
        emit_error("parse", e.what());
        return 3;
    } catch (const evidfuse::domain_error& e) {
        emit_error("domain", e.what());
        return 4;
    } catch (const evidfuse::io_error& e) {
        emit_error("io", e.what());
        return 5;
    } catch (const evidfuse::numeric_error& e) {
        emit_error("numeric", e.what());
        return 6;
    } catch (const std::exception& e) {
        emit_error("internal", e.what());
        return 1;
    }
}
