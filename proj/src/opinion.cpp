#include "evidfuse/opinion.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "evidfuse/errors.hpp"

namespace evidfuse {

namespace {

void require_class_count(std::size_t n) {
    if (n < 2) {
        throw domain_error("need at least 2 classes, got " + std::to_string(n));
    }
}

} // namespace

Evidence::Evidence(std::vector<double> values) : values_(std::move(values)) {
    require_class_count(values_.size());
    for (double v : values_) {
        if (!std::isfinite(v)) throw domain_error("evidence must be finite");
        if (v < 0.0) throw domain_error("evidence must be non-negative");
    }
}

double Evidence::total() const {
    return std::accumulate(values_.begin(), values_.end(), 0.0);
}

DirichletParams::DirichletParams(std::vector<double> alpha) : alpha_(std::move(alpha)) {
    require_class_count(alpha_.size());
    strength_ = 0.0;
    for (double a : alpha_) {
        if (!std::isfinite(a)) throw domain_error("alpha must be finite");
        if (a < 1.0) throw domain_error("alpha must be >= 1");
        strength_ += a;
    }
}

Opinion::Opinion(std::vector<double> beliefs, double uncertainty)
    : beliefs_(std::move(beliefs)), uncertainty_(uncertainty) {
    require_class_count(beliefs_.size());
    double sum = uncertainty_;
    for (double b : beliefs_) {
        if (!std::isfinite(b)) throw domain_error("belief must be finite");
        if (b < 0.0) throw domain_error("belief must be non-negative");
        sum += b;
    }
    if (!(uncertainty_ > 0.0) || uncertainty_ > 1.0) {
        throw domain_error("uncertainty must lie in (0, 1]");
    }
    if (std::abs(sum - 1.0) > kUnitSumTol) {
        throw domain_error("opinion must satisfy u + sum(b) = 1, off by " +
                           std::to_string(sum - 1.0));
    }
}

ProbVector::ProbVector(std::vector<double> probs) : probs_(std::move(probs)) {
    require_class_count(probs_.size());
    double sum = 0.0;
    for (double p : probs_) {
        if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
            throw domain_error("probability entries must lie in [0, 1]");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > kUnitSumTol) {
        throw domain_error("probabilities must sum to 1");
    }
}

Opinion evidence_to_opinion(const Evidence& e) {
    const double c = static_cast<double>(e.num_classes());
    const double strength = e.total() + c;
    std::vector<double> beliefs(e.num_classes());
    for (std::size_t i = 0; i < beliefs.size(); ++i) {
        beliefs[i] = e.values()[i] / strength;
    }
    return Opinion(std::move(beliefs), c / strength);
}

DirichletParams evidence_to_dirichlet(const Evidence& e) {
    std::vector<double> alpha(e.values());
    for (double& a : alpha) a += 1.0;
    return DirichletParams(std::move(alpha));
}

DirichletParams opinion_to_dirichlet(const Opinion& d) {
    // u > 0 is an Opinion invariant, so S = C/u is always finite.
    const double c = static_cast<double>(d.num_classes());
    const double strength = c / d.uncertainty();
    std::vector<double> alpha(d.num_classes());
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        alpha[i] = d.beliefs()[i] * strength + 1.0;
    }
    return DirichletParams(std::move(alpha));
}

DirichletParams opinion_to_dirichlet(const Opinion& d, std::size_t num_classes) {
    if (num_classes != d.num_classes()) {
        throw domain_error("class count does not match opinion");
    }
    return opinion_to_dirichlet(d);
}

ProbVector expected_probabilities(const DirichletParams& a) {
    std::vector<double> probs(a.num_classes());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        probs[i] = a.alpha()[i] / a.strength();
    }
    return ProbVector(std::move(probs));
}

Opinion vacuous_opinion(std::size_t num_classes) {
    require_class_count(num_classes);
    return Opinion(std::vector<double>(num_classes, 0.0), 1.0);
}

nlohmann::json opinion_to_json(const Opinion& d) {
    return nlohmann::json{{"beliefs", d.beliefs()}, {"uncertainty", d.uncertainty()}};
}

Opinion opinion_from_json(const nlohmann::json& j) {
    if (!j.contains("beliefs") || !j.contains("uncertainty")) {
        throw parse_error("opinion JSON needs \"beliefs\" and \"uncertainty\"");
    }
    return Opinion(j.at("beliefs").get<std::vector<double>>(),
                   j.at("uncertainty").get<double>());
}

nlohmann::json evidence_to_json(const Evidence& e) {
    return nlohmann::json{{"evidence", e.values()}};
}

Evidence evidence_from_json(const nlohmann::json& j) {
    if (!j.contains("evidence")) throw parse_error("evidence JSON needs \"evidence\"");
    return Evidence(j.at("evidence").get<std::vector<double>>());
}

} // namespace evidfuse
