#pragma once

#include <cstddef>
#include <vector>

#include <json.hpp>

namespace evidfuse {

inline constexpr double kUnitSumTol = 1e-12;

// Non-negative per-class support produced by an evidential network.
class Evidence {
public:
    explicit Evidence(std::vector<double> values);

    std::size_t num_classes() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }
    double total() const;

private:
    std::vector<double> values_;
};

// Dirichlet parameters alpha with strength S = sum(alpha). Built from
// evidence as alpha = e + 1, so every alpha_c >= 1 and S >= C.
class DirichletParams {
public:
    explicit DirichletParams(std::vector<double> alpha);

    std::size_t num_classes() const { return alpha_.size(); }
    const std::vector<double>& alpha() const { return alpha_; }
    double strength() const { return strength_; }

private:
    std::vector<double> alpha_;
    double strength_;
};

// Subjective-logic opinion: per-class belief masses plus an explicit
// uncertainty mass, constrained to u + sum(b) = 1. Uncertainty is stored,
// not derived, because fusion outputs are opinions with no evidence behind
// them. u = 0 is rejected: finite evidence always leaves u > 0, so a zero
// here means an upstream bug.
class Opinion {
public:
    Opinion(std::vector<double> beliefs, double uncertainty);

    std::size_t num_classes() const { return beliefs_.size(); }
    const std::vector<double>& beliefs() const { return beliefs_; }
    double uncertainty() const { return uncertainty_; }

private:
    std::vector<double> beliefs_;
    double uncertainty_;
};

// Point on the probability simplex.
class ProbVector {
public:
    explicit ProbVector(std::vector<double> probs);

    std::size_t num_classes() const { return probs_.size(); }
    const std::vector<double>& probs() const { return probs_; }

private:
    std::vector<double> probs_;
};

// b_c = e_c / (sum(e) + C), u = C / (sum(e) + C).
Opinion evidence_to_opinion(const Evidence& e);

// alpha = e + 1.
DirichletParams evidence_to_dirichlet(const Evidence& e);

// Inverse mapping: S = C/u, alpha_c = b_c * S + 1.
DirichletParams opinion_to_dirichlet(const Opinion& d);
DirichletParams opinion_to_dirichlet(const Opinion& d, std::size_t num_classes);

// Expected probabilities under Dir(alpha): p_c = alpha_c / S.
ProbVector expected_probabilities(const DirichletParams& a);

// Zero beliefs, u = 1; the identity element of fusion.
Opinion vacuous_opinion(std::size_t num_classes);

// JSON forms: {"beliefs": [...], "uncertainty": x} and {"evidence": [...]}.
nlohmann::json opinion_to_json(const Opinion& d);
Opinion opinion_from_json(const nlohmann::json& j);
nlohmann::json evidence_to_json(const Evidence& e);
Evidence evidence_from_json(const nlohmann::json& j);

} // namespace evidfuse
