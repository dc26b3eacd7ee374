#include "evidfuse/autodiff.hpp"

#include <cmath>
#include <string>

#include "evidfuse/errors.hpp"
#include "evidfuse/fusion.hpp"
#include "evidfuse/special_functions.hpp"

namespace evidfuse::autodiff {

namespace {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double stable_softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

} // namespace

const char* op_name(Op op) {
    switch (op) {
        case Op::kInput: return "input";
        case Op::kParam: return "param";
        case Op::kDense: return "dense";
        case Op::kRelu: return "relu";
        case Op::kSoftplus: return "softplus";
        case Op::kAddScalar: return "add_scalar";
        case Op::kAlphaToOpinion: return "alpha_to_opinion";
        case Op::kOpinionToAlpha: return "opinion_to_alpha";
        case Op::kCombinePair: return "combine_pair";
        case Op::kIntegratedCe: return "integrated_ce";
        case Op::kKlMasked: return "kl_masked";
        case Op::kWeightedSum: return "weighted_sum";
    }
    return "unknown";
}

void Tape::check_id(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
        throw domain_error("tape node id out of range");
    }
}

const Vec& Tape::val(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.op == Op::kParam ? *n.bound_value : n.value;
}

const Vec& Tape::value(int id) const {
    check_id(id);
    return val(id);
}

double Tape::scalar(int id) const {
    const Vec& v = value(id);
    if (v.size() != 1) throw domain_error("tape node is not a scalar");
    return v[0];
}

int Tape::push(Node node) {
    const std::size_t size = node.op == Op::kParam ? node.bound_value->size() : node.value.size();
    for (std::size_t i = 0; i < size; ++i) {
        const double v = node.op == Op::kParam ? (*node.bound_value)[i] : node.value[i];
        if (!std::isfinite(v)) {
            throw numeric_error("non-finite value in graph node #" +
                                std::to_string(nodes_.size()) + " (" + op_name(node.op) + ")");
        }
    }
    node.adjoint.assign(size, 0.0);
    nodes_.push_back(std::move(node));
    return static_cast<int>(nodes_.size()) - 1;
}

int Tape::input(Vec value) {
    Node n;
    n.op = Op::kInput;
    n.value = std::move(value);
    return push(std::move(n));
}

int Tape::param(const Vec* value, Vec* grad) {
    if (value == nullptr || grad == nullptr) throw domain_error("param needs bound storage");
    if (value->size() != grad->size()) throw domain_error("param grad buffer size mismatch");
    Node n;
    n.op = Op::kParam;
    n.bound_value = value;
    n.bound_grad = grad;
    return push(std::move(n));
}

int Tape::dense(int w, int b, int x, std::size_t rows, std::size_t cols) {
    check_id(w); check_id(b); check_id(x);
    if (val(w).size() != rows * cols || val(b).size() != rows || val(x).size() != cols) {
        throw domain_error("dense node shape mismatch");
    }
    Node n;
    n.op = Op::kDense;
    n.in = {w, b, x};
    n.rows = rows;
    n.cols = cols;
    n.value.resize(rows);
    const Vec& wv = val(w);
    const Vec& bv = val(b);
    const Vec& xv = val(x);
    for (std::size_t i = 0; i < rows; ++i) {
        double acc = bv[i];
        const double* row = wv.data() + i * cols;
        for (std::size_t j = 0; j < cols; ++j) acc += row[j] * xv[j];
        n.value[i] = acc;
    }
    return push(std::move(n));
}

int Tape::relu(int x) {
    check_id(x);
    Node n;
    n.op = Op::kRelu;
    n.in = {x};
    n.value = val(x);
    for (double& v : n.value) v = std::max(v, 0.0);
    return push(std::move(n));
}

int Tape::softplus(int x) {
    check_id(x);
    Node n;
    n.op = Op::kSoftplus;
    n.in = {x};
    n.value = val(x);
    for (double& v : n.value) v = stable_softplus(v);
    return push(std::move(n));
}

int Tape::add_scalar(int x, double constant) {
    check_id(x);
    Node n;
    n.op = Op::kAddScalar;
    n.in = {x};
    n.value = val(x);
    for (double& v : n.value) v += constant;
    return push(std::move(n));
}

int Tape::alpha_to_opinion(int alpha) {
    check_id(alpha);
    const Vec& a = val(alpha);
    const std::size_t c = a.size();
    if (c < 2) throw domain_error("alpha_to_opinion needs >= 2 classes");
    double strength = 0.0;
    for (double v : a) strength += v;
    Node n;
    n.op = Op::kAlphaToOpinion;
    n.in = {alpha};
    n.cache = strength;
    n.value.resize(c + 1);
    for (std::size_t i = 0; i < c; ++i) n.value[i] = (a[i] - 1.0) / strength;
    n.value[c] = static_cast<double>(c) / strength;
    return push(std::move(n));
}

int Tape::opinion_to_alpha(int opinion) {
    check_id(opinion);
    const Vec& o = val(opinion);
    if (o.size() < 3) throw domain_error("opinion_to_alpha needs >= 2 classes");
    const std::size_t c = o.size() - 1;
    const double u = o[c];
    Node n;
    n.op = Op::kOpinionToAlpha;
    n.in = {opinion};
    n.value.resize(c);
    const double strength = static_cast<double>(c) / u;
    for (std::size_t i = 0; i < c; ++i) n.value[i] = o[i] * strength + 1.0;
    return push(std::move(n));
}

int Tape::combine_pair(int left, int right) {
    check_id(left); check_id(right);
    const Vec& a = val(left);
    const Vec& b = val(right);
    if (a.size() != b.size() || a.size() < 3) {
        throw domain_error("combine_pair needs two opinion vectors of equal class count");
    }
    const std::size_t c = a.size() - 1;
    Node n;
    n.op = Op::kCombinePair;
    n.in = {left, right};
    n.value.resize(c + 1);
    n.cache = detail::dempster_raw(a.data(), a[c], b.data(), b[c], c,
                                   n.value.data(), n.value[c]);
    if (n.cache <= kConflictFloor) {
        throw numeric_error("total conflict in graph node #" +
                            std::to_string(nodes_.size()) + " (combine_pair)");
    }
    return push(std::move(n));
}

int Tape::integrated_ce(int alpha, std::size_t true_class) {
    check_id(alpha);
    const Vec& a = val(alpha);
    if (true_class >= a.size()) throw domain_error("label out of range in integrated_ce");
    double strength = 0.0;
    for (double v : a) strength += v;
    Node n;
    n.op = Op::kIntegratedCe;
    n.in = {alpha};
    n.true_class = true_class;
    n.cache = strength;
    n.value = {digamma(strength) - digamma(a[true_class])};
    return push(std::move(n));
}

int Tape::kl_masked(int alpha, std::size_t true_class) {
    check_id(alpha);
    const Vec& a = val(alpha);
    const std::size_t c = a.size();
    if (true_class >= c) throw domain_error("label out of range in kl_masked");
    double strength = 0.0;
    for (std::size_t i = 0; i < c; ++i) strength += (i == true_class) ? 1.0 : a[i];
    double value = log_gamma(strength) - log_gamma(static_cast<double>(c));
    const double psi_s = digamma(strength);
    for (std::size_t i = 0; i < c; ++i) {
        const double ai = (i == true_class) ? 1.0 : a[i];
        value -= log_gamma(ai);
        value += (ai - 1.0) * (digamma(ai) - psi_s);
    }
    Node n;
    n.op = Op::kKlMasked;
    n.in = {alpha};
    n.true_class = true_class;
    n.cache = strength;
    n.value = {value};
    return push(std::move(n));
}

int Tape::weighted_sum(std::vector<int> terms, std::vector<double> coeffs) {
    if (terms.empty() || terms.size() != coeffs.size()) {
        throw domain_error("weighted_sum needs matching terms and coefficients");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        check_id(terms[i]);
        acc += coeffs[i] * scalar(terms[i]);
    }
    Node n;
    n.op = Op::kWeightedSum;
    n.in = std::move(terms);
    n.coeffs = std::move(coeffs);
    n.value = {acc};
    return push(std::move(n));
}

void Tape::backward(int root) {
    check_id(root);
    if (val(root).size() != 1) throw domain_error("backward root must be a scalar node");
    nodes_[static_cast<std::size_t>(root)].adjoint[0] = 1.0;

    for (int id = root; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        switch (n.op) {
            case Op::kInput:
                break;
            case Op::kParam: {
                Vec& g = *n.bound_grad;
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.adjoint[i];
                break;
            }
            case Op::kDense: {
                Vec& dw = nodes_[n.in[0]].adjoint;
                Vec& db = nodes_[n.in[1]].adjoint;
                Vec& dx = nodes_[n.in[2]].adjoint;
                const Vec& wv = val(n.in[0]);
                const Vec& xv = val(n.in[2]);
                for (std::size_t i = 0; i < n.rows; ++i) {
                    const double dz = n.adjoint[i];
                    if (dz == 0.0) continue;
                    db[i] += dz;
                    const double* row = wv.data() + i * n.cols;
                    double* wrow = dw.data() + i * n.cols;
                    for (std::size_t j = 0; j < n.cols; ++j) {
                        wrow[j] += dz * xv[j];
                        dx[j] += dz * row[j];
                    }
                }
                break;
            }
            case Op::kRelu: {
                Vec& dx = nodes_[n.in[0]].adjoint;
                const Vec& xv = val(n.in[0]);
                for (std::size_t i = 0; i < dx.size(); ++i) {
                    if (xv[i] > 0.0) dx[i] += n.adjoint[i];
                }
                break;
            }
            case Op::kSoftplus: {
                Vec& dx = nodes_[n.in[0]].adjoint;
                const Vec& xv = val(n.in[0]);
                for (std::size_t i = 0; i < dx.size(); ++i) {
                    dx[i] += n.adjoint[i] * sigmoid(xv[i]);
                }
                break;
            }
            case Op::kAddScalar: {
                Vec& dx = nodes_[n.in[0]].adjoint;
                for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += n.adjoint[i];
                break;
            }
            case Op::kAlphaToOpinion: {
                // b_c = (alpha_c - 1)/S, u = C/S
                Vec& da = nodes_[n.in[0]].adjoint;
                const Vec& a = val(n.in[0]);
                const std::size_t c = a.size();
                const double s = n.cache;
                double weighted = n.adjoint[c] * static_cast<double>(c);
                for (std::size_t i = 0; i < c; ++i) weighted += n.adjoint[i] * (a[i] - 1.0);
                const double common = weighted / (s * s);
                for (std::size_t i = 0; i < c; ++i) {
                    da[i] += n.adjoint[i] / s - common;
                }
                break;
            }
            case Op::kOpinionToAlpha: {
                // alpha_c = b_c * C/u + 1
                Vec& dop = nodes_[n.in[0]].adjoint;
                const Vec& o = val(n.in[0]);
                const std::size_t c = o.size() - 1;
                const double u = o[c];
                const double cd = static_cast<double>(c);
                double bsum = 0.0;
                for (std::size_t i = 0; i < c; ++i) {
                    dop[i] += n.adjoint[i] * cd / u;
                    bsum += n.adjoint[i] * o[i];
                }
                dop[c] -= bsum * cd / (u * u);
                break;
            }
            case Op::kCombinePair: {
                Vec& dl = nodes_[n.in[0]].adjoint;
                Vec& dr = nodes_[n.in[1]].adjoint;
                const Vec& a = val(n.in[0]);
                const Vec& b = val(n.in[1]);
                const std::size_t c = a.size() - 1;
                const double u1 = a[c], u2 = b[c];
                const double inv_n = 1.0 / n.cache;
                double sum1 = 0.0, sum2 = 0.0;
                for (std::size_t i = 0; i < c; ++i) {
                    sum1 += a[i];
                    sum2 += b[i];
                }
                // T = sum_c adj_b_c * b_out_c + adj_u * u_out picks up the
                // dependence of every output on N.
                double t = n.adjoint[c] * n.value[c];
                for (std::size_t i = 0; i < c; ++i) t += n.adjoint[i] * n.value[i];
                double du1 = n.adjoint[c] * u2;
                double du2 = n.adjoint[c] * u1;
                for (std::size_t j = 0; j < c; ++j) {
                    dl[j] += (n.adjoint[j] * (b[j] + u2) + t * (sum2 - b[j])) * inv_n;
                    dr[j] += (n.adjoint[j] * (a[j] + u1) + t * (sum1 - a[j])) * inv_n;
                    du1 += n.adjoint[j] * b[j];
                    du2 += n.adjoint[j] * a[j];
                }
                dl[c] += du1 * inv_n;
                dr[c] += du2 * inv_n;
                break;
            }
            case Op::kIntegratedCe: {
                Vec& da = nodes_[n.in[0]].adjoint;
                const Vec& a = val(n.in[0]);
                const double dz = n.adjoint[0];
                if (dz == 0.0) break;
                const double psi1_s = trigamma(n.cache);
                for (std::size_t i = 0; i < a.size(); ++i) {
                    double d = psi1_s;
                    if (i == n.true_class) d -= trigamma(a[i]);
                    da[i] += dz * d;
                }
                break;
            }
            case Op::kKlMasked: {
                // dKL/d(alpha_tilde_c) = (a_c - 1) psi'(a_c) - (S - C) psi'(S);
                // the masked (true class) entry gets no gradient.
                Vec& da = nodes_[n.in[0]].adjoint;
                const Vec& a = val(n.in[0]);
                const double dz = n.adjoint[0];
                if (dz == 0.0) break;
                const std::size_t c = a.size();
                const double s = n.cache;
                const double tail = (s - static_cast<double>(c)) * trigamma(s);
                for (std::size_t i = 0; i < c; ++i) {
                    if (i == n.true_class) continue;
                    da[i] += dz * ((a[i] - 1.0) * trigamma(a[i]) - tail);
                }
                break;
            }
            case Op::kWeightedSum: {
                for (std::size_t i = 0; i < n.in.size(); ++i) {
                    nodes_[n.in[i]].adjoint[0] += n.adjoint[0] * n.coeffs[i];
                }
                break;
            }
        }
    }
}

} // namespace evidfuse::autodiff
