#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace evidfuse::autodiff {

using Vec = std::vector<double>;

// Primitive operations of the fixed training graph:
// features -> dense/relu stacks -> softplus evidence -> opinions ->
// Dempster fusion -> Dirichlet losses.
enum class Op {
    kInput,
    kParam,
    kDense,
    kRelu,
    kSoftplus,
    kAddScalar,
    kAlphaToOpinion,   // [alpha_1..alpha_C] -> [b_1..b_C, u]
    kOpinionToAlpha,   // [b_1..b_C, u] -> [alpha_1..alpha_C]
    kCombinePair,      // two opinion vectors -> combined opinion vector
    kIntegratedCe,     // alpha -> scalar, label baked into the node
    kKlMasked,         // alpha -> scalar KL(masked alpha || uniform)
    kWeightedSum,      // sum of scalar nodes with fixed coefficients
};

const char* op_name(Op op);

// Reverse-mode tape over vector-valued nodes. Nodes are appended in forward
// order, so node indices are already a topological order; backward() walks
// them once in reverse and accumulates adjoints. Every node value is checked
// finite on creation and failures name the offending node.
class Tape {
public:
    int input(Vec value);

    // Leaf bound to external parameter storage; backward() accumulates into
    // *grad, so batches sum contributions in call order.
    int param(const Vec* value, Vec* grad);

    // value = W x + b with W row-major (rows x cols).
    int dense(int w, int b, int x, std::size_t rows, std::size_t cols);
    int relu(int x);
    int softplus(int x);
    int add_scalar(int x, double constant);
    int alpha_to_opinion(int alpha);
    int opinion_to_alpha(int opinion);
    int combine_pair(int left, int right);
    int integrated_ce(int alpha, std::size_t true_class);
    int kl_masked(int alpha, std::size_t true_class);
    int weighted_sum(std::vector<int> terms, std::vector<double> coeffs);

    const Vec& value(int id) const;
    double scalar(int id) const;
    std::size_t num_nodes() const { return nodes_.size(); }

    // Seeds d(root)/d(root) = 1 and sweeps the tape once in reverse.
    void backward(int root);

    // Clears the graph, keeping buffer capacity for the next sample.
    void reset() { nodes_.clear(); }

private:
    struct Node {
        Op op;
        std::vector<int> in;
        Vec value;
        Vec adjoint;
        const Vec* bound_value = nullptr; // kParam
        Vec* bound_grad = nullptr;        // kParam
        std::size_t rows = 0, cols = 0;   // kDense
        std::size_t true_class = 0;       // loss nodes
        double cache = 0.0;               // S or N captured in forward
        std::vector<double> coeffs;       // kWeightedSum
    };

    const Vec& val(int id) const;
    int push(Node node);
    void check_id(int id) const;

    std::vector<Node> nodes_;
};

} // namespace evidfuse::autodiff
