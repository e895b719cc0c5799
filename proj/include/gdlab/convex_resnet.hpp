#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gdlab/matrix.hpp"
#include "gdlab/rng.hpp"

namespace gdlab::resnet {

inline constexpr double kCFloor = 1e-6;  // strict positivity floor for head weights

/// One residual block: h <- h + W [V^T h - b]_+ with W, V of shape n x m
/// and b of length m, all nonnegative.
struct ResLayer {
    Matrix W;
    Matrix V;
    std::vector<double> b;

    std::size_t units() const { return b.size(); }
};

/// Convex ReLU residual network
///   h_0 = x,  h_i = h_{i-1} + W_i [V_i^T h_{i-1} - b_i]_+,  f(x) = c^T h_L + d.
/// Nonnegative W/V/b and strictly positive c make f convex on the
/// nonnegative orthant inputs it is meant for.
struct ConvexResNet {
    std::size_t input_dim = 0;
    std::vector<ResLayer> layers;
    std::vector<double> c;
    double d = 0.0;

    std::size_t depth() const { return layers.size(); }
};

/// f(x) = plus(x) - minus(x) + offset: a convex-concave decomposition.
struct ConvexConcavePair {
    ConvexResNet plus;
    ConvexResNet minus;
    double offset = 0.0;
};

struct Dataset {
    std::vector<std::vector<double>> points;
    std::vector<double> labels;

    std::size_t size() const { return points.size(); }
};

/// Piecewise affine function on [0,1]: slope slopes[p] on the p-th interval
/// delimited by the strictly increasing interior breakpoints.
struct PiecewiseAffine1D {
    std::vector<double> breakpoints;  // interior, strictly increasing, in (0,1)
    std::vector<double> slopes;       // breakpoints.size() + 1 entries
    double intercept = 0.0;           // value at 0

    double evaluate(double x) const;
    double max_abs_slope() const;
};

/// The target of the two-estimator bias-initialization experiment:
/// slope 1 on (0,0.3) and (0.5,0.7), -2 on (0.3,0.5), -1 on (0.7,1).
PiecewiseAffine1D paper_piecewise_target();

struct TrainConfig {
    double step = 1e-2;
    std::size_t max_epochs = 10000;
    std::array<double, 2> bias_init_range{0.0, 1.0};
    std::array<double, 2> weight_init_range{0.0, 0.1};
    std::uint64_t seed = 0;
    bool projection = true;
    bool train_V = true;  // frozen for the V = I experiment form
    bool train_d = true;  // per-net d; frozen (at 0) for the V = I form
};

struct ForwardResult {
    double value = 0.0;
    std::vector<std::vector<double>> h;             // h_0 .. h_L
    std::vector<std::vector<std::uint8_t>> active;  // per layer, 1 iff preactivation > 0
};

/// Full forward pass keeping the trunk states and ReLU masks.
/// Throws std::invalid_argument("dimension mismatch") if x has wrong length.
ForwardResult forward(const ConvexResNet& net, const std::vector<double>& x);

/// Same pass reusing the result's buffers; the training loops lean on this.
void forward_into(const ConvexResNet& net, const std::vector<double>& x, ForwardResult& out);

double net_value(const ConvexResNet& net, const std::vector<double>& x);

double pair_forward(const ConvexConcavePair& pair, const std::vector<double>& x);

/// (1/2) sum_i (f(x_i) - y_i)^2. No 1/N factor; step sizes scale with N.
double mse_loss(const ConvexConcavePair& pair, const Dataset& data);

struct NetGradient {
    std::vector<Matrix> W, V;
    std::vector<std::vector<double>> b;
    std::vector<double> c;
    double d = 0.0;
};

struct PairGradient {
    NetGradient plus, minus;
    double offset = 0.0;
};

/// Reverse-mode subgradient of mse_loss. ReLU subgradient is 0 at inactive
/// and exactly-zero preactivations, 1 at strictly positive ones.
PairGradient backprop(const ConvexConcavePair& pair, const Dataset& data);

double gradient_norm(const PairGradient& g);

/// Norm over a trainable subset: V and/or per-net d components can be
/// excluded to match runs that freeze them.
double gradient_norm(const PairGradient& g, bool include_V, bool include_d);

/// Clamps every W, V, b entry to max(0, .) and every c entry to max(kCFloor, .).
ConvexConcavePair project_feasible(ConvexConcavePair pair);

struct TrainResult {
    ConvexConcavePair pair;
    std::vector<double> loss_history;  // mse after each epoch
};

/// Nesterov's accelerated gradient descent: momentum (t_{k-1}-1)/t_k with
/// t_k = (1 + sqrt(1 + 4 t_{k-1}^2))/2, t_0 = 1; project_feasible after each
/// update when cfg.projection is set.
/// Throws std::runtime_error("diverged") if the loss exceeds 1e12 or becomes
/// non-finite.
TrainResult nesterov_train(ConvexConcavePair pair, const Dataset& data, const TrainConfig& cfg);

/// Uniform grid of grid_size points on [0,1] labeled by spec.evaluate.
Dataset piecewise_target(const PiecewiseAffine1D& spec, std::size_t grid_size);

struct OptimalityResiduals {
    std::vector<double> layer_residuals;  // Frobenius norm per layer, Eq.-(13a) form
    double head_residual = 0.0;           // Euclidean norm, Eq.-(13b) form
};

/// First-order optimality residuals for the simplified V = I, d = 0 form,
/// computed from the activation-mask products c_l = (I + W~_{l+1})^T ... (I + W~_L)^T c
/// rather than the general backprop path.
/// Throws std::invalid_argument if some layer is not square with V = I.
OptimalityResiduals optimality_residuals(const ConvexResNet& net, const Dataset& data);

/// Uniform tensor grid: axis a has dims[a] points from lo[a] to hi[a].
struct GridSpec {
    std::vector<std::size_t> dims;
    std::vector<double> lo, hi;

    std::size_t total() const;
    std::vector<double> point(std::size_t flat_index) const;  // row-major multi-index
};

struct SplitResult {
    double alpha = 0.0;
    std::vector<double> r, s;
};

/// Convex-concave split of grid samples: alpha exceeds the most negative
/// Hessian eigenvalue (estimated by central second differences) by a 1e-3
/// margin, r = (alpha/2)|x|^2 + beta.x + f, s = the same quadratic part.
/// Throws std::invalid_argument("grid too coarse") below 3 points per axis.
SplitResult convex_concave_split(const std::vector<double>& target_samples, const GridSpec& grid,
                                 const std::vector<double>& beta);

/// Exact Lipschitz constant of a 1-input pair on [0,1]: enumerates all ReLU
/// breakpoints by forward-propagating the piecewise-linear structure
/// (breakpoints closer than 1e-12 merge) and maximizes |slope| over pieces.
double lipschitz_1d(const ConvexConcavePair& pair);

/// The scalar-parameter pair of the bias-initialization experiment: both
/// nets 1-d with one unit per layer, V fixed at 1, c = 1, d = 0; W drawn
/// uniform from weight_range and b from bias_range (plus net first, then
/// minus net; per net, layer by layer, W before b).
ConvexConcavePair make_scalar_pair(std::size_t depth, const std::array<double, 2>& weight_range,
                                   const std::array<double, 2>& bias_range, SeededRng& rng);

/// Random feasible net for property audits: W, V uniform [0, scale],
/// b uniform [0,1], c uniform [0.1, 1], d uniform [-1, 1].
ConvexResNet random_feasible_net(std::size_t n, std::size_t depth, std::size_t units,
                                 SeededRng& rng, double scale = 0.5);

/// Trained-model JSON: {offset, plus: {...}, minus: {...}} with each net as
/// {input_dim, depth, layers: [{W, V, b}], c, d}.
std::string pair_to_json(const ConvexConcavePair& pair);
ConvexConcavePair pair_from_json(const std::string& text);

}  // namespace gdlab::resnet
