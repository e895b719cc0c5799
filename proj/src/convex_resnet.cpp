#include "gdlab/convex_resnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "eigen_util.hpp"

namespace gdlab::resnet {
namespace {

void check_layer_shapes(const ConvexResNet& net) {
    const std::size_t n = net.input_dim;
    if (net.c.size() != n) throw std::invalid_argument("dimension mismatch");
    for (const ResLayer& layer : net.layers) {
        const std::size_t m = layer.units();
        if (layer.W.rows() != n || layer.W.cols() != m || layer.V.rows() != n ||
            layer.V.cols() != m)
            throw std::invalid_argument("dimension mismatch");
    }
}

}  // namespace

double PiecewiseAffine1D::evaluate(double x) const {
    double y = intercept;
    double prev = 0.0;
    for (std::size_t p = 0; p < slopes.size(); ++p) {
        const double end = p < breakpoints.size() ? breakpoints[p] : 1.0;
        if (x <= end) return y + slopes[p] * (x - prev);
        y += slopes[p] * (end - prev);
        prev = end;
    }
    return y + (slopes.empty() ? 0.0 : slopes.back()) * (x - prev);
}

double PiecewiseAffine1D::max_abs_slope() const {
    double m = 0.0;
    for (double s : slopes) m = std::max(m, std::fabs(s));
    return m;
}

PiecewiseAffine1D paper_piecewise_target() {
    return PiecewiseAffine1D{{0.3, 0.5, 0.7}, {1.0, -2.0, 1.0, -1.0}, 0.0};
}

void forward_into(const ConvexResNet& net, const std::vector<double>& x, ForwardResult& out) {
    if (x.size() != net.input_dim) throw std::invalid_argument("dimension mismatch");
    check_layer_shapes(net);

    const std::size_t L = net.depth();
    out.h.resize(L + 1);
    out.active.resize(L);
    out.h[0] = x;

    for (std::size_t l = 0; l < L; ++l) {
        const ResLayer& layer = net.layers[l];
        const std::vector<double>& h = out.h[l];
        const std::size_t n = net.input_dim, m = layer.units();
        std::vector<std::uint8_t>& mask = out.active[l];
        mask.assign(m, 0);
        std::vector<double>& next = out.h[l + 1];
        next = h;
        for (std::size_t j = 0; j < m; ++j) {
            double p = -layer.b[j];
            for (std::size_t a = 0; a < n; ++a) p += layer.V(a, j) * h[a];
            if (p > 0.0) {  // exactly-zero preactivations count as inactive
                mask[j] = 1;
                for (std::size_t a = 0; a < n; ++a) next[a] += layer.W(a, j) * p;
            }
        }
    }

    out.value = net.d;
    for (std::size_t a = 0; a < net.input_dim; ++a) out.value += net.c[a] * out.h[L][a];
}

ForwardResult forward(const ConvexResNet& net, const std::vector<double>& x) {
    ForwardResult out;
    forward_into(net, x, out);
    return out;
}

double net_value(const ConvexResNet& net, const std::vector<double>& x) {
    return forward(net, x).value;
}

double pair_forward(const ConvexConcavePair& pair, const std::vector<double>& x) {
    return net_value(pair.plus, x) - net_value(pair.minus, x) + pair.offset;
}

double mse_loss(const ConvexConcavePair& pair, const Dataset& data) {
    if (data.points.size() != data.labels.size()) throw std::invalid_argument("dimension mismatch");
    double loss = 0.0;
    ForwardResult fp, fm;
    for (std::size_t i = 0; i < data.size(); ++i) {
        forward_into(pair.plus, data.points[i], fp);
        forward_into(pair.minus, data.points[i], fm);
        const double e = fp.value - fm.value + pair.offset - data.labels[i];
        loss += 0.5 * e * e;
    }
    return loss;
}

namespace {

NetGradient zero_gradient(const ConvexResNet& net) {
    NetGradient g;
    g.W.reserve(net.depth());
    g.V.reserve(net.depth());
    g.b.reserve(net.depth());
    for (const ResLayer& layer : net.layers) {
        g.W.emplace_back(layer.W.rows(), layer.W.cols());
        g.V.emplace_back(layer.V.rows(), layer.V.cols());
        g.b.emplace_back(layer.units(), 0.0);
    }
    g.c.assign(net.c.size(), 0.0);
    return g;
}

// Reverse pass for one point; scale carries sign and residual.
void accumulate_net_gradient(const ConvexResNet& net, const ForwardResult& fwd, double scale,
                             NetGradient& g) {
    const std::size_t n = net.input_dim;
    for (std::size_t a = 0; a < n; ++a) g.c[a] += scale * fwd.h.back()[a];
    g.d += scale;

    std::vector<double> gbar(n);
    for (std::size_t a = 0; a < n; ++a) gbar[a] = scale * net.c[a];

    for (std::size_t l = net.depth(); l-- > 0;) {
        const ResLayer& layer = net.layers[l];
        const std::vector<double>& h = fwd.h[l];
        const std::vector<std::uint8_t>& mask = fwd.active[l];
        const std::size_t m = layer.units();

        for (std::size_t j = 0; j < m; ++j) {
            if (!mask[j]) continue;
            double p = -layer.b[j];
            for (std::size_t a = 0; a < n; ++a) p += layer.V(a, j) * h[a];
            double wg = 0.0;
            for (std::size_t a = 0; a < n; ++a) wg += layer.W(a, j) * gbar[a];
            for (std::size_t a = 0; a < n; ++a) {
                g.W[l](a, j) += gbar[a] * p;
                g.V[l](a, j) += h[a] * wg;
            }
            g.b[l][j] -= wg;
        }
        // gbar <- gbar + V (mask o W^T gbar), using pre-update gbar throughout
        std::vector<double> next = gbar;
        for (std::size_t j = 0; j < m; ++j) {
            if (!mask[j]) continue;
            double wg = 0.0;
            for (std::size_t a = 0; a < n; ++a) wg += layer.W(a, j) * gbar[a];
            for (std::size_t a = 0; a < n; ++a) next[a] += layer.V(a, j) * wg;
        }
        gbar = std::move(next);
    }
}

}  // namespace

PairGradient backprop(const ConvexConcavePair& pair, const Dataset& data) {
    if (data.points.size() != data.labels.size()) throw std::invalid_argument("dimension mismatch");
    PairGradient g;
    g.plus = zero_gradient(pair.plus);
    g.minus = zero_gradient(pair.minus);

    ForwardResult fp, fm;
    for (std::size_t i = 0; i < data.size(); ++i) {
        forward_into(pair.plus, data.points[i], fp);
        forward_into(pair.minus, data.points[i], fm);
        const double e = fp.value - fm.value + pair.offset - data.labels[i];
        accumulate_net_gradient(pair.plus, fp, e, g.plus);
        accumulate_net_gradient(pair.minus, fm, -e, g.minus);
        g.offset += e;
    }
    return g;
}

double gradient_norm(const PairGradient& g, bool include_V, bool include_d) {
    double s = 0.0;
    auto add_net = [&](const NetGradient& n) {
        for (const Matrix& m : n.W)
            for (double v : m.data()) s += v * v;
        if (include_V)
            for (const Matrix& m : n.V)
                for (double v : m.data()) s += v * v;
        for (const auto& b : n.b)
            for (double v : b) s += v * v;
        for (double v : n.c) s += v * v;
        if (include_d) s += n.d * n.d;
    };
    add_net(g.plus);
    add_net(g.minus);
    s += g.offset * g.offset;
    return std::sqrt(s);
}

double gradient_norm(const PairGradient& g) { return gradient_norm(g, true, true); }

ConvexConcavePair project_feasible(ConvexConcavePair pair) {
    auto clamp_net = [](ConvexResNet& net) {
        for (ResLayer& layer : net.layers) {
            for (double& v : layer.W.data()) v = std::max(0.0, v);
            for (double& v : layer.V.data()) v = std::max(0.0, v);
            for (double& v : layer.b) v = std::max(0.0, v);
        }
        for (double& v : net.c) v = std::max(kCFloor, v);
    };
    clamp_net(pair.plus);
    clamp_net(pair.minus);
    return pair;
}

namespace {

// Flat parameter vector: per net, layer by layer W,V,b, then c, d; offset last.
std::size_t param_count(const ConvexConcavePair& pair) {
    auto count_net = [](const ConvexResNet& net) {
        std::size_t s = net.c.size() + 1;
        for (const ResLayer& layer : net.layers)
            s += layer.W.data().size() + layer.V.data().size() + layer.b.size();
        return s;
    };
    return count_net(pair.plus) + count_net(pair.minus) + 1;
}

void pack(const ConvexConcavePair& pair, std::vector<double>& out) {
    out.clear();
    out.reserve(param_count(pair));
    auto pack_net = [&out](const ConvexResNet& net) {
        for (const ResLayer& layer : net.layers) {
            out.insert(out.end(), layer.W.data().begin(), layer.W.data().end());
            out.insert(out.end(), layer.V.data().begin(), layer.V.data().end());
            out.insert(out.end(), layer.b.begin(), layer.b.end());
        }
        out.insert(out.end(), net.c.begin(), net.c.end());
        out.push_back(net.d);
    };
    pack_net(pair.plus);
    pack_net(pair.minus);
    out.push_back(pair.offset);
}

void pack_gradient(const PairGradient& g, bool train_V, bool train_d, std::vector<double>& out) {
    out.clear();
    auto pack_net = [&](const NetGradient& n) {
        for (std::size_t l = 0; l < n.W.size(); ++l) {
            out.insert(out.end(), n.W[l].data().begin(), n.W[l].data().end());
            if (train_V)
                out.insert(out.end(), n.V[l].data().begin(), n.V[l].data().end());
            else
                out.insert(out.end(), n.V[l].data().size(), 0.0);
            out.insert(out.end(), n.b[l].begin(), n.b[l].end());
        }
        out.insert(out.end(), n.c.begin(), n.c.end());
        out.push_back(train_d ? n.d : 0.0);
    };
    pack_net(g.plus);
    pack_net(g.minus);
    out.push_back(g.offset);
}

void unpack(const std::vector<double>& in, ConvexConcavePair& pair) {
    std::size_t pos = 0;
    auto unpack_net = [&](ConvexResNet& net) {
        for (ResLayer& layer : net.layers) {
            std::copy_n(in.begin() + pos, layer.W.data().size(), layer.W.data().begin());
            pos += layer.W.data().size();
            std::copy_n(in.begin() + pos, layer.V.data().size(), layer.V.data().begin());
            pos += layer.V.data().size();
            std::copy_n(in.begin() + pos, layer.b.size(), layer.b.begin());
            pos += layer.b.size();
        }
        std::copy_n(in.begin() + pos, net.c.size(), net.c.begin());
        pos += net.c.size();
        net.d = in[pos++];
    };
    unpack_net(pair.plus);
    unpack_net(pair.minus);
    pair.offset = in[pos++];
}

}  // namespace

TrainResult nesterov_train(ConvexConcavePair pair, const Dataset& data, const TrainConfig& cfg) {
    if (cfg.step <= 0.0) throw std::invalid_argument("step must be positive");

    TrainResult result;
    result.loss_history.reserve(cfg.max_epochs);

    std::vector<double> x, x_prev, y, g;
    pack(pair, x);
    x_prev = x;
    y = x;
    double t = 1.0;

    ConvexConcavePair work = pair;
    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        unpack(y, work);
        pack_gradient(backprop(work, data), cfg.train_V, cfg.train_d, g);

        for (std::size_t i = 0; i < x.size(); ++i) x[i] = y[i] - cfg.step * g[i];
        unpack(x, work);
        if (cfg.projection) {
            work = project_feasible(std::move(work));
            pack(work, x);
        }

        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double momentum = (t - 1.0) / t_next;
        for (std::size_t i = 0; i < y.size(); ++i)
            y[i] = x[i] + momentum * (x[i] - x_prev[i]);
        x_prev = x;
        t = t_next;

        const double loss = mse_loss(work, data);
        result.loss_history.push_back(loss);
        if (!std::isfinite(loss) || loss > 1e12) throw std::runtime_error("diverged");
    }

    unpack(x, pair);
    result.pair = std::move(pair);
    return result;
}

Dataset piecewise_target(const PiecewiseAffine1D& spec, std::size_t grid_size) {
    if (grid_size < 2) throw std::invalid_argument("grid_size must be at least 2");
    Dataset data;
    data.points.reserve(grid_size);
    data.labels.reserve(grid_size);
    for (std::size_t j = 0; j < grid_size; ++j) {
        const double x = static_cast<double>(j) / static_cast<double>(grid_size - 1);
        data.points.push_back({x});
        data.labels.push_back(spec.evaluate(x));
    }
    return data;
}

OptimalityResiduals optimality_residuals(const ConvexResNet& net, const Dataset& data) {
    check_layer_shapes(net);
    const std::size_t n = net.input_dim;
    for (const ResLayer& layer : net.layers) {
        if (layer.units() != n) throw std::invalid_argument("requires V = I layers");
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c)
                if (layer.V(r, c) != (r == c ? 1.0 : 0.0))
                    throw std::invalid_argument("requires V = I layers");
    }

    const std::size_t L = net.depth();
    std::vector<Matrix> w_residual(L, Matrix(n, n));
    std::vector<double> head(n, 0.0);

    for (std::size_t i = 0; i < data.size(); ++i) {
        const ForwardResult fwd = forward(net, data.points[i]);
        const double e = fwd.value - data.labels[i];

        // c_l^T = c^T (I + W~_L) ... (I + W~_{l+1}), W~_k = W_k masked by the
        // active units at this point
        std::vector<double> cl(net.c);
        for (std::size_t l = L; l-- > 0;) {
            const std::vector<double>& h = fwd.h[l];
            const std::vector<std::uint8_t>& mask = fwd.active[l];
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t col = 0; col < n; ++col) {
                    const double a = mask[col] ? h[col] - net.layers[l].b[col] : 0.0;
                    w_residual[l](r, col) += e * cl[r] * a;
                }
            std::vector<double> next = cl;
            for (std::size_t col = 0; col < n; ++col) {
                if (!mask[col]) continue;
                double wg = 0.0;
                for (std::size_t r = 0; r < n; ++r) wg += net.layers[l].W(r, col) * cl[r];
                next[col] += wg;
            }
            cl = std::move(next);
        }
        for (std::size_t a = 0; a < n; ++a) head[a] += e * fwd.h.back()[a];
    }

    OptimalityResiduals out;
    out.layer_residuals.reserve(L);
    for (const Matrix& m : w_residual) {
        double s = 0.0;
        for (double v : m.data()) s += v * v;
        out.layer_residuals.push_back(std::sqrt(s));
    }
    double s = 0.0;
    for (double v : head) s += v * v;
    out.head_residual = std::sqrt(s);
    return out;
}

std::size_t GridSpec::total() const {
    std::size_t t = 1;
    for (std::size_t d : dims) t *= d;
    return t;
}

std::vector<double> GridSpec::point(std::size_t flat_index) const {
    const std::size_t n = dims.size();
    std::vector<double> x(n);
    for (std::size_t a = n; a-- > 0;) {
        const std::size_t idx = flat_index % dims[a];
        flat_index /= dims[a];
        x[a] = lo[a] + static_cast<double>(idx) * (hi[a] - lo[a]) / static_cast<double>(dims[a] - 1);
    }
    return x;
}

SplitResult convex_concave_split(const std::vector<double>& target_samples, const GridSpec& grid,
                                 const std::vector<double>& beta) {
    const std::size_t n = grid.dims.size();
    if (n == 0 || grid.lo.size() != n || grid.hi.size() != n || beta.size() != n)
        throw std::invalid_argument("dimension mismatch");
    for (std::size_t d : grid.dims)
        if (d < 3) throw std::invalid_argument("grid too coarse");
    for (double b : beta)
        if (!(b > 0.0)) throw std::invalid_argument("beta entries must be positive");
    if (target_samples.size() != grid.total()) throw std::invalid_argument("dimension mismatch");

    std::vector<double> h(n);
    std::vector<std::size_t> stride(n);
    {
        std::size_t s = 1;
        for (std::size_t a = n; a-- > 0;) {
            stride[a] = s;
            s *= grid.dims[a];
            h[a] = (grid.hi[a] - grid.lo[a]) / static_cast<double>(grid.dims[a] - 1);
        }
    }

    // min Hessian eigenvalue over interior points, by central second differences
    double min_eig = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> idx(n, 1);
    const std::size_t total = grid.total();
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rem = flat;
        bool interior = true;
        for (std::size_t a = n; a-- > 0;) {
            idx[a] = rem % grid.dims[a];
            rem /= grid.dims[a];
            if (idx[a] == 0 || idx[a] + 1 == grid.dims[a]) interior = false;
        }
        if (!interior) continue;

        Eigen::MatrixXd hess(n, n);
        const double f0 = target_samples[flat];
        for (std::size_t a = 0; a < n; ++a) {
            hess(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) =
                (target_samples[flat + stride[a]] - 2.0 * f0 + target_samples[flat - stride[a]]) /
                (h[a] * h[a]);
            for (std::size_t b = a + 1; b < n; ++b) {
                const std::size_t sa = stride[a];
                const std::size_t sb = stride[b];
                const double cross = (target_samples[flat + sa + sb] -
                                      target_samples[flat + sa - sb] -
                                      target_samples[flat - sa + sb] +
                                      target_samples[flat - sa - sb]) /
                                     (4.0 * h[a] * h[b]);
                hess(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = cross;
                hess(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = cross;
            }
        }
        if (n == 1) {
            min_eig = std::min(min_eig, hess(0, 0));
        } else {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess, Eigen::EigenvaluesOnly);
            min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
        }
    }

    SplitResult out;
    out.alpha = std::max(0.0, -min_eig) + 1e-3;
    out.r.resize(total);
    out.s.resize(total);
    for (std::size_t flat = 0; flat < total; ++flat) {
        const std::vector<double> x = grid.point(flat);
        double quad = 0.0;
        for (std::size_t a = 0; a < n; ++a) quad += 0.5 * out.alpha * x[a] * x[a] + beta[a] * x[a];
        out.s[flat] = quad;
        out.r[flat] = quad + target_samples[flat];
    }
    return out;
}

namespace {

constexpr double kBreakpointMerge = 1e-12;

// Trunk value after all layers of a 1-d net.
double trunk_value_1d(const ConvexResNet& net, double x, std::size_t layer_count) {
    double h = x;
    for (std::size_t l = 0; l < layer_count; ++l) {
        const ResLayer& layer = net.layers[l];
        double add = 0.0;
        for (std::size_t j = 0; j < layer.units(); ++j) {
            const double p = layer.V(0, j) * h - layer.b[j];
            if (p > 0.0) add += layer.W(0, j) * p;
        }
        h += add;
    }
    return h;
}

// (value, slope) of a 1-d net at a point strictly inside a linear piece.
std::pair<double, double> value_slope_1d(const ConvexResNet& net, double x) {
    double h = x, dh = 1.0;
    for (const ResLayer& layer : net.layers) {
        double add = 0.0, dadd = 0.0;
        for (std::size_t j = 0; j < layer.units(); ++j) {
            const double p = layer.V(0, j) * h - layer.b[j];
            if (p > 0.0) {
                add += layer.W(0, j) * p;
                dadd += layer.W(0, j) * layer.V(0, j) * dh;
            }
        }
        h += add;
        dh += dadd;
    }
    return {net.c[0] * h + net.d, net.c[0] * dh};
}

void collect_breakpoints_1d(const ConvexResNet& net, std::vector<double>& points) {
    std::vector<double> pts = {0.0, 1.0};
    for (std::size_t l = 0; l < net.depth(); ++l) {
        std::sort(pts.begin(), pts.end());
        std::vector<double> values(pts.size());
        for (std::size_t k = 0; k < pts.size(); ++k) values[k] = trunk_value_1d(net, pts[k], l);

        std::vector<double> found;
        const ResLayer& layer = net.layers[l];
        for (std::size_t j = 0; j < layer.units(); ++j) {
            for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
                const double ga = layer.V(0, j) * values[k] - layer.b[j];
                const double gb = layer.V(0, j) * values[k + 1] - layer.b[j];
                if ((ga < 0.0 && gb > 0.0) || (ga > 0.0 && gb < 0.0)) {
                    const double x = pts[k] + (0.0 - ga) * (pts[k + 1] - pts[k]) / (gb - ga);
                    found.push_back(x);
                }
            }
        }
        for (double x : found) {
            bool dup = false;
            for (double p : pts)
                if (std::fabs(p - x) < kBreakpointMerge) dup = true;
            if (!dup) pts.push_back(x);
        }
    }
    points.insert(points.end(), pts.begin(), pts.end());
}

}  // namespace

double lipschitz_1d(const ConvexConcavePair& pair) {
    if (pair.plus.input_dim != 1 || pair.minus.input_dim != 1)
        throw std::invalid_argument("lipschitz_1d requires 1-d inputs");

    std::vector<double> points;
    collect_breakpoints_1d(pair.plus, points);
    collect_breakpoints_1d(pair.minus, points);
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end(),
                             [](double a, double b) { return std::fabs(a - b) < kBreakpointMerge; }),
                 points.end());

    double lip = 0.0;
    for (std::size_t k = 0; k + 1 < points.size(); ++k) {
        const double mid = 0.5 * (points[k] + points[k + 1]);
        const double slope =
            value_slope_1d(pair.plus, mid).second - value_slope_1d(pair.minus, mid).second;
        lip = std::max(lip, std::fabs(slope));
    }
    return lip;
}

ConvexConcavePair make_scalar_pair(std::size_t depth, const std::array<double, 2>& weight_range,
                                   const std::array<double, 2>& bias_range, SeededRng& rng) {
    auto make_net = [&]() {
        ConvexResNet net;
        net.input_dim = 1;
        net.c = {1.0};
        net.d = 0.0;
        net.layers.reserve(depth);
        for (std::size_t l = 0; l < depth; ++l) {
            ResLayer layer;
            layer.W = Matrix(1, 1);
            layer.W(0, 0) = rng.uniform(weight_range[0], weight_range[1]);
            layer.V = Matrix(1, 1);
            layer.V(0, 0) = 1.0;
            layer.b = {rng.uniform(bias_range[0], bias_range[1])};
            net.layers.push_back(std::move(layer));
        }
        return net;
    };
    ConvexConcavePair pair;
    pair.plus = make_net();
    pair.minus = make_net();
    pair.offset = 0.0;
    return pair;
}

ConvexResNet random_feasible_net(std::size_t n, std::size_t depth, std::size_t units,
                                 SeededRng& rng, double scale) {
    ConvexResNet net;
    net.input_dim = n;
    net.layers.reserve(depth);
    for (std::size_t l = 0; l < depth; ++l) {
        ResLayer layer;
        layer.W = Matrix(n, units);
        layer.V = Matrix(n, units);
        for (double& v : layer.W.data()) v = rng.uniform(0.0, scale);
        for (double& v : layer.V.data()) v = rng.uniform(0.0, scale);
        layer.b.resize(units);
        for (double& v : layer.b) v = rng.uniform(0.0, 1.0);
        net.layers.push_back(std::move(layer));
    }
    net.c.resize(n);
    for (double& v : net.c) v = rng.uniform(0.1, 1.0);
    net.d = rng.uniform(-1.0, 1.0);
    return net;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
    const std::size_t rows = j.size();
    const std::size_t cols = rows ? j.at(0).size() : 0;
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
    return m;
}

nlohmann::json net_to_json(const ConvexResNet& net) {
    nlohmann::json j;
    j["input_dim"] = net.input_dim;
    j["depth"] = net.depth();
    j["layers"] = nlohmann::json::array();
    for (const ResLayer& layer : net.layers)
        j["layers"].push_back({{"W", matrix_to_json(layer.W)},
                               {"V", matrix_to_json(layer.V)},
                               {"b", layer.b}});
    j["c"] = net.c;
    j["d"] = net.d;
    return j;
}

ConvexResNet net_from_json(const nlohmann::json& j) {
    ConvexResNet net;
    net.input_dim = j.at("input_dim").get<std::size_t>();
    for (const auto& lj : j.at("layers")) {
        ResLayer layer;
        layer.W = matrix_from_json(lj.at("W"));
        layer.V = matrix_from_json(lj.at("V"));
        layer.b = lj.at("b").get<std::vector<double>>();
        net.layers.push_back(std::move(layer));
    }
    net.c = j.at("c").get<std::vector<double>>();
    net.d = j.at("d").get<double>();
    return net;
}

}  // namespace

std::string pair_to_json(const ConvexConcavePair& pair) {
    nlohmann::json j;
    j["offset"] = pair.offset;
    j["plus"] = net_to_json(pair.plus);
    j["minus"] = net_to_json(pair.minus);
    return j.dump(2);
}

ConvexConcavePair pair_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    ConvexConcavePair pair;
    pair.offset = j.at("offset").get<double>();
    pair.plus = net_from_json(j.at("plus"));
    pair.minus = net_from_json(j.at("minus"));
    return pair;
}

}  // namespace gdlab::resnet
