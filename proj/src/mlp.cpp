#include "bgan/mlp.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bgan/kernels.hpp"

namespace bgan {

using kernels::parallel_rows;

void MlpGrads::add(const MlpGrads& other) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        double* w = weights[l].data();
        const double* o = other.weights[l].data();
        for (std::size_t i = 0; i < weights[l].size(); ++i) w[i] += o[i];
        for (std::size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += other.biases[l][i];
    }
}

void MlpGrads::scale(double s) {
    for (auto& w : weights)
        for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] *= s;
    for (auto& b : biases)
        for (auto& v : b) v *= s;
}

Mlp Mlp::init(const std::vector<std::size_t>& widths, Activation act, double leaky_slope,
              double dropout_rate, OutputActivation out_act, InitScheme scheme,
              RngStream& rng) {
    if (widths.size() < 3)
        throw std::invalid_argument("mlp_init: invalid architecture, need at least one hidden layer");
    for (std::size_t w : widths)
        if (w == 0) throw std::invalid_argument("mlp_init: invalid architecture, zero width");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
        throw std::invalid_argument("mlp_init: dropout_rate must be in [0,1)");
    if (act == Activation::LeakyRelu && !(leaky_slope > 0.0 && leaky_slope <= 1.0))
        throw std::invalid_argument("mlp_init: leaky slope must be in (0,1]");

    Mlp net;
    net.act_ = act;
    net.leaky_slope_ = leaky_slope;
    net.dropout_rate_ = dropout_rate;
    net.out_act_ = out_act;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const std::size_t in = widths[l], out = widths[l + 1];
        Matrix w(out, in);
        if (scheme == InitScheme::HeUniform) {
            const double limit = std::sqrt(6.0 / static_cast<double>(in));
            for (std::size_t i = 0; i < w.size(); ++i)
                w.data()[i] = rng.uniform(-limit, limit);
        }
        net.weights_.push_back(std::move(w));
        net.biases_.emplace_back(out, 0.0);
    }
    return net;
}

std::vector<std::size_t> Mlp::widths() const {
    std::vector<std::size_t> w;
    if (weights_.empty()) return w;
    w.push_back(weights_.front().cols());
    for (const auto& m : weights_) w.push_back(m.rows());
    return w;
}

double Mlp::act_deriv(double preact) const {
    if (act_ == Activation::Relu) return preact > 0.0 ? 1.0 : 0.0;
    return preact > 0.0 ? 1.0 : leaky_slope_;
}

namespace {
inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }
}  // namespace

Matrix Mlp::forward(const Matrix& inputs, RunMode mode, RngStream* rng,
                    ForwardCache* cache) const {
    require(!weights_.empty(), "forward: uninitialized network");
    if (inputs.cols() != input_dim())
        throw std::invalid_argument("forward: input width " + std::to_string(inputs.cols()) +
                                    " does not match network input " + std::to_string(input_dim()));
    for (std::size_t i = 0; i < inputs.size(); ++i)
        if (!std::isfinite(inputs.data()[i]))
            throw std::domain_error("forward: non-finite input");
    const bool dropping = mode == RunMode::Train && dropout_rate_ > 0.0;
    if (dropping && rng == nullptr)
        throw std::invalid_argument("forward: train mode with dropout requires an rng");

    const std::size_t layers = weights_.size();
    const std::size_t batch = inputs.rows();
    // All intermediate buffers live in a cache so repeated passes reuse
    // their allocations; callers without a cache borrow a scratch one.
    static thread_local ForwardCache scratch;
    ForwardCache& c = cache ? *cache : scratch;
    c.net = this;
    c.revision = revision_;
    c.mode = mode;
    c.input = inputs;
    c.preact.resize(layers);
    c.act.resize(layers > 0 ? layers - 1 : 0);
    c.drop_scale.resize(dropping ? layers - 1 : 0);

    const Matrix* cur = &c.input;
    const double slope = act_ == Activation::Relu ? 0.0 : leaky_slope_;
    for (std::size_t l = 0; l < layers; ++l) {
        Matrix& z = c.preact[l];
        z.resize(batch, weights_[l].rows());
        kernels::gemm_nt(*cur, weights_[l], z, &biases_[l]);
        const bool last = l + 1 == layers;
        if (last) {
            c.output = z;
            if (out_act_ == OutputActivation::Logistic) {
                parallel_rows(batch, [&](std::size_t b) {
                    double* row = c.output.row_ptr(b);
                    for (std::size_t j = 0; j < c.output.cols(); ++j)
                        row[j] = logistic(row[j]);
                });
            }
            return c.output;
        }
        // Dropout multipliers: row r consumes exactly cols draws starting
        // at a fixed counter offset, so rows can be filled in parallel
        // while the stream advances as if drawn serially.
        if (dropping) {
            Matrix& scale = c.drop_scale[l];
            scale.resize(batch, z.cols());
            const double keep = 1.0 - dropout_rate_;
            const RngStream base = *rng;
            rng->skip(scale.size());
            parallel_rows(batch, [&](std::size_t b) {
                RngStream row_rng = base;
                row_rng.skip(b * scale.cols());
                double* sr = scale.row_ptr(b);
                for (std::size_t j = 0; j < scale.cols(); ++j)
                    sr[j] = row_rng.uniform() < keep ? 1.0 / keep : 0.0;
            });
        }
        Matrix& a = c.act[l];
        a.resize(batch, z.cols());
        const Matrix* scale = dropping ? &c.drop_scale[l] : nullptr;
        parallel_rows(batch, [&](std::size_t b) {
            const double* zr = z.row_ptr(b);
            double* ar = a.row_ptr(b);
            for (std::size_t j = 0; j < z.cols(); ++j)
                ar[j] = zr[j] > 0.0 ? zr[j] : slope * zr[j];
            if (scale) {
                const double* sr = scale->row_ptr(b);
                for (std::size_t j = 0; j < z.cols(); ++j) ar[j] *= sr[j];
            }
        });
        cur = &a;
    }
    return c.output;  // unreachable
}

void Mlp::backward(const ForwardCache& cache, const Matrix& upstream, MlpGrads* param_grads,
                   Matrix* input_grads) const {
    if (cache.net != this || cache.revision != revision_)
        throw std::logic_error("backward: stale or mismatched forward cache");
    const std::size_t layers = weights_.size();
    require(upstream.rows() == cache.input.rows() && upstream.cols() == output_dim(),
            "backward: upstream shape mismatch");
    if (param_grads) {
        param_grads->weights.resize(layers);
        param_grads->biases.resize(layers);
    }

    const std::size_t batch = upstream.rows();
    static thread_local Matrix delta_buf, next_buf;
    delta_buf = upstream;
    Matrix* delta = &delta_buf;
    if (out_act_ == OutputActivation::Logistic) {
        parallel_rows(batch, [&](std::size_t b) {
            double* dr = delta->row_ptr(b);
            const double* yr = cache.output.row_ptr(b);
            for (std::size_t j = 0; j < delta->cols(); ++j)
                dr[j] *= yr[j] * (1.0 - yr[j]);
        });
    }

    const bool dropping = cache.mode == RunMode::Train && dropout_rate_ > 0.0;
    Matrix* next = &next_buf;
    for (std::size_t li = layers; li-- > 0;) {
        const Matrix& layer_in = li == 0 ? cache.input : cache.act[li - 1];
        if (param_grads) {
            Matrix& dw = param_grads->weights[li];
            dw.resize(weights_[li].rows(), weights_[li].cols());
            kernels::gemm_tn(*delta, layer_in, dw);
            Vector& db = param_grads->biases[li];
            db.assign(biases_[li].size(), 0.0);
            kernels::col_sum(*delta, db);
        }
        if (li == 0) {
            if (input_grads) {
                input_grads->resize(batch, weights_[0].cols());
                kernels::gemm_nn(*delta, weights_[0], *input_grads);
            }
            break;
        }
        if (!input_grads && !param_grads) break;
        next->resize(batch, weights_[li].cols());
        kernels::gemm_nn(*delta, weights_[li], *next);
        const Matrix& z = cache.preact[li - 1];
        const Matrix* scale = dropping ? &cache.drop_scale[li - 1] : nullptr;
        parallel_rows(batch, [&](std::size_t b) {
            double* nr = next->row_ptr(b);
            const double* zr = z.row_ptr(b);
            for (std::size_t j = 0; j < next->cols(); ++j) nr[j] *= act_deriv(zr[j]);
            if (scale) {
                const double* sr = scale->row_ptr(b);
                for (std::size_t j = 0; j < next->cols(); ++j) nr[j] *= sr[j];
            }
        });
        std::swap(delta, next);
    }
}

Vector Mlp::input_gradient(std::span<const double> point,
                           std::span<const std::size_t> subset) const {
    if (output_dim() != 1)
        throw std::logic_error("input_gradient: network output is not scalar");
    require(point.size() == input_dim(), "input_gradient: point dimension mismatch");
    for (std::size_t idx : subset)
        require(idx < input_dim(), "input_gradient: subset index out of range");
    Matrix in(1, point.size());
    in.set_row(0, point);
    ForwardCache cache;
    forward(in, RunMode::Eval, nullptr, &cache);
    Matrix upstream(1, 1, 1.0);
    Matrix igrads;
    backward(cache, upstream, nullptr, &igrads);
    Vector out(subset.size());
    for (std::size_t k = 0; k < subset.size(); ++k) out[k] = igrads(0, subset[k]);
    return out;
}

MlpGrads Mlp::zero_grads() const {
    MlpGrads g;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        g.weights.emplace_back(weights_[l].rows(), weights_[l].cols());
        g.biases.emplace_back(biases_[l].size(), 0.0);
    }
    return g;
}

AdamState Mlp::zero_adam(double beta1, double beta2, double eps) const {
    AdamState s;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps = eps;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        s.m_w.emplace_back(weights_[l].rows(), weights_[l].cols());
        s.v_w.emplace_back(weights_[l].rows(), weights_[l].cols());
        s.m_b.emplace_back(biases_[l].size(), 0.0);
        s.v_b.emplace_back(biases_[l].size(), 0.0);
    }
    return s;
}

bool Mlp::finite() const {
    for (const auto& w : weights_)
        for (std::size_t i = 0; i < w.size(); ++i)
            if (!std::isfinite(w.data()[i])) return false;
    for (const auto& b : biases_)
        for (double v : b)
            if (!std::isfinite(v)) return false;
    return true;
}

bool operator==(const Mlp& a, const Mlp& b) {
    return a.weights_ == b.weights_ && a.biases_ == b.biases_ && a.act_ == b.act_ &&
           a.leaky_slope_ == b.leaky_slope_ && a.dropout_rate_ == b.dropout_rate_ &&
           a.out_act_ == b.out_act_;
}

// --- gradient penalty ------------------------------------------------

namespace {

// delta_{l-1} = (delta_l W_l) .* mask_{l-1}; masks are the activation
// derivatives from the cached eval forward, held fixed.
void mask_multiply(Matrix& m, const Matrix& preact, const Mlp& net) {
    const double slope = net.activation() == Activation::Relu ? 0.0 : net.leaky_slope();
    parallel_rows(m.rows(), [&](std::size_t b) {
        double* mr = m.row_ptr(b);
        const double* zr = preact.row_ptr(b);
        for (std::size_t j = 0; j < m.cols(); ++j)
            mr[j] *= zr[j] > 0.0 ? 1.0 : slope;
    });
}

}  // namespace

double gradient_penalty(const Mlp& critic, const Matrix& x, const Matrix& theta_bar,
                        double lambda, MlpGrads& grads) {
    require(critic.output_dim() == 1, "gradient_penalty: critic output must be scalar");
    require(x.rows() == theta_bar.rows(), "gradient_penalty: row count mismatch");
    const std::size_t batch = x.rows(), dx = x.cols(), dtheta = theta_bar.cols();
    require(dx + dtheta == critic.input_dim(), "gradient_penalty: input split mismatch");
    if (batch == 0 || lambda == 0.0) return 0.0;

    struct Workspace {
        ForwardCache cache;
        Matrix input, delta, next, igrad, seed, up;
        std::vector<Matrix> chain_in;
        Vector penalty, coeff;
    };
    // Bound through a local reference: lambdas do not capture
    // thread_local storage, and the workers must share this workspace.
    static thread_local Workspace tls_workspace;
    Workspace& ws = tls_workspace;

    ws.input.resize(batch, dx + dtheta);
    parallel_rows(batch, [&](std::size_t b) {
        double* r = ws.input.row_ptr(b);
        const double* xr = x.row_ptr(b);
        const double* tr = theta_bar.row_ptr(b);
        for (std::size_t j = 0; j < dx; ++j) r[j] = xr[j];
        for (std::size_t j = 0; j < dtheta; ++j) r[dx + j] = tr[j];
    });

    // Pass 1: eval forward (dropout off) to record activation masks.
    critic.forward(ws.input, RunMode::Eval, nullptr, &ws.cache);

    // Pass 2: gradient of the scalar critic wrt its theta inputs.
    const std::size_t layers = critic.num_layers();
    ws.delta.resize(batch, 1);
    ws.delta.fill(1.0);
    Matrix* delta = &ws.delta;
    Matrix* next = &ws.next;
    for (std::size_t li = layers; li-- > 1;) {
        next->resize(batch, critic.weight(li).cols());
        kernels::gemm_nn(*delta, critic.weight(li), *next);
        mask_multiply(*next, ws.cache.preact[li - 1], critic);
        std::swap(delta, next);
    }
    ws.igrad.resize(batch, critic.weight(0).cols());
    kernels::gemm_nn(*delta, critic.weight(0), ws.igrad);

    // Hinge on the theta-block gradient norm.
    ws.penalty.assign(batch, 0.0);
    ws.coeff.assign(batch, 0.0);
    parallel_rows(batch, [&](std::size_t b) {
        const double* g = ws.igrad.row_ptr(b) + dx;
        double nrm2 = 0.0;
        for (std::size_t j = 0; j < dtheta; ++j) nrm2 += g[j] * g[j];
        const double nrm = std::sqrt(nrm2);
        const double hinge = nrm - 1.0;
        if (hinge > 0.0) {
            ws.penalty[b] = lambda * hinge * hinge;
            // d(mean penalty)/d g = coeff * g
            ws.coeff[b] = 2.0 * lambda * hinge / (nrm * static_cast<double>(batch));
        }
    });
    const double mean_penalty = kernels::det_sum(ws.penalty) / static_cast<double>(batch);

    std::vector<std::size_t> active;
    for (std::size_t b = 0; b < batch; ++b)
        if (ws.coeff[b] != 0.0) active.push_back(b);
    if (active.empty()) return mean_penalty;

    // Pass 3: with the masks fixed, the theta-gradient is multilinear in
    // the weight matrices, so d(mean penalty)/d params follows from one
    // forward sweep of the seed vector v = coeff * g through the bias-free
    // masked-linear chain and one reverse sweep with outer products.
    // Biases receive no gradient from the penalty term.
    const std::size_t na = active.size();
    ws.seed.resize(na, dx + dtheta);
    parallel_rows(na, [&](std::size_t k) {
        const std::size_t b = active[k];
        double* r = ws.seed.row_ptr(k);
        const double* g = ws.igrad.row_ptr(b) + dx;
        for (std::size_t j = 0; j < dx; ++j) r[j] = 0.0;
        for (std::size_t j = 0; j < dtheta; ++j) r[dx + j] = ws.coeff[b] * g[j];
    });

    // Masks of the active rows, gathered once per hidden layer.
    std::vector<Matrix> masks_z(layers - 1);
    for (std::size_t l = 0; l + 1 < layers; ++l) {
        masks_z[l].resize(na, ws.cache.preact[l].cols());
        parallel_rows(na, [&](std::size_t k) {
            const double* src = ws.cache.preact[l].row_ptr(active[k]);
            double* dst = masks_z[l].row_ptr(k);
            for (std::size_t j = 0; j < masks_z[l].cols(); ++j) dst[j] = src[j];
        });
    }

    ws.chain_in.resize(layers);
    ws.chain_in[0] = ws.seed;
    for (std::size_t l = 0; l + 1 < layers; ++l) {
        Matrix& z = ws.chain_in[l + 1];
        z.resize(na, critic.weight(l).rows());
        kernels::gemm_nt(ws.chain_in[l], critic.weight(l), z, nullptr);
        mask_multiply(z, masks_z[l], critic);
    }

    ws.up.resize(na, 1);
    ws.up.fill(1.0);
    Matrix* up = &ws.up;
    Matrix* scratch = &ws.next;
    for (std::size_t li = layers; li-- > 0;) {
        kernels::gemm_tn(*up, ws.chain_in[li], grads.weights[li], /*accumulate=*/true);
        if (li == 0) break;
        scratch->resize(na, critic.weight(li).cols());
        kernels::gemm_nn(*up, critic.weight(li), *scratch);
        mask_multiply(*scratch, masks_z[li - 1], critic);
        std::swap(up, scratch);
    }
    return mean_penalty;
}

std::pair<double, MlpGrads> penalty_value_and_param_grad(const Mlp& critic,
                                                         std::span<const double> x,
                                                         std::span<const double> theta_bar,
                                                         double lambda) {
    Matrix xm(1, x.size());
    xm.set_row(0, x);
    Matrix tm(1, theta_bar.size());
    tm.set_row(0, theta_bar);
    MlpGrads grads = critic.zero_grads();
    double pen = gradient_penalty(critic, xm, tm, lambda, grads);
    return {pen, std::move(grads)};
}

void adam_step(Mlp& net, const MlpGrads& grads, AdamState& state, double lr) {
    require(lr > 0.0, "adam_step: lr must be positive");
    require(grads.weights.size() == net.num_layers() && state.m_w.size() == net.num_layers(),
            "adam_step: shape mismatch");
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        require(grads.weights[l].same_shape(net.weight(l)) &&
                    grads.biases[l].size() == net.bias(l).size(),
                "adam_step: gradient shape mismatch at layer " + std::to_string(l));
        for (std::size_t i = 0; i < grads.weights[l].size(); ++i)
            if (!std::isfinite(grads.weights[l].data()[i]))
                throw std::domain_error("adam_step: non-finite weight gradient in layer " +
                                        std::to_string(l));
        for (double v : grads.biases[l])
            if (!std::isfinite(v))
                throw std::domain_error("adam_step: non-finite bias gradient in layer " +
                                        std::to_string(l));
    }
    state.step += 1;
    const double b1 = state.beta1, b2 = state.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        Matrix& w = net.mutable_weight(l);
        Matrix& mw = state.m_w[l];
        Matrix& vw = state.v_w[l];
        const Matrix& gw = grads.weights[l];
        parallel_rows(w.rows(), [&](std::size_t r) {
            double* wp = w.row_ptr(r);
            double* mp = mw.row_ptr(r);
            double* vp = vw.row_ptr(r);
            const double* gp = gw.row_ptr(r);
            for (std::size_t j = 0; j < w.cols(); ++j) {
                const double g = gp[j];
                mp[j] = b1 * mp[j] + (1.0 - b1) * g;
                vp[j] = b2 * vp[j] + (1.0 - b2) * g * g;
                wp[j] -= lr * (mp[j] / bc1) / (std::sqrt(vp[j] / bc2) + state.eps);
            }
        });
        Vector& b = net.mutable_bias(l);
        for (std::size_t j = 0; j < b.size(); ++j) {
            const double g = grads.biases[l][j];
            state.m_b[l][j] = b1 * state.m_b[l][j] + (1.0 - b1) * g;
            state.v_b[l][j] = b2 * state.v_b[l][j] + (1.0 - b2) * g * g;
            b[j] -= lr * (state.m_b[l][j] / bc1) / (std::sqrt(state.v_b[l][j] / bc2) + state.eps);
        }
    }
}

// --- checkpoint io ----------------------------------------------------

std::string Mlp::to_json() const {
    nlohmann::json j;
    j["format"] = "mlp-checkpoint-v1";
    j["widths"] = widths();
    j["activation"] = act_ == Activation::Relu ? "relu" : "leaky_relu";
    j["leaky_slope"] = leaky_slope_;
    j["dropout_rate"] = dropout_rate_;
    j["output_activation"] = out_act_ == OutputActivation::Identity ? "identity" : "logistic";
    nlohmann::json ws = nlohmann::json::array(), bs = nlohmann::json::array();
    for (const auto& w : weights_) {
        std::vector<double> flat(w.data(), w.data() + w.size());
        ws.push_back(flat);
    }
    for (const auto& b : biases_) bs.push_back(b);
    j["weights"] = std::move(ws);
    j["biases"] = std::move(bs);
    return j.dump();
}

Mlp Mlp::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (j.value("format", "") != "mlp-checkpoint-v1")
        throw std::runtime_error("Mlp::from_json: unknown checkpoint format");
    Mlp net;
    const auto widths = j.at("widths").get<std::vector<std::size_t>>();
    net.act_ = j.at("activation").get<std::string>() == "relu" ? Activation::Relu
                                                               : Activation::LeakyRelu;
    net.leaky_slope_ = j.at("leaky_slope").get<double>();
    net.dropout_rate_ = j.at("dropout_rate").get<double>();
    net.out_act_ = j.at("output_activation").get<std::string>() == "identity"
                       ? OutputActivation::Identity
                       : OutputActivation::Logistic;
    const auto& ws = j.at("weights");
    const auto& bs = j.at("biases");
    if (ws.size() + 1 != widths.size() || bs.size() != ws.size())
        throw std::runtime_error("Mlp::from_json: inconsistent layer counts");
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        Matrix w(widths[l + 1], widths[l]);
        const auto flat = ws[l].get<std::vector<double>>();
        if (flat.size() != w.size())
            throw std::runtime_error("Mlp::from_json: weight size mismatch");
        for (std::size_t i = 0; i < flat.size(); ++i) w.data()[i] = flat[i];
        net.weights_.push_back(std::move(w));
        net.biases_.push_back(bs[l].get<Vector>());
        if (net.biases_.back().size() != widths[l + 1])
            throw std::runtime_error("Mlp::from_json: bias size mismatch");
    }
    return net;
}

void Mlp::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("Mlp::save: cannot open " + path);
    out << to_json();
}

Mlp Mlp::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("Mlp::load: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

}  // namespace bgan
