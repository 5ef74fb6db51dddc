#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bgan/matrix.hpp"
#include "bgan/rng.hpp"

namespace bgan {

enum class Activation { Relu, LeakyRelu };
enum class OutputActivation { Identity, Logistic };
enum class InitScheme { HeUniform, Zeros };
enum class RunMode { Train, Eval };

struct MlpGrads {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;

    void add(const MlpGrads& other);
    void scale(double s);
};

/// Bias-corrected Adam accumulators; shapes mirror the network exactly.
struct AdamState {
    std::vector<Matrix> m_w, v_w;
    std::vector<Vector> m_b, v_b;
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Intermediate state recorded by forward() for the reverse pass.
struct ForwardCache {
    const void* net = nullptr;
    std::uint64_t revision = 0;
    RunMode mode = RunMode::Eval;
    Matrix input;
    std::vector<Matrix> preact;       // z_l per layer
    std::vector<Matrix> act;          // post-activation (and dropout) per hidden layer
    std::vector<Matrix> drop_scale;   // inverted-dropout multipliers, train mode only
    Matrix output;
};

/// Small dense feed-forward network with piecewise-linear hidden
/// activations. Weights are [out x in] row-major; layer l maps
/// widths[l] -> widths[l+1]. Inverted dropout on hidden activations in
/// train mode. Double-backward for the critic gradient penalty is
/// specialized to fixed activation masks (exact almost everywhere for
/// relu / leaky relu).
class Mlp {
public:
    Mlp() = default;

    /// widths = (input, hidden..., output); requires at least one hidden layer.
    static Mlp init(const std::vector<std::size_t>& widths, Activation act,
                    double leaky_slope, double dropout_rate, OutputActivation out_act,
                    InitScheme scheme, RngStream& rng);

    std::size_t num_layers() const { return weights_.size(); }
    std::size_t input_dim() const { return weights_.empty() ? 0 : weights_.front().cols(); }
    std::size_t output_dim() const { return weights_.empty() ? 0 : weights_.back().rows(); }
    std::vector<std::size_t> widths() const;

    Activation activation() const { return act_; }
    double leaky_slope() const { return leaky_slope_; }
    double dropout_rate() const { return dropout_rate_; }
    OutputActivation output_activation() const { return out_act_; }
    std::uint64_t revision() const { return revision_; }

    const Matrix& weight(std::size_t l) const { return weights_[l]; }
    const Vector& bias(std::size_t l) const { return biases_[l]; }
    Matrix& mutable_weight(std::size_t l) { ++revision_; return weights_[l]; }
    Vector& mutable_bias(std::size_t l) { ++revision_; return biases_[l]; }

    /// Batched forward pass. In train mode dropout masks are drawn from
    /// rng (required); eval mode is a pure function of the inputs.
    Matrix forward(const Matrix& inputs, RunMode mode, RngStream* rng = nullptr,
                   ForwardCache* cache = nullptr) const;

    /// Gradients of a scalar loss whose per-output gradient is `upstream`,
    /// with respect to every parameter (and optionally the inputs).
    /// The cache must come from a matching forward on this revision.
    void backward(const ForwardCache& cache, const Matrix& upstream, MlpGrads* param_grads,
                  Matrix* input_grads = nullptr) const;

    /// Exact gradient of the (scalar) output at a single point with
    /// respect to the selected input coordinates; dropout disabled.
    Vector input_gradient(std::span<const double> point,
                          std::span<const std::size_t> subset) const;

    MlpGrads zero_grads() const;
    AdamState zero_adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) const;

    bool finite() const;

    std::string to_json() const;
    static Mlp from_json(const std::string& text);
    void save(const std::string& path) const;
    static Mlp load(const std::string& path);

    friend bool operator==(const Mlp& a, const Mlp& b);

private:
    friend struct PenaltyWorkspace;
    std::vector<Matrix> weights_;
    std::vector<Vector> biases_;
    Activation act_ = Activation::Relu;
    double leaky_slope_ = 0.1;
    double dropout_rate_ = 0.0;
    OutputActivation out_act_ = OutputActivation::Identity;
    std::uint64_t revision_ = 0;

    double act_deriv(double preact) const;
};

/// One-sided WGAN gradient penalty, one interpolation point per row:
///   lambda * max(0, ||d f / d theta||_2 - 1)^2
/// where the gradient is taken over the trailing theta_dim input
/// coordinates of the critic at concat(x_row, theta_row). Returns the
/// batch mean penalty and accumulates d(mean penalty)/d(params) into
/// grads. Dropout is disabled; activation masks are held fixed for the
/// second reverse pass.
double gradient_penalty(const Mlp& critic, const Matrix& x, const Matrix& theta_bar,
                        double lambda, MlpGrads& grads);

/// Single-point variant: returns (penalty, parameter gradients).
std::pair<double, MlpGrads> penalty_value_and_param_grad(const Mlp& critic,
                                                         std::span<const double> x,
                                                         std::span<const double> theta_bar,
                                                         double lambda);

/// In-place bias-corrected Adam update; throws on non-finite gradients,
/// naming the offending layer.
void adam_step(Mlp& net, const MlpGrads& grads, AdamState& state, double lr);

}  // namespace bgan
