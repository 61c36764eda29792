#pragma once

#include <functional>
#include <map>
#include <string>

#include "vad/tensor.hpp"

namespace vad {

struct DeterminismError : NumericError {
    explicit DeterminismError(const std::string& msg) : NumericError(msg) {}
};

struct IncompleteGradientError : NumericError {
    explicit IncompleteGradientError(const std::string& msg) : NumericError(msg) {}
};

// Named parameters plus their gradients. std::map keeps iteration order
// stable, which keeps optimizer updates bit-reproducible.
struct ParamSet {
    std::map<std::string, Tensor> params;
    std::map<std::string, Tensor> grads;

    void add(const std::string& name, Tensor value);
    void zero_grads();
    std::size_t scalar_count() const;
};

struct OptimState {
    std::size_t step = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::map<std::string, Tensor> m;
    std::map<std::string, Tensor> v;
};

// Bias-corrected Adam. Requires a gradient for every parameter.
void adam_step(ParamSet& params, OptimState& state);

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t checked = 0;
};

// loss_fn must evaluate the loss at `params` AND fill params.grads with the
// reverse-mode gradient. Central differences re-invoke loss_fn with perturbed
// parameters; relative error uses a max(1, |analytic|, |numeric|) denominator.
GradCheckReport grad_check(const std::function<double(ParamSet&)>& loss_fn,
                           ParamSet& params, double eps);

}  // namespace vad
