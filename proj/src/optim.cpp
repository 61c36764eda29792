#include "vad/optim.hpp"

#include <cmath>

namespace vad {

void ParamSet::add(const std::string& name, Tensor value) {
    if (params.count(name)) throw ConfigError("duplicate parameter name: " + name);
    params.emplace(name, std::move(value));
}

void ParamSet::zero_grads() {
    for (const auto& [name, p] : params) {
        auto it = grads.find(name);
        if (it == grads.end() || !it->second.same_shape(p)) {
            grads[name] = Tensor(p.shape());
        } else {
            std::fill(it->second.vec().begin(), it->second.vec().end(), 0.0);
        }
    }
}

std::size_t ParamSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& [name, p] : params) n += p.size();
    return n;
}

void adam_step(ParamSet& ps, OptimState& st) {
    for (const auto& [name, p] : ps.params) {
        auto git = ps.grads.find(name);
        if (git == ps.grads.end() || !git->second.same_shape(p))
            throw IncompleteGradientError("missing gradient for parameter: " + name);
    }
    st.step += 1;
    const double b1 = st.beta1, b2 = st.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(st.step));
    for (auto& [name, p] : ps.params) {
        const Tensor& g = ps.grads.at(name);
        Tensor& m = st.m.try_emplace(name, Tensor(p.shape())).first->second;
        Tensor& v = st.v.try_emplace(name, Tensor(p.shape())).first->second;
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= st.lr * mhat / (std::sqrt(vhat) + st.epsilon);
        }
        if (!p.all_finite()) throw NumericError("adam_step produced non-finite parameter: " + name);
    }
}

GradCheckReport grad_check(const std::function<double(ParamSet&)>& loss_fn,
                           ParamSet& params, double eps) {
    if (!(eps > 0.0)) throw ConfigError("grad_check: eps must be positive");

    const double f0 = loss_fn(params);
    std::map<std::string, Tensor> analytic = params.grads;
    const double f0_again = loss_fn(params);
    if (f0 != f0_again)
        throw DeterminismError("loss_fn not deterministic: two evaluations differ");

    GradCheckReport report;
    for (auto& [name, p] : params.params) {
        const Tensor& ga = analytic.at(name);
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double saved = p[i];
            p[i] = saved + eps;
            const double fp = loss_fn(params);
            p[i] = saved - eps;
            const double fm = loss_fn(params);
            p[i] = saved;
            const double numeric = (fp - fm) / (2.0 * eps);
            const double a = ga[i];
            const double denom = std::max({1.0, std::fabs(a), std::fabs(numeric)});
            const double rel = std::fabs(a - numeric) / denom;
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_param = name + "[" + std::to_string(i) + "]";
            }
            ++report.checked;
        }
    }
    // restore gradients at the unperturbed point
    params.grads = std::move(analytic);
    return report;
}

}  // namespace vad
