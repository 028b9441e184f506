#include "capde/optim.hpp"

#include <cmath>
#include <limits>

namespace capde {

void adam_step(ParamStore& params, const GradientMap& grads, AdamState& state, double lr) {
    if (!(lr > 0.0)) throw ShapeError("adam_step: lr must be positive");
    state.t += 1;
    const double b1 = state.beta1, b2 = state.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    for (const auto& [name, g] : grads.g) {
        if (params.is_frozen(name)) throw InvariantError("gradient supplied for frozen parameter: " + name);
        Tensor& p = params.ref(name);
        if (p.shape != g.shape)
            throw ShapeError("adam_step: gradient shape mismatch for " + name + " " + shape_str(p.shape) +
                             " vs " + shape_str(g.shape));
        auto [mit, inserted_m] = state.m.try_emplace(name, Tensor::zeros(p.shape));
        auto [vit, inserted_v] = state.v.try_emplace(name, Tensor::zeros(p.shape));
        Tensor& m = mit->second;
        Tensor& v = vit->second;
        for (std::size_t i = 0; i < p.numel(); ++i) {
            m.data[i] = b1 * m.data[i] + (1.0 - b1) * g.data[i];
            v.data[i] = b2 * v.data[i] + (1.0 - b2) * g.data[i] * g.data[i];
            const double mhat = m.data[i] / bc1;
            const double vhat = v.data[i] / bc2;
            p.data[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

PlateauDecision plateau_schedule(double lr, double best_loss, double current_loss,
                                 int epochs_since_improve, double threshold, int patience,
                                 double decay, double min_lr) {
    PlateauDecision d{lr, best_loss, epochs_since_improve, false};
    if (current_loss < best_loss * (1.0 - threshold)) {
        d.best_loss = current_loss;
        d.epochs_since_improve = 0;
        return d;
    }
    d.epochs_since_improve += 1;
    if (d.epochs_since_improve >= patience) {
        d.lr = std::max(lr * decay, min_lr);
        d.epochs_since_improve = 0;
        d.reduced = true;
    }
    return d;
}

PlateauScheduler::PlateauScheduler(double lr, double threshold, int patience, double decay,
                                   double min_lr)
    : lr_(lr),
      threshold_(threshold),
      decay_(decay),
      min_lr_(min_lr),
      patience_(patience),
      best_(std::numeric_limits<double>::infinity()) {}

double PlateauScheduler::step(double loss) {
    PlateauDecision d = plateau_schedule(lr_, best_, loss, since_, threshold_, patience_, decay_, min_lr_);
    lr_ = d.lr;
    best_ = d.best_loss;
    since_ = d.epochs_since_improve;
    return lr_;
}

}  // namespace capde
