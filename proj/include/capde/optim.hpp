#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "capde/params.hpp"
#include "capde/tensor.hpp"

namespace capde {

// Bias-corrected Adam. Moments are created lazily (zero at t = 0).
struct AdamState {
    std::map<std::string, Tensor> m;
    std::map<std::string, Tensor> v;
    std::uint64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// One update over every non-frozen entry present in grads. Frozen entries
// are untouched by construction; shape mismatches are rejected.
void adam_step(ParamStore& params, const GradientMap& grads, AdamState& state, double lr);

struct PlateauDecision {
    double lr;
    double best_loss;
    int epochs_since_improve;
    bool reduced;
};

// Reduce-on-plateau with a relative improvement threshold: the counter
// resets when current < best * (1 - threshold); after `patience`
// consecutive non-improving epochs the lr decays (floored at min_lr).
PlateauDecision plateau_schedule(double lr, double best_loss, double current_loss,
                                 int epochs_since_improve, double threshold, int patience,
                                 double decay, double min_lr);

// Stateful convenience wrapper around plateau_schedule.
class PlateauScheduler {
  public:
    PlateauScheduler(double lr, double threshold = 0.01, int patience = 250, double decay = 0.9,
                     double min_lr = 1e-5);

    // Feed the epoch loss, get the lr to use next.
    double step(double loss);
    double lr() const { return lr_; }
    double best() const { return best_; }

  private:
    double lr_, threshold_, decay_, min_lr_;
    int patience_;
    double best_;
    int since_ = 0;
};

}  // namespace capde
