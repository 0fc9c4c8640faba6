#pragma once

#include <cmath>
#include <stdexcept>

#include "texseg/harness/config.hpp"

namespace texseg::harness {

// Linear warmup to base_lr over the first W iterations (first step nonzero),
// then poly decay (1 - (t-W)/(T-W))^p down to 0 at t = T.
inline double lr_at(int64_t t, const TrainConfig& cfg) {
    if (t < 0 || t > cfg.iterations) throw std::out_of_range("lr_at: iteration out of range");
    const int64_t warm = cfg.warmup_iterations;
    if (t < warm) return cfg.base_lr * static_cast<double>(t + 1) / static_cast<double>(warm);
    const double progress = static_cast<double>(t - warm) /
                            static_cast<double>(cfg.iterations - warm);
    return cfg.base_lr * std::pow(1.0 - progress, cfg.poly_power);
}

} // namespace texseg::harness
