#pragma once

#include "streamforge/config.hpp"

namespace sfbench {

inline streamforge::RunConfig desk_config() {
    streamforge::RunConfig cfg;
    streamforge::apply_preset(cfg, "desk");
    return cfg;
}

inline streamforge::MultimodalCondition condition_of(const streamforge::RunConfig& cfg,
                                                     std::size_t frames) {
    streamforge::Rng rng = streamforge::Rng::substream(cfg.seed, "bench-cond");
    return streamforge::generate_conditions(rng, 1, streamforge::DegradationMix{1.0, 0.0, 0.0},
                                            cfg.d_c, frames)[0];
}

}  // namespace sfbench
