#pragma once

#include <string>

namespace fleetrank {

// Inputs to the inference-cost model. Units are LLM token-units; multiplying
// by t_llm (seconds per unit) yields wall-clock seconds.
struct CostParams {
    double l_p = 100.0;  // average passage length in tokens
    int k = 10;          // passages per ranking
    int n_ranks = 8;     // candidate rankings
    int n_step = 20;     // sliding-window steps (listwise baselines)
    int s_windows = 10;  // window size; n_step * s_windows defaults to 200
    int n = 100;         // candidate pool for the tree-reduction baseline
    double t_llm = 1.0;  // seconds per token-unit

    void validate() const;
};

enum class CostMethod {
    PassageBased,  // L_p
    RankPointwise, // k * L_p
    RankPairwise,  // N_ranks * k * L_p
    RankGpt,       // N_step * S_windows * L_p
    ListT5,        // (N + k * log2(N)) * L_p, constant taken as 1
};

const char* cost_method_name(CostMethod method);
CostMethod cost_method_from_name(const std::string& name);

struct CostEstimate {
    double units = 0.0;
    double seconds = 0.0; // units * t_llm
};

CostEstimate estimate_cost(const CostParams& params, CostMethod method);

} // namespace fleetrank
