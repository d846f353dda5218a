#include "fleetrank/cost.hpp"

#include <cmath>

#include "fleetrank/errors.hpp"

namespace fleetrank {

void CostParams::validate() const {
    if (l_p <= 0) throw ValidationError("l_p must be positive");
    if (k < 1) throw ValidationError("k must be >= 1");
    if (n_ranks < 1) throw ValidationError("n_ranks must be >= 1");
    if (n_step < 1) throw ValidationError("n_step must be >= 1");
    if (s_windows < 1) throw ValidationError("s_windows must be >= 1");
    if (n < 1) throw ValidationError("n must be >= 1");
    if (t_llm <= 0) throw ValidationError("t_llm must be positive");
}

const char* cost_method_name(CostMethod method) {
    switch (method) {
    case CostMethod::PassageBased: return "passage-based";
    case CostMethod::RankPointwise: return "rank-pointwise";
    case CostMethod::RankPairwise: return "rank-pairwise";
    case CostMethod::RankGpt: return "rankgpt";
    case CostMethod::ListT5: return "listt5";
    }
    return "?";
}

CostMethod cost_method_from_name(const std::string& name) {
    if (name == "passage-based") return CostMethod::PassageBased;
    if (name == "rank-pointwise") return CostMethod::RankPointwise;
    if (name == "rank-pairwise") return CostMethod::RankPairwise;
    if (name == "rankgpt") return CostMethod::RankGpt;
    if (name == "listt5") return CostMethod::ListT5;
    throw ValidationError("unknown cost method: " + name);
}

CostEstimate estimate_cost(const CostParams& params, CostMethod method) {
    params.validate();
    double units = 0.0;
    switch (method) {
    case CostMethod::PassageBased:
        units = params.l_p;
        break;
    case CostMethod::RankPointwise:
        units = params.k * params.l_p;
        break;
    case CostMethod::RankPairwise:
        units = static_cast<double>(params.n_ranks) * params.k * params.l_p;
        break;
    case CostMethod::RankGpt:
        units = static_cast<double>(params.n_step) * params.s_windows * params.l_p;
        break;
    case CostMethod::ListT5:
        units = (params.n + params.k * std::log2(static_cast<double>(params.n))) * params.l_p;
        break;
    }
    return {units, units * params.t_llm};
}

} // namespace fleetrank
