#include "fracbubble/constants.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string_view>
#include <tuple>

#include "fracbubble/bubbles.hpp"
#include "fracbubble/extension.hpp"

namespace fracbubble {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

}  // namespace

ConstantSet compute_constants(const FracParams& p, long long per_oracle_budget) {
    ConstantSet cs;
    cs.params = p;
    cs.per_oracle_budget = per_oracle_budget;
    cs.converged = true;

    // Pure-integral entries, available at every gamma.
    {
        Budget b{per_oracle_budget};
        QuadResult r = c1_oracle(p, QuadTol{1e-11, 1e-10}, b);
        cs.c1 = r.value;
        cs.converged = cs.converged && r.converged;
    }
    {
        Budget b{per_oracle_budget};
        QuadResult r = c3_oracle(p, QuadTol{1e-11, 1e-10}, b);
        cs.c3 = r.value;
        cs.converged = cs.converged && r.converged;
    }
    cs.p_poisson = 1.0 / cs.c3;

    // Everything below rests on the y^{2g} boundary expansion, which the
    // guard band around g = 1/2 excludes.
    cs.expansion_available = !p.near_half;
    cs.c_frac = cs.d_star = cs.d_gamma = kNan;
    cs.c2 = cs.c4 = cs.c_star = cs.g_green = cs.yamabe_sphere = kNan;
    cs.pde_ratio_spread = cs.d_star_spread = kNan;
    cs.extension_gap = cs.energy_identity_rel = kNan;
    if (!cs.expansion_available) {
        cs.relations_ok = true;  // nothing checkable was violated
        return cs;
    }

    try {
        {
            Budget b{per_oracle_budget};
            PdeResidual pde = bubble_pde_residual(make_bubble(vec(0.0, 0.0, 0.0), 1.0),
                                                  p, QuadTol{1e-9, 1e-7}, b);
            cs.c_frac = pde.mean_ratio;
            cs.pde_ratio_spread = pde.max_rel_dev;
            cs.converged = cs.converged && pde.converged;
        }
        {
            Budget b{per_oracle_budget};
            TraceCalibration cal = extract_d_star(p, cs.c_frac, {1.0, 4.0, 16.0},
                                                  {0.0, 0.3, 0.7}, b);
            cs.d_star = cal.d_star;
            cs.d_star_spread = cal.spread;
            cs.converged = cs.converged && b.ok();
        }
        {
            Budget b{per_oracle_budget};
            EnergyOracle e = extension_energy_bubble(p, b);
            cs.c2 = cs.d_star * e.value;
            cs.extension_gap = e.richardson_gap;
            cs.converged = cs.converged && b.ok();
        }
        {
            Budget b{per_oracle_budget};
            cs.g_green = green_constant(p, cs.d_star, b);
            cs.converged = cs.converged && b.ok();
        }
    } catch (const std::runtime_error& err) {
        // The trace oracles cannot hand back partial results, so a budget too
        // small to build them surfaces as a throw; report it as an unconverged
        // set (unfinished entries stay NaN) instead of panicking.
        if (std::string_view(err.what()).find("exhausted") == std::string_view::npos)
            throw;
        cs.converged = false;
        cs.relations_ok = false;
        return cs;
    }

    cs.d_gamma = 2.0 * p.gamma * cs.d_star;
    cs.c4 = cs.c_frac * cs.c3;
    cs.c_star = cs.d_star * cs.c3;
    cs.yamabe_sphere = cs.c2 / std::pow(cs.c1, (p.n - 2.0 * p.gamma) / p.n);

    const double product = cs.c_frac * cs.c1;
    cs.energy_identity_rel = std::fabs(cs.c2 - product) / product;
    cs.relations_ok = cs.energy_identity_rel <= 1e-3;
    return cs;
}

const ConstantSet& cached_constants(const FracParams& p, long long per_oracle_budget) {
    using Key = std::tuple<int, std::uint64_t, long long>;
    static std::mutex mu;
    static std::map<Key, std::unique_ptr<ConstantSet>> cache;

    std::uint64_t gamma_bits = 0;
    static_assert(sizeof(gamma_bits) == sizeof(p.gamma));
    std::memcpy(&gamma_bits, &p.gamma, sizeof(gamma_bits));
    const Key key{p.n, gamma_bits, per_oracle_budget};

    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(key);
        if (it != cache.end()) return *it->second;
    }
    // Deterministic oracles: a concurrent duplicate computation yields the
    // identical value, so computing outside the lock only costs work.
    auto fresh = std::make_unique<ConstantSet>(compute_constants(p, per_oracle_budget));
    std::lock_guard<std::mutex> lock(mu);
    return *cache.emplace(key, std::move(fresh)).first->second;
}

}  // namespace fracbubble
