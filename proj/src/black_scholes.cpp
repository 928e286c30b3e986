#include "rslv/black_scholes.hpp"

#include "rslv/errors.hpp"
#include "rslv/stats.hpp"

#include <algorithm>
#include <cmath>

namespace rslv {

double bs_call(double spot, double strike, double T, double sigma, double r) {
    if (!(spot > 0.0) || !(strike >= 0.0) || !(T >= 0.0) || !(sigma >= 0.0)) {
        throw DomainError("bs_call: invalid arguments");
    }
    const double disc = std::exp(-r * T);
    if (strike == 0.0) return spot;
    const double vol = sigma * std::sqrt(T);
    if (vol == 0.0) return std::max(spot - strike * disc, 0.0);
    const double d1 = (std::log(spot / strike) + r * T) / vol + 0.5 * vol;
    return spot * normal_cdf(d1) - strike * disc * normal_cdf(d1 - vol);
}

}  // namespace rslv
