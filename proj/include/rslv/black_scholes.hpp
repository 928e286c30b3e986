#pragma once

namespace rslv {

/// Black-Scholes call price C = S0 Phi(d1) - K e^{-rT} Phi(d2). K = 0 gives S0
/// and T = 0 or sigma = 0 gives the discounted intrinsic value.
double bs_call(double spot, double strike, double T, double sigma, double r);

}  // namespace rslv
