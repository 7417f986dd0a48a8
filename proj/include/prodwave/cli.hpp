#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace prodwave {

struct RatePrediction {
    double delta = 0.0;
    double rate_exponent = 0.5;  // 1 / (2 + delta)
    std::string provenance;
};

/// Decay exponent of E^{1/2} predicted by a transverse resolvent exponent delta >= 0.
RatePrediction predict_rate(double delta);

/// The three tabulated cases delta = 0, 1, 2.
const std::vector<RatePrediction>& rate_table();

/// Exit codes of run().
inline constexpr int exit_ok = 0;
inline constexpr int exit_input_error = 1;
inline constexpr int exit_tolerance_failure = 2;

/// Command line entry point. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

} // namespace prodwave
