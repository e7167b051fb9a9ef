#include "core/net.hpp"

#include <sstream>

namespace sdap {

AuditReport blind_spot_audit(const BsnNet<float>& net, int trials, std::uint64_t seed) {
    if (trials < 1) raise(ErrorCode::invalid_argument, "audit needs trials >= 1");
    AuditReport report;
    report.trials = trials;
    report.pass = true;
    Rng rng(derive_seed(seed, {0x61756469ULL}));
    const int side = std::max(net.min_input_size(), 2 * net.config().branch_dilations[1] + 4);
    static constexpr float kDeltas[4] = {0.25f, -0.25f, 1.0f, -1.0f};

    for (int t = 0; t < trials; ++t) {
        Tensor<float> x(1, net.config().in_channels, side, side);
        for (float& v : x.v) v = static_cast<float>(rng.uniform01());
        const int py = static_cast<int>(rng.below(side));
        const int px = static_cast<int>(rng.below(side));
        const int pc = static_cast<int>(rng.below(static_cast<std::uint64_t>(x.c)));
        const float delta = kDeltas[rng.below(4)];

        const Tensor<float> base = net.forward(x);
        x.at(0, pc, py, px) += delta;
        const Tensor<float> bumped = net.forward(x);

        for (int c = 0; c < base.c; ++c) {
            const double dev =
                std::abs(static_cast<double>(bumped.at(0, c, py, px)) - base.at(0, c, py, px));
            if (dev > report.max_deviation) report.max_deviation = dev;
            if (dev != 0.0 && report.pass) {
                report.pass = false;
                std::ostringstream os;
                os << "output at (" << py << "," << px << ") channel " << c << " moved by " << dev
                   << " after delta " << delta << " on input channel " << pc;
                report.detail = os.str();
            }
        }
    }
    if (report.pass) report.detail = "max deviation 0";
    return report;
}

}  // namespace sdap
