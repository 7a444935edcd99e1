#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "sqz/common.hpp"

namespace sqz {

using Mat2 = Eigen::Matrix2cd;

namespace local {
inline Mat2 sp() { Mat2 m = Mat2::Zero(); m(0, 1) = 1.0; return m; }
inline Mat2 sm() { Mat2 m = Mat2::Zero(); m(1, 0) = 1.0; return m; }
inline Mat2 sz() { Mat2 m = Mat2::Zero(); m(0, 0) = 0.5; m(1, 1) = -0.5; return m; }
inline Mat2 sx() { return 0.5 * (sp() + sm()); }
inline Mat2 sy() { return -0.5 * kI * (sp() - sm()); }
}  // namespace local

/// Single-spin jump operator L applied to every spin with the same rate.
struct LocalJump {
    double rate = 0.0;
    Mat2 op = Mat2::Zero();
};

/// How the rotating frame of a strong S_x drive acts on the jumps.
enum class FrameRule {
    /// Amplitude rescaling s_{y,z} -> J0(beta) s_{y,z} applied to each jump
    /// operator (s_- becomes a single s_+/s_- mixture). Misses the s_y/s_z
    /// channels the drive opens; kept for comparison.
    amplitude,
    /// Secular average of the rotating-frame dissipator; the rotated s_y, s_z
    /// components split into channels weighted by (1 +- J0(2 beta)) / 2.
    time_averaged,
};

/// Uncorrelated single-spin decay (s_-) and dephasing (s_z).
struct DecoherenceSpec {
    double rate_decay = 0.0;    // Gamma_ud
    double rate_dephase = 0.0;  // Gamma_el
    double frame_bessel = 1.0;  // J0(beta); 1 when undriven
    double frame_bessel_2beta = 1.0;  // J0(2 beta); used by FrameRule::time_averaged
    FrameRule rule = FrameRule::time_averaged;

    void validate() const {
        require(rate_decay >= 0.0 && rate_dephase >= 0.0, "decoherence rates must be >= 0");
        require(std::abs(frame_bessel) <= 1.0 && std::abs(frame_bessel_2beta) <= 1.0, "frame Bessel factors must lie in [-1, 1]");
    }

    bool empty() const { return rate_decay == 0.0 && rate_dephase == 0.0; }

    std::vector<LocalJump> jumps() const {
        validate();
        std::vector<LocalJump> out;
        if (rule == FrameRule::amplitude) {
            const double j = frame_bessel;
            if (rate_decay > 0.0)
                out.push_back({rate_decay, 0.5 * (1.0 + j) * local::sm() + 0.5 * (1.0 - j) * local::sp()});
            if (rate_dephase > 0.0) out.push_back({rate_dephase, j * local::sz()});
        } else {
            // Frame angle beta sin(wt): <cos> = J0(beta), <cos^2> = c, <sin^2> = s.
            // The s_x/s_y cross term of D[s_-] keeps the factor J0(beta).
            const double j = frame_bessel;
            const double c = 0.5 * (1.0 + frame_bessel_2beta), s = 0.5 * (1.0 - frame_bessel_2beta);
            auto push = [&](double rate, const Mat2& op) {
                if (rate > 0.0) out.push_back({rate, op});
            };
            if (rate_decay > 0.0) {
                push(rate_decay, 0.5 * (1.0 + j) * local::sm() + 0.5 * (1.0 - j) * local::sp());
                push(rate_decay * std::max(0.0, c - j * j), local::sy());
                push(rate_decay * s, local::sz());
            }
            if (rate_dephase > 0.0) {
                push(rate_dephase * c, local::sz());
                push(rate_dephase * s, local::sy());
            }
        }
        return out;
    }
};

}  // namespace sqz
