#pragma once

#include "handik/kinematics.hpp"

#include <string>
#include <vector>

namespace handik {

class MetricError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct PckCurve {
    std::vector<double> thresholds;
    std::vector<double> values;

    void validate() const;
    /// "threshold,pck" header, one row per threshold.
    std::string to_csv() const;
};

/// Fraction of (sample, joint) pairs, pooled, with error <= threshold.
double pck(const std::vector<JointSet>& preds, const std::vector<JointSet>& gts, double threshold);

/// Per-pair Euclidean errors, sample-major.
std::vector<double> joint_errors(const std::vector<JointSet>& preds, const std::vector<JointSet>& gts);

/// `steps` evenly spaced thresholds over [t_min, t_max], endpoints included.
PckCurve pck_curve(const std::vector<JointSet>& preds, const std::vector<JointSet>& gts, double t_min = 20.0,
                   double t_max = 50.0, int steps = 31);

/// Trapezoidal area under the curve divided by the threshold span.
double auc(const PckCurve& curve);

}  // namespace handik
