#include "handik/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace handik {

void PckCurve::validate() const {
    if (thresholds.size() != values.size()) throw MetricError("PCK curve: thresholds and values differ in length");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] >= 0.0 && values[i] <= 1.0)) throw MetricError("PCK curve: value outside [0, 1]");
        if (i > 0 && !(thresholds[i] > thresholds[i - 1])) throw MetricError("PCK curve: thresholds not ascending");
    }
}

std::string PckCurve::to_csv() const {
    std::string out = "threshold,pck\n";
    char line[64];
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        std::snprintf(line, sizeof line, "%.6f,%.9f\n", thresholds[i], values[i]);
        out += line;
    }
    return out;
}

std::vector<double> joint_errors(const std::vector<JointSet>& preds, const std::vector<JointSet>& gts) {
    if (preds.size() != gts.size()) {
        throw MetricError("prediction and ground-truth lists differ in length (" + std::to_string(preds.size()) +
                          " vs " + std::to_string(gts.size()) + ")");
    }
    if (preds.empty()) throw MetricError("no samples to evaluate");
    std::vector<double> e;
    e.reserve(preds.size() * kNumJoints);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i].units != gts[i].units) throw MetricError("sample " + std::to_string(i) + ": unit mismatch");
        for (int j = 0; j < kNumJoints; ++j) e.push_back((preds[i][j] - gts[i][j]).norm());
    }
    return e;
}

namespace {
double fraction_within(const std::vector<double>& errors, double threshold) {
    const auto n = std::count_if(errors.begin(), errors.end(), [&](double e) { return e <= threshold; });
    return static_cast<double>(n) / static_cast<double>(errors.size());
}
}  // namespace

double pck(const std::vector<JointSet>& preds, const std::vector<JointSet>& gts, double threshold) {
    return fraction_within(joint_errors(preds, gts), threshold);
}

PckCurve pck_curve(const std::vector<JointSet>& preds, const std::vector<JointSet>& gts, double t_min, double t_max,
                   int steps) {
    if (!(t_min < t_max)) throw MetricError("pck_curve: t_min must be below t_max");
    if (steps < 2) throw MetricError("pck_curve: need at least 2 steps");
    const std::vector<double> errors = joint_errors(preds, gts);
    PckCurve c;
    for (int i = 0; i < steps; ++i) {
        const double t = i + 1 == steps ? t_max : t_min + (t_max - t_min) * i / (steps - 1);
        c.thresholds.push_back(t);
        c.values.push_back(fraction_within(errors, t));
    }
    return c;
}

double auc(const PckCurve& curve) {
    curve.validate();
    if (curve.thresholds.size() < 2) throw MetricError("AUC needs at least two curve points");
    double area = 0.0;
    for (std::size_t i = 1; i < curve.thresholds.size(); ++i) {
        area += 0.5 * (curve.values[i] + curve.values[i - 1]) * (curve.thresholds[i] - curve.thresholds[i - 1]);
    }
    return area / (curve.thresholds.back() - curve.thresholds.front());
}

}  // namespace handik
