#pragma once

#include "causalid/dynamics.hpp"

namespace causalid {

struct KernelConfig {
    double lengthscale = 1.0;
};

// m equal-length vectors, one per experiment repetition; rows are samples.
struct SampleSet {
    Matrix samples; // m x d

    int size() const { return static_cast<int>(samples.rows()); }
    int dim() const { return static_cast<int>(samples.cols()); }
};

// Flatten one state component over time, one row per run. If subtract_initial
// is set, each run's value at t=0 is subtracted from its whole row.
SampleSet embed(const TrajectoryBatch& batch, int component, bool subtract_initial);

double gaussian_kernel(const Vector& a, const Vector& b, const KernelConfig& cfg);

// Unbiased empirical squared MMD (U-statistic); may be negative, never clamped.
double mmd2_unbiased(const SampleSet& X, const SampleSet& Y, const KernelConfig& cfg);

} // namespace causalid
