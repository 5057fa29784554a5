#pragma once

#include <stdexcept>
#include <vector>

#include "numerics.hpp"

namespace langevin {

// Equal-weight point cloud; rows of X are points in R^d.
struct EmpiricalMeasure {
    Mat X;

    EmpiricalMeasure() = default;
    explicit EmpiricalMeasure(Mat points) : X(std::move(points)) {
        if (X.rows() == 0) throw std::invalid_argument("EmpiricalMeasure: empty");
        if (!X.allFinite()) throw std::invalid_argument("EmpiricalMeasure: non-finite point");
    }

    long size() const { return X.rows(); }
    int dim() const { return static_cast<int>(X.cols()); }

    Vec mean() const { return X.colwise().mean(); }

    double second_moment() const { return X.rowwise().squaredNorm().mean(); }

    std::vector<double> squared_norms() const {
        std::vector<double> v(static_cast<std::size_t>(X.rows()));
        for (long i = 0; i < X.rows(); ++i) v[i] = X.row(i).squaredNorm();
        return v;
    }

    // 1D point list (requires dim == 1)
    std::vector<double> as_scalars() const {
        if (dim() != 1) throw std::invalid_argument("as_scalars: dim != 1");
        std::vector<double> v(static_cast<std::size_t>(X.rows()));
        for (long i = 0; i < X.rows(); ++i) v[i] = X(i, 0);
        return v;
    }
};

// Snapshots of a replica ensemble along a run.
struct ReplicaEnsemble {
    std::vector<long> steps;
    std::vector<double> times;
    std::vector<EmpiricalMeasure> snapshots;
    std::vector<std::string> warnings;

    const EmpiricalMeasure& at(std::size_t i) const { return snapshots.at(i); }
    const EmpiricalMeasure& terminal() const { return snapshots.back(); }
    std::size_t size() const { return snapshots.size(); }
};

} // namespace langevin
