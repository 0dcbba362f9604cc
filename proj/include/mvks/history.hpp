#pragma once

#include <vector>

#include <Eigen/Core>

#include "mvks/grid.hpp"

namespace mvks {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// The family (p_{t_k}), k = 0..M, of time marginals on one grid and mesh.
/// Row k holds p_{t_k}. Rows beyond `populated` are not yet computed.
struct MarginalHistory {
    MarginalHistory(Grid1D grid, TimeMesh mesh);

    Grid1D grid;
    TimeMesh mesh;
    RowMatrix densities;
    Index populated = 0;
    std::vector<double> mass_log;   // quadrature mass of each row before renormalization
    std::vector<double> peak_scaled; // sqrt(t_k - t_0) * max(row k)
    std::vector<Index> negative_counts;

    Index rows() const { return mesh.steps() + 1; }
    Field row(Index k) const { return densities.row(k).transpose().array(); }
    DensityField density(Index k) const { return {row(k), mesh.t(k)}; }

    /// Stores row k and its diagnostics, marking rows 0..k populated.
    void set_row(Index k, const Eigen::Ref<const Field>& values, double pre_mass);

    void require_rows(Index count, const char* what) const;
};

/// A history whose rows all equal `p`.
MarginalHistory frozen_history(const Grid1D& grid, const TimeMesh& mesh,
                               const Eigen::Ref<const Field>& p);

} // namespace mvks
