#include "mvks/history.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mvks {

MarginalHistory::MarginalHistory(Grid1D grid_, TimeMesh mesh_)
    : grid(grid_), mesh(mesh_), densities(RowMatrix::Zero(mesh_.steps() + 1, grid_.size())),
      mass_log(static_cast<std::size_t>(mesh_.steps() + 1), 0.0),
      peak_scaled(static_cast<std::size_t>(mesh_.steps() + 1), 0.0),
      negative_counts(static_cast<std::size_t>(mesh_.steps() + 1), 0)
{
}

void MarginalHistory::set_row(Index k, const Eigen::Ref<const Field>& values, double pre_mass)
{
    if (k < 0 || k >= rows())
        throw UsageError("MarginalHistory: row index out of range");
    if (values.size() != grid.size())
        throw UsageError("MarginalHistory: row does not match grid");
    densities.row(k) = values.matrix().transpose();
    const auto uk = static_cast<std::size_t>(k);
    mass_log[uk] = pre_mass;
    peak_scaled[uk] = std::sqrt(mesh.t(k) - mesh.start()) * values.maxCoeff();
    negative_counts[uk] = (values < -kClipTolerance).count();
    populated = std::max(populated, k + 1);
}

void MarginalHistory::require_rows(Index count, const char* what) const
{
    if (populated < count)
        throw UsageError(std::string(what) + ": history rows not populated (have "
                         + std::to_string(populated) + ", need " + std::to_string(count) + ")");
}

MarginalHistory frozen_history(const Grid1D& grid, const TimeMesh& mesh,
                               const Eigen::Ref<const Field>& p)
{
    MarginalHistory h(grid, mesh);
    const double m = mass(grid, p);
    for (Index k = 0; k < h.rows(); ++k)
        h.set_row(k, p, m);
    return h;
}

} // namespace mvks
