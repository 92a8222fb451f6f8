#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace sigbsde {

/// Per-cell regression design on the price axis.
enum class Design { constant, linear };

struct PartitionConfig {
    int cells = 64;
    int min_cell_paths = 50;
    Design design = Design::constant;

    void validate() const;
};

/// Equiprobable cells on the sample of a scalar regressor. Equal regressor
/// values always share a cell; undersized cells are merged into a neighbour.
class BasisPartition {
public:
    static BasisPartition build(const Eigen::ArrayXd& regressor, const PartitionConfig& config);

    [[nodiscard]] std::size_t cell_count() const { return members_.size(); }
    [[nodiscard]] Design design() const { return design_; }
    /// Interior cell edges; cell j holds values in [edge_{j-1}, edge_j).
    [[nodiscard]] const std::vector<double>& edges() const { return edges_; }
    [[nodiscard]] std::size_t cell_of(double s) const;
    [[nodiscard]] const std::vector<std::size_t>& cell_ids() const { return cell_ids_; }
    /// Path indices of each cell in ascending order.
    [[nodiscard]] const std::vector<std::vector<std::size_t>>& members() const { return members_; }

private:
    Design design_ = Design::constant;
    std::vector<double> edges_;
    std::vector<std::size_t> cell_ids_;
    std::vector<std::vector<std::size_t>> members_;
};

/// Fitted local polynomial: value = intercept + slope (s - center) per cell.
struct CellFit {
    Eigen::ArrayXd intercept;
    Eigen::ArrayXd slope;
    Eigen::ArrayXd center;
    std::vector<bool> singular;  ///< linear design fell back to the cell mean

    [[nodiscard]] double predict(std::size_t cell, double s) const {
        const auto c = static_cast<Eigen::Index>(cell);
        return intercept(c) + slope(c) * (s - center(c));
    }
    [[nodiscard]] std::size_t singular_count() const;
};

struct FitResult {
    CellFit fit;
    Eigen::ArrayXd fitted;  ///< predictor evaluated on the sample
};

/// Least-squares projection of `targets` on the cell design.
[[nodiscard]] FitResult fit_conditional_expectation(const Eigen::ArrayXd& targets, const Eigen::ArrayXd& regressor,
                                                    const BasisPartition& partition);

/// Same projection returning only the per-cell coefficients.
[[nodiscard]] CellFit fit_cells(const Eigen::ArrayXd& targets, const Eigen::ArrayXd& regressor,
                                const BasisPartition& partition);

}  // namespace sigbsde
