#pragma once

// Tensor-product meshes T_Omega x I_Y of the truncated cylinder (0,1)^n x (0,Y).

#include <array>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "fracctl/spectral.hpp"

namespace fracctl::mesh {

/// Uniform structured partition of (0,1)^n, n in {1,2}, into intervals or squares.
class BasePartition {
public:
    BasePartition(int dim, int cells_per_side);

    int dim() const { return dim_; }
    int cells_per_side() const { return cells_; }
    double h() const { return 1.0 / cells_; }
    int nodes_per_side() const { return cells_ + 1; }
    int node_count() const;
    int cell_count() const;
    /// Nodes not on the boundary of Omega (the trace degrees of freedom).
    int interior_count() const;
    int interior_per_side() const { return cells_ - 1; }
    double cell_measure() const;

    /// Node multi-index (i, j), j = 0 for n = 1.
    std::array<int, 2> node_index(int node) const;
    int node_id(int i, int j = 0) const { return dim_ == 1 ? i : j * (cells_ + 1) + i; }
    BasePoint node_coord(int node) const;
    bool on_boundary(int node) const;

    /// Interior numbering (i-1) + (j-1)(N-1); -1 for boundary nodes.
    int interior_index(int node) const;
    int interior_node(int interior) const;

    std::array<int, 2> cell_index(int cell) const;
    int cell_id(int i, int j = 0) const { return dim_ == 1 ? i : j * cells_ + i; }
    BasePoint cell_origin(int cell) const;
    /// Corner nodes, ordered lexicographically (x1 fastest); 2 or 4 entries.
    std::vector<int> cell_nodes(int cell) const;
    /// Cell containing a point (points on cell faces go to the upper cell, clamped).
    int locate(const BasePoint& x) const;

private:
    int dim_;
    int cells_;
};

/// Graded partition y_k = (k/M)^gamma Y of [0, Y].
class GradedPartition {
public:
    GradedPartition(int intervals, double gamma, double height);

    int intervals() const { return static_cast<int>(nodes_.size()) - 1; }
    double gamma() const { return gamma_; }
    double height() const { return height_; }
    const std::vector<double>& nodes() const { return nodes_; }
    double width(int k) const { return nodes_[k + 1] - nodes_[k]; }

    /// Set when a fractional power was supplied at construction: gamma > 3/(2s).
    std::optional<bool> gamma_admissible;

private:
    double gamma_;
    double height_;
    std::vector<double> nodes_;
};

double min_admissible_grading(double s);
/// 3/(2s) + 0.1.
double default_grading(double s);

/// Throws ConfigurationError for M < 1, gamma < 1 or Y <= 0.
GradedPartition make_graded_partition(int intervals, double gamma, double height,
                                      std::optional<double> s = std::nullopt);

enum class NodeKind { free, lateral, top };

/// T_Y = T_Omega x I_Y with layer-major node numbering
///     node = layer * base.node_count() + base_node.
/// Free DOFs are the interior base nodes on layers 0..M-1, numbered the same way,
/// so the trace (layer 0) is the leading slice of every free vector.
class TensorMesh {
public:
    TensorMesh(BasePartition base, GradedPartition ext);

    const BasePartition& base() const { return base_; }
    const GradedPartition& extended() const { return ext_; }
    int dim() const { return base_.dim(); }
    int layers() const { return ext_.intervals(); }

    int node_count() const { return base_.node_count() * (layers() + 1); }
    int cell_count() const { return base_.cell_count() * layers(); }
    int free_count() const { return base_.interior_count() * layers(); }
    int trace_count() const { return base_.interior_count(); }

    NodeKind node_kind(int node) const;
    bool dirichlet(int node) const { return node_kind(node) != NodeKind::free; }
    /// -1 for Dirichlet nodes.
    int free_index(int node) const;
    int node_of_free(int free) const;
    /// Free indices of the layer-0 interior nodes: 0..trace_count()-1.
    std::vector<int> trace_dofs() const;

    /// (x', y) of a node.
    std::pair<BasePoint, double> node_coord(int node) const;

private:
    BasePartition base_;
    GradedPartition ext_;
};

TensorMesh make_tensor_mesh(const BasePartition& base, const GradedPartition& ext);

struct Resolution {
    int cells_per_side;
    int intervals;
};

/// M ~ target^{1/(n+1)} with #T_Omega ~ M^n.
Resolution balanced_resolution(long target_dofs, int n);

struct MeshRegularityReport {
    double sigma_Y;   ///< max ratio of neighbouring interval lengths
    double gamma;
    double min_gamma; ///< 3/(2s)
    bool gamma_ok;    ///< gamma > 3/(2s)
};

MeshRegularityReport regularity_report(const TensorMesh& mesh, double s);

/// Y = max(1, (4/sqrt(lambda1)) (1+s)/(n+1) log(target_dofs)).
double choose_truncation(double s, double lambda1, long target_dofs, int n);

nlohmann::json mesh_summary(const TensorMesh& mesh, double s);

}  // namespace fracctl::mesh
