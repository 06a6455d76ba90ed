#include "fracctl/mesh.hpp"

#include <algorithm>
#include <cmath>

#include "fracctl/errors.hpp"

namespace fracctl::mesh {

BasePartition::BasePartition(int dim, int cells_per_side) : dim_(dim), cells_(cells_per_side) {
    if (dim != 1 && dim != 2) throw ConfigurationError("BasePartition: n must be 1 or 2");
    if (cells_per_side < 1) throw ConfigurationError("BasePartition: need at least one cell per side");
}

int BasePartition::node_count() const { return dim_ == 1 ? cells_ + 1 : (cells_ + 1) * (cells_ + 1); }
int BasePartition::cell_count() const { return dim_ == 1 ? cells_ : cells_ * cells_; }
int BasePartition::interior_count() const { return dim_ == 1 ? cells_ - 1 : (cells_ - 1) * (cells_ - 1); }
double BasePartition::cell_measure() const { return dim_ == 1 ? h() : h() * h(); }

std::array<int, 2> BasePartition::node_index(int node) const {
    if (dim_ == 1) return {node, 0};
    return {node % (cells_ + 1), node / (cells_ + 1)};
}

BasePoint BasePartition::node_coord(int node) const {
    auto [i, j] = node_index(node);
    return {i * h(), j * h()};
}

bool BasePartition::on_boundary(int node) const {
    auto [i, j] = node_index(node);
    if (i == 0 || i == cells_) return true;
    return dim_ == 2 && (j == 0 || j == cells_);
}

int BasePartition::interior_index(int node) const {
    if (on_boundary(node)) return -1;
    auto [i, j] = node_index(node);
    return dim_ == 1 ? i - 1 : (j - 1) * (cells_ - 1) + (i - 1);
}

int BasePartition::interior_node(int interior) const {
    if (dim_ == 1) return interior + 1;
    const int m = cells_ - 1;
    return node_id(interior % m + 1, interior / m + 1);
}

std::array<int, 2> BasePartition::cell_index(int cell) const {
    if (dim_ == 1) return {cell, 0};
    return {cell % cells_, cell / cells_};
}

BasePoint BasePartition::cell_origin(int cell) const {
    auto [i, j] = cell_index(cell);
    return {i * h(), j * h()};
}

std::vector<int> BasePartition::cell_nodes(int cell) const {
    auto [i, j] = cell_index(cell);
    if (dim_ == 1) return {i, i + 1};
    return {node_id(i, j), node_id(i + 1, j), node_id(i, j + 1), node_id(i + 1, j + 1)};
}

int BasePartition::locate(const BasePoint& x) const {
    auto clamp = [&](double t) { return std::clamp(static_cast<int>(std::floor(t * cells_)), 0, cells_ - 1); };
    return dim_ == 1 ? clamp(x[0]) : cell_id(clamp(x[0]), clamp(x[1]));
}

GradedPartition::GradedPartition(int intervals, double gamma, double height)
    : gamma_(gamma), height_(height), nodes_(intervals + 1) {
    for (int k = 0; k <= intervals; ++k) nodes_[k] = std::pow(double(k) / intervals, gamma) * height;
    nodes_.back() = height;
}

double min_admissible_grading(double s) {
    if (!(s > 0.0 && s < 1.0)) throw ConfigurationError("fractional power s must lie in (0,1)");
    return 3.0 / (2.0 * s);
}

double default_grading(double s) { return min_admissible_grading(s) + 0.1; }

GradedPartition make_graded_partition(int intervals, double gamma, double height, std::optional<double> s) {
    if (intervals < 1) throw ConfigurationError("graded partition: M must be >= 1");
    if (!(height > 0.0)) throw ConfigurationError("graded partition: Y must be positive");
    if (!(gamma >= 1.0)) throw ConfigurationError("graded partition: gamma must be >= 1");
    GradedPartition p(intervals, gamma, height);
    for (int k = 0; k < intervals; ++k)
        if (!(p.nodes()[k + 1] > p.nodes()[k]))
            throw ConfigurationError("graded partition: nodes not strictly increasing (grading too strong for M)");
    if (s) p.gamma_admissible = gamma > min_admissible_grading(*s);
    return p;
}

TensorMesh::TensorMesh(BasePartition base, GradedPartition ext) : base_(base), ext_(std::move(ext)) {}

NodeKind TensorMesh::node_kind(int node) const {
    const int nb = base_.node_count();
    const int layer = node / nb;
    if (base_.on_boundary(node % nb)) return NodeKind::lateral;
    return layer == layers() ? NodeKind::top : NodeKind::free;
}

int TensorMesh::free_index(int node) const {
    const int nb = base_.node_count();
    const int layer = node / nb;
    if (layer >= layers()) return -1;
    const int interior = base_.interior_index(node % nb);
    return interior < 0 ? -1 : layer * base_.interior_count() + interior;
}

int TensorMesh::node_of_free(int free) const {
    const int ni = base_.interior_count();
    return (free / ni) * base_.node_count() + base_.interior_node(free % ni);
}

std::vector<int> TensorMesh::trace_dofs() const {
    std::vector<int> dofs(trace_count());
    for (int i = 0; i < trace_count(); ++i) dofs[i] = i;
    return dofs;
}

std::pair<BasePoint, double> TensorMesh::node_coord(int node) const {
    const int nb = base_.node_count();
    return {base_.node_coord(node % nb), ext_.nodes()[node / nb]};
}

TensorMesh make_tensor_mesh(const BasePartition& base, const GradedPartition& ext) { return TensorMesh(base, ext); }

Resolution balanced_resolution(long target_dofs, int n) {
    if (n != 1 && n != 2) throw ConfigurationError("balanced_resolution: n must be 1 or 2");
    if (target_dofs < (1L << (n + 1))) throw ConfigurationError("balanced_resolution: target too small");
    const int m = std::max(2, static_cast<int>(std::lround(std::pow(double(target_dofs), 1.0 / (n + 1)))));
    return {m, m};
}

MeshRegularityReport regularity_report(const TensorMesh& mesh, double s) {
    const auto& ext = mesh.extended();
    double sigma = 1.0;
    for (int k = 0; k + 1 < ext.intervals(); ++k) {
        const double r = ext.width(k + 1) / ext.width(k);
        sigma = std::max({sigma, r, 1.0 / r});
    }
    const double gmin = min_admissible_grading(s);
    return {sigma, ext.gamma(), gmin, ext.gamma() > gmin};
}

double choose_truncation(double s, double lambda1, long target_dofs, int n) {
    if (target_dofs < 2) throw ConfigurationError("choose_truncation: target_dofs must be >= 2");
    if (!(lambda1 > 0.0)) throw ConfigurationError("choose_truncation: lambda1 must be positive");
    const double y = 4.0 / std::sqrt(lambda1) * ((1.0 + s) / (n + 1)) * std::log(double(target_dofs));
    return std::max(1.0, y);
}

nlohmann::json mesh_summary(const TensorMesh& mesh, double s) {
    const auto rep = regularity_report(mesh, s);
    return {{"n", mesh.dim()},
            {"cells_per_side", mesh.base().cells_per_side()},
            {"intervals", mesh.layers()},
            {"cells", mesh.cell_count()},
            {"nodes", mesh.node_count()},
            {"free_dofs", mesh.free_count()},
            {"trace_dofs", mesh.trace_count()},
            {"Y", mesh.extended().height()},
            {"gamma", rep.gamma},
            {"min_gamma", rep.min_gamma},
            {"gamma_ok", rep.gamma_ok},
            {"sigma_Y", rep.sigma_Y}};
}

}  // namespace fracctl::mesh
