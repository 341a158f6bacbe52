#pragma once

#include <Eigen/Dense>
#include <vector>

namespace doccoord {

struct Edge {
  int i = 0;       // 1-based endpoints
  int j = 0;
  double weight = 1.0;
};

/// Weighted undirected communication graph. Edges are stored once and applied
/// symmetrically. Immutable after construction; validation happens in the
/// constructor (positive weights, no self-loops or duplicates, connectivity).
class NetworkGraph {
 public:
  NetworkGraph(int num_agents, std::vector<Edge> edges);

  int num_agents() const { return num_agents_; }
  const std::vector<Edge>& edges() const { return edges_; }

  /// Neighbor list of vertex v (1-based), as (neighbor, weight) pairs.
  const std::vector<std::pair<int, double>>& neighbors(int v) const {
    return adjacency_[static_cast<std::size_t>(v - 1)];
  }

 private:
  int num_agents_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::pair<int, double>>> adjacency_;
};

/// Laplacian L = D - A together with its ascending spectrum and an orthogonal
/// basis whose first column is 1/sqrt(N).
struct LaplacianSpectrum {
  Eigen::MatrixXd laplacian;
  Eigen::VectorXd eigenvalues;  // ascending, eigenvalues[0] == 0
  Eigen::MatrixXd basis;        // U with U^T L U = diag(eigenvalues)

  double lambda2() const { return eigenvalues(1); }
  double lambdaN() const { return eigenvalues(eigenvalues.size() - 1); }
};

/// True iff every vertex is reachable from vertex 1.
bool connectivity_check(const NetworkGraph& g);

/// Assembles L and diagonalizes it. The zero eigenvalue is exact by
/// construction: the basis is [1/sqrt(N), X1 V] where V diagonalizes the
/// reduced Laplacian X1^T L X1 on the complement of the all-ones vector.
LaplacianSpectrum build_laplacian(const NetworkGraph& g);

}  // namespace doccoord
