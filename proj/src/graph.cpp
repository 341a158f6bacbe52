#include "doccoord/graph.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <set>
#include <string>

#include "doccoord/errors.hpp"

namespace doccoord {

NetworkGraph::NetworkGraph(int num_agents, std::vector<Edge> edges)
    : num_agents_(num_agents), edges_(std::move(edges)) {
  if (num_agents_ < 1) {
    throw ConfigError("num_agents must be positive, got " + std::to_string(num_agents_));
  }
  std::set<std::pair<int, int>> seen;
  adjacency_.resize(static_cast<std::size_t>(num_agents_));
  for (const Edge& e : edges_) {
    if (e.i < 1 || e.i > num_agents_ || e.j < 1 || e.j > num_agents_) {
      throw ConfigError("edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
                        ") out of range for N=" + std::to_string(num_agents_));
    }
    if (e.i == e.j) {
      throw ConfigError("self-loop at vertex " + std::to_string(e.i));
    }
    if (!(e.weight > 0.0)) {
      throw InvalidWeight("edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
                          ") has non-positive weight " + std::to_string(e.weight));
    }
    auto key = std::minmax(e.i, e.j);
    if (!seen.insert(key).second) {
      throw ConfigError("duplicate edge (" + std::to_string(e.i) + "," + std::to_string(e.j) + ")");
    }
    adjacency_[static_cast<std::size_t>(e.i - 1)].emplace_back(e.j, e.weight);
    adjacency_[static_cast<std::size_t>(e.j - 1)].emplace_back(e.i, e.weight);
  }
  if (!connectivity_check(*this)) {
    throw DisconnectedGraph("communication graph is not connected");
  }
}

bool connectivity_check(const NetworkGraph& g) {
  const int n = g.num_agents();
  std::vector<bool> visited(static_cast<std::size_t>(n), false);
  std::vector<int> stack = {1};
  visited[0] = true;
  int count = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (const auto& [w, _] : g.neighbors(v)) {
      if (!visited[static_cast<std::size_t>(w - 1)]) {
        visited[static_cast<std::size_t>(w - 1)] = true;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == n;
}

LaplacianSpectrum build_laplacian(const NetworkGraph& g) {
  const int N = g.num_agents();
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(N, N);
  for (const Edge& e : g.edges()) {
    const int a = e.i - 1, b = e.j - 1;
    L(a, a) += e.weight;
    L(b, b) += e.weight;
    L(a, b) -= e.weight;
    L(b, a) -= e.weight;
  }

  LaplacianSpectrum spec;
  spec.laplacian = L;
  if (N == 1) {
    spec.eigenvalues = Eigen::VectorXd::Zero(1);
    spec.basis = Eigen::MatrixXd::Ones(1, 1);
    return spec;
  }

  // Householder complement of the all-ones direction: first column of Q is
  // +-1/sqrt(N); the remaining columns span its orthogonal complement.
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(N);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(ones);
  Eigen::MatrixXd Q = qr.householderQ();
  if (Q(0, 0) < 0) Q = -Q;
  Eigen::MatrixXd X1 = Q.rightCols(N - 1);

  // Reduced Laplacian is PD iff the graph is connected.
  Eigen::MatrixXd Lred = X1.transpose() * L * X1;
  Lred = 0.5 * (Lred + Lred.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Lred);
  if (es.info() != Eigen::Success) {
    throw NumericalFailure("eigendecomposition of the reduced Laplacian failed");
  }
  if (es.eigenvalues()(0) <= 1e-10) {
    throw DisconnectedGraph("algebraic connectivity lambda_2 <= 1e-10");
  }

  spec.eigenvalues = Eigen::VectorXd(N);
  spec.eigenvalues(0) = 0.0;
  spec.eigenvalues.tail(N - 1) = es.eigenvalues();
  spec.basis = Eigen::MatrixXd(N, N);
  spec.basis.col(0) = ones / std::sqrt(static_cast<double>(N));
  spec.basis.rightCols(N - 1) = X1 * es.eigenvectors();
  return spec;
}

}  // namespace doccoord
