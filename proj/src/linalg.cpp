#include "vessal/linalg.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "vessal/random.hpp"

namespace vessal {

namespace {

constexpr int kTrackerSnapshotVersion = 1;

void check_dim(const Eigen::VectorXd& g, int d, const char* op) {
  if (g.size() != d) {
    throw std::invalid_argument(std::string(op) + ": embedding has dimension " +
                                std::to_string(g.size()) + ", tracker expects " +
                                std::to_string(d));
  }
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, int d) {
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) m(i, k) = j.at(i).at(k).get<double>();
  return m;
}

}  // namespace

CovarianceTracker::CovarianceTracker(int d, double lambda) : lambda_(lambda) {
  if (d < 1) throw std::invalid_argument("CovarianceTracker: d must be >= 1");
  if (!(lambda > 0.0))
    throw std::invalid_argument("CovarianceTracker: lambda must be > 0");
  inv_sigma_ = Eigen::MatrixXd::Identity(d, d) / lambda;
  mean_outer_ = Eigen::MatrixXd::Zero(d, d);
}

void CovarianceTracker::observe(const Eigen::VectorXd& g) {
  check_dim(g, dim(), "observe");
  seen_ += 1;
  const double t = static_cast<double>(seen_);
  mean_outer_ *= (t - 1.0) / t;
  mean_outer_.selfadjointView<Eigen::Lower>().rankUpdate(g, 1.0 / t);
  mean_outer_.triangularView<Eigen::StrictlyUpper>() =
      mean_outer_.transpose().triangularView<Eigen::StrictlyUpper>();
}

double CovarianceTracker::leverage(const Eigen::VectorXd& g) const {
  check_dim(g, dim(), "leverage");
  return g.dot(inv_sigma_.selfadjointView<Eigen::Lower>() * g);
}

void CovarianceTracker::woodbury_update(const Eigen::VectorXd& g) {
  check_dim(g, dim(), "woodbury_update");
  const Eigen::VectorXd w = inv_sigma_.selfadjointView<Eigen::Lower>() * g;
  const double denom = 1.0 + g.dot(w);
  inv_sigma_.noalias() -= (w * w.transpose()) / denom;
  inv_sigma_ = ((inv_sigma_ + inv_sigma_.transpose()) * 0.5).eval();
  selected_ += 1;
}

double CovarianceTracker::trace_normalizer() const {
  // Both matrices are symmetric, so tr(S*A) = sum_ij S_ij A_ij.
  return inv_sigma_.cwiseProduct(mean_outer_).sum();
}

std::string CovarianceTracker::to_json() const {
  nlohmann::json j;
  j["format_version"] = kTrackerSnapshotVersion;
  j["d"] = dim();
  j["lambda"] = lambda_;
  j["seen"] = seen_;
  j["selected"] = selected_;
  j["inv_sigma"] = matrix_to_json(inv_sigma_);
  j["mean_outer"] = matrix_to_json(mean_outer_);
  return j.dump();
}

CovarianceTracker CovarianceTracker::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  const int version = j.at("format_version").get<int>();
  if (version != kTrackerSnapshotVersion) {
    throw std::invalid_argument("tracker snapshot: unsupported format_version " +
                                std::to_string(version));
  }
  const int d = j.at("d").get<int>();
  if (d < 1) throw std::invalid_argument("tracker snapshot: d must be >= 1");
  CovarianceTracker t;
  t.lambda_ = j.at("lambda").get<double>();
  t.seen_ = j.at("seen").get<long long>();
  t.selected_ = j.at("selected").get<long long>();
  t.inv_sigma_ = matrix_from_json(j.at("inv_sigma"), d);
  t.mean_outer_ = matrix_from_json(j.at("mean_outer"), d);
  return t;
}

void CovarianceTracker::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << to_json();
}

CovarianceTracker CovarianceTracker::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_json(text);
}

RandomProjection::RandomProjection(std::uint64_t seed, int in_dim, int out_dim)
    : seed_(seed) {
  if (out_dim < 1 || in_dim < 1)
    throw std::invalid_argument("RandomProjection: dimensions must be >= 1");
  if (out_dim > in_dim)
    throw std::invalid_argument("RandomProjection: out_dim " +
                                std::to_string(out_dim) + " exceeds in_dim " +
                                std::to_string(in_dim));
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(out_dim));
  matrix_.resize(out_dim, in_dim);
  // Row-major fill order is part of the seed contract.
  for (int i = 0; i < out_dim; ++i)
    for (int j = 0; j < in_dim; ++j) matrix_(i, j) = scale * rng.gaussian();
}

RandomProjection RandomProjection::identity(int dim) {
  if (dim < 1)
    throw std::invalid_argument("RandomProjection: dimensions must be >= 1");
  RandomProjection p;
  p.matrix_ = Eigen::MatrixXd::Identity(dim, dim);
  return p;
}

Eigen::VectorXd RandomProjection::project(const Eigen::VectorXd& x) const {
  if (x.size() != matrix_.cols()) {
    throw std::invalid_argument("project: input has dimension " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(matrix_.cols()));
  }
  return matrix_ * x;
}

}  // namespace vessal
