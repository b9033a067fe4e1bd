#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace oracle {

Moments moments(const Sample& s, int stratum) {
  Moments m;
  m.n.assign(s.arms, 0.0);
  m.mean.assign(s.arms, 0.0);
  m.var.assign(s.arms, 0.0);
  auto in = [&](std::size_t i) { return stratum < 0 || s.h[i] == stratum; };
  for (std::size_t i = 0; i < s.y.size(); ++i)
    if (in(i)) {
      m.n[s.w[i]] += 1;
      m.mean[s.w[i]] += s.y[i];
    }
  for (int j = 0; j < s.arms; ++j) m.mean[j] /= m.n[j];
  for (std::size_t i = 0; i < s.y.size(); ++i)
    if (in(i)) m.var[s.w[i]] += (s.y[i] - m.mean[s.w[i]]) * (s.y[i] - m.mean[s.w[i]]);
  for (int j = 0; j < s.arms; ++j) m.var[j] /= (m.n[j] - 1);
  return m;
}

namespace {

Eigen::VectorXd mean_vec(const Moments& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.mean.data(), m.mean.size());
}

double quad(const Eigen::MatrixXd& K, const Eigen::VectorXd& r) { return r.dot(K.inverse() * r); }

}  // namespace

double x2(const Sample& s, const Eigen::MatrixXd& C, const Eigen::VectorXd& x) {
  const Moments m = moments(s);
  const double N = static_cast<double>(s.y.size());
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(s.arms, s.arms);
  for (int j = 0; j < s.arms; ++j) D(j, j) = N * m.var[j] / m.n[j];
  return N * quad(C * D * C.transpose(), C * mean_vec(m) - x);
}

double x2_hw(const Sample& s, const Eigen::MatrixXd& C, const Eigen::VectorXd& x) {
  const Moments m = moments(s);
  const double N = static_cast<double>(s.y.size());
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(s.arms, s.arms);
  for (int j = 0; j < s.arms; ++j) D(j, j) = N * (m.n[j] - 1) * m.var[j] / (m.n[j] * m.n[j]);
  return N * quad(C * D * C.transpose(), C * mean_vec(m) - x);
}

double box(const Sample& s, const Eigen::MatrixXd& C) {
  const Moments m = moments(s);
  const double N = static_cast<double>(s.y.size());
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(s.arms, s.arms);
  for (int j = 0; j < s.arms; ++j) D(j, j) = N * m.var[j] / m.n[j];
  const Eigen::MatrixXd M = C.transpose() * (C * C.transpose()).inverse() * C;
  const Eigen::VectorXd yb = mean_vec(m);
  return N * yb.dot(M * yb) / (M * D).trace();
}

double t(const Sample& s, const Eigen::RowVectorXd& c, double x) {
  const Moments m = moments(s);
  const double N = static_cast<double>(s.y.size());
  double v = 0.0;
  for (int j = 0; j < s.arms; ++j) v += c(j) * c(j) * N * m.var[j] / m.n[j];
  return std::sqrt(N) * (x - c.dot(mean_vec(m))) / std::sqrt(v);
}

double f_ols(const Sample& s, const Eigen::MatrixXd& C, const Eigen::VectorXd& x) {
  const int N = static_cast<int>(s.y.size());
  const int H = s.h.empty() ? 1 : *std::max_element(s.h.begin(), s.h.end()) + 1;
  const int p = s.arms + H - 1;
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(N, p);
  Eigen::VectorXd Y(N);
  for (int i = 0; i < N; ++i) {
    X(i, s.w[i]) = 1.0;
    if (H > 1 && s.h[i] > 0) X(i, s.arms + s.h[i] - 1) = 1.0;
    Y(i) = s.y[i];
  }
  const Eigen::MatrixXd XtX_inv = (X.transpose() * X).inverse();
  const Eigen::VectorXd beta = XtX_inv * X.transpose() * Y;
  const double rss = (Y - X * beta).squaredNorm();
  const double sigma2 = rss / (N - p);
  const Eigen::MatrixXd Cfull = [&] {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(C.rows(), p);
    out.leftCols(s.arms) = C;
    return out;
  }();
  const Eigen::VectorXd r = Cfull * beta - x;
  return quad(sigma2 * Cfull * XtX_inv * Cfull.transpose(), r) / C.rows();
}

double x2_stratified(const Sample& s, const Eigen::MatrixXd& C, const Eigen::VectorXd& x) {
  const int H = *std::max_element(s.h.begin(), s.h.end()) + 1;
  const double N = static_cast<double>(s.y.size());
  // Var(sum_h w_h Ybar_[h]) estimated by sum_h w_h^2 diag(S_[h]j / N_[h]j).
  Eigen::VectorXd yb = Eigen::VectorXd::Zero(s.arms);
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(C.rows(), C.rows());
  for (int h = 0; h < H; ++h) {
    const Moments m = moments(s, h);
    const double w = std::accumulate(m.n.begin(), m.n.end(), 0.0) / N;
    Eigen::MatrixXd Dh = Eigen::MatrixXd::Zero(s.arms, s.arms);
    for (int j = 0; j < s.arms; ++j) Dh(j, j) = m.var[j] / m.n[j];
    yb += w * mean_vec(m);
    V += w * w * C * Dh * C.transpose();
  }
  return quad(V, C * yb - x);
}

double bruteforce_count(const Sample& s) {
  auto fact = [](int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
  };
  if (s.h.empty()) return fact(static_cast<int>(s.w.size()));
  const int H = *std::max_element(s.h.begin(), s.h.end()) + 1;
  double total = 1.0;
  for (int h = 0; h < H; ++h) total *= fact(static_cast<int>(std::count(s.h.begin(), s.h.end(), h)));
  return total;
}

double bruteforce_pvalue(const Sample& observed, const Eigen::MatrixXd& table,
                         const std::function<double(const Sample&)>& stat, double tol) {
  const int N = static_cast<int>(observed.w.size());
  const double t_obs = stat(observed);
  const double cut = t_obs - tol * std::max(1.0, std::abs(t_obs));
  const int H = observed.h.empty() ? 1 : *std::max_element(observed.h.begin(), observed.h.end()) + 1;
  std::vector<std::vector<int>> idx(H);
  for (int i = 0; i < N; ++i) idx[observed.h.empty() ? 0 : observed.h[i]].push_back(i);
  // One index permutation per stratum, advanced like an odometer.
  std::vector<std::vector<int>> perm(idx);
  double hits = 0.0, total = 0.0;
  Sample s = observed;
  while (true) {
    for (int h = 0; h < H; ++h)
      for (std::size_t k = 0; k < idx[h].size(); ++k) s.w[idx[h][k]] = observed.w[perm[h][k]];
    for (int i = 0; i < N; ++i) s.y[i] = table(i, s.w[i]);
    total += 1.0;
    if (stat(s) >= cut) hits += 1.0;
    int h = H - 1;
    while (h >= 0 && !std::next_permutation(perm[h].begin(), perm[h].end())) --h;
    if (h < 0) break;
  }
  return hits / total;
}

double weighted_chi2_mc(const std::vector<double>& a, double q, std::int64_t draws, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::chi_squared_distribution<double> chi(1.0);
  std::int64_t hits = 0;
  for (std::int64_t r = 0; r < draws; ++r) {
    double sum = 0.0;
    for (double w : a) sum += w * chi(rng);
    if (sum >= q) ++hits;
  }
  return static_cast<double>(hits) / draws;
}

Sample random_sample(std::mt19937_64& rng, const std::vector<int>& sizes, double spread) {
  Sample s;
  s.arms = static_cast<int>(sizes.size());
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> scale(0.5, 2.0 * spread);
  std::uniform_real_distribution<double> shift(-1.0, 1.0);
  for (int j = 0; j < s.arms; ++j) {
    const double sd = scale(rng), mu = shift(rng);
    for (int k = 0; k < sizes[j]; ++k) {
      s.w.push_back(j);
      s.y.push_back(mu + sd * normal(rng));
    }
  }
  return s;
}

}  // namespace oracle
