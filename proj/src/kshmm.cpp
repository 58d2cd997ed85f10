#include "ksf/kshmm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>

namespace ksf {

void TrainingTriples::validate() const {
  if (x1.size() != x2.size() || x1.size() != x3.size())
    throw Error(errc::invalid_input, "triples: unequal lengths");
  if (x1.size() < 2) throw Error(errc::insufficient_data, "triples: need m >= 2");
}

TrainingTriples reshape_sliding(const std::vector<double>& series) {
  if (series.size() < 4)
    throw Error(errc::insufficient_data, "reshape_sliding: need at least 4 observations");
  const std::size_t m = series.size() - 2;
  TrainingTriples t;
  t.x1.reserve(m);
  t.x2.reserve(m);
  t.x3.reserve(m);
  for (std::size_t l = 0; l < m; ++l) {
    t.x1.push_back(series[l]);
    t.x2.push_back(series[l + 1]);
    t.x3.push_back(series[l + 2]);
  }
  return t;
}

Eigen::VectorXd normalize_weights(const Eigen::VectorXd& w) {
  if (w.size() == 0) throw Error(errc::invalid_input, "normalize: empty vector");
  const double s = w.sum();
  if (!(std::abs(s) > 1e-300))
    throw UnstableError("normalize: weight sum is numerically zero");
  return w / s;
}

Eigen::VectorXd KshmmModel::ridge_solve(const Eigen::VectorXd& v) const {
  Eigen::VectorXd y = chol_.triangularView<Eigen::Lower>().solve(v);
  return chol_.transpose().triangularView<Eigen::Upper>().solve(y);
}

void KshmmModel::rebuild_caches() {
  proj_F_ = (1.0 / static_cast<double>(m())) * d_.asDiagonal() * (A_.transpose() * F_);
}

KshmmModel train(const TrainingTriples& triples, const KernelConfig& kernel, int rank, double lambda) {
  triples.validate();
  kernel.validate();
  const Eigen::Index m = static_cast<Eigen::Index>(triples.size());
  if (rank < 1) throw Error(errc::invalid_input, "train: rank must be >= 1");
  if (rank > m) throw Error(errc::invalid_input, "train: rank exceeds sample count");
  if (lambda <= 0.0) lambda = 0.01 / std::sqrt(static_cast<double>(m));

  {
    auto [lo1, hi1] = std::minmax_element(triples.x1.begin(), triples.x1.end());
    auto [lo3, hi3] = std::minmax_element(triples.x3.begin(), triples.x3.end());
    const double lo = std::min(*lo1, *lo3);
    const double hi = std::max(*hi1, *hi3);
    if (hi - lo <= 0.0)
      throw Error(errc::degenerate_data, "train: constant training series");
  }

  const Eigen::MatrixXd K = gram_matrix(kernel, triples.x1, triples.x1);
  const Eigen::MatrixXd L = gram_matrix(kernel, triples.x2, triples.x2);
  const Eigen::MatrixXd G = gram_matrix(kernel, triples.x2, triples.x1);
  const Eigen::MatrixXd F = gram_matrix(kernel, triples.x2, triples.x3);

  // Cholesky reduction of LKL a = w L a with L ridged to keep the factor
  // well defined; the pencil is then C^-1 (LKL) C^-T y = w y, a = C^-T y.
  const double delta = 1e-10 * L.trace() / static_cast<double>(m);
  Eigen::MatrixXd Lr = L;
  Lr.diagonal().array() += delta;
  Eigen::LLT<Eigen::MatrixXd> llt(Lr);
  if (llt.info() != Eigen::Success)
    throw Error(errc::degenerate_data, "train: Cholesky of ridged L failed");
  const Eigen::MatrixXd C = llt.matrixL();

  const Eigen::MatrixXd LKL = L * K * L;
  Eigen::MatrixXd Y = C.triangularView<Eigen::Lower>().solve(LKL);
  Eigen::MatrixXd M = C.triangularView<Eigen::Lower>().solve(Y.transpose()).transpose();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  if (es.info() != Eigen::Success)
    throw Error(errc::fit_failure, "train: eigensolver did not converge");

  // Order by |w| descending, earliest solver index on ties.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const Eigen::VectorXd evals = es.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(evals(a)) > std::abs(evals(b));
  });

  const double max_mag = std::abs(evals(order[0]));
  const double tol = 1e-12 * max_mag;
  Eigen::Index usable = 0;
  for (Eigen::Index i = 0; i < m; ++i)
    if (std::abs(evals(order[static_cast<std::size_t>(i)])) > tol) ++usable;
  if (usable < rank)
    throw Error(errc::rank_deficient, "train: fewer usable eigenvalues than requested rank");

  KshmmModel model;
  model.kernel_ = kernel;
  model.lambda_ = lambda;
  model.rank_ = rank;
  model.x2_ = triples.x2;
  model.x_last_ = triples.x3.back();

  model.A_.resize(m, rank);
  model.omega_.resize(rank);
  model.d_.resize(rank);
  for (int i = 0; i < rank; ++i) {
    const Eigen::Index src = order[static_cast<std::size_t>(i)];
    model.omega_(i) = std::abs(evals(src));
    Eigen::VectorXd alpha =
        C.transpose().triangularView<Eigen::Upper>().solve(es.eigenvectors().col(src));
    Eigen::Index imax = 0;
    alpha.cwiseAbs().maxCoeff(&imax);
    if (alpha(imax) < 0.0) alpha = -alpha;
    const double scale = alpha.dot(L * alpha);
    if (!(scale > 0.0))
      throw Error(errc::degenerate_data, "train: nonpositive eigenvector scaling a'La");
    model.A_.col(i) = alpha;
    model.d_(i) = 1.0 / std::sqrt(scale);
  }

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m);
  model.beta1_ = (1.0 / static_cast<double>(m)) *
                 (model.d_.asDiagonal() * (model.A_.transpose() * (G * ones)));

  const Eigen::MatrixXd ADWinv =
      model.A_ * model.d_.asDiagonal() * model.omega_.cwiseInverse().asDiagonal();
  model.Q_ = K * (L * ADWinv);

  Eigen::MatrixXd Lreg = L;
  Lreg.diagonal().array() += lambda;
  Eigen::LLT<Eigen::MatrixXd> reg_llt(Lreg);
  if (reg_llt.info() != Eigen::Success)
    throw Error(errc::degenerate_data, "train: Cholesky of L + lambda I failed");
  model.chol_ = reg_llt.matrixL();

  model.F_ = F;
  model.rebuild_caches();

  if (!model.A_.allFinite() || !model.Q_.allFinite() || !model.beta1_.allFinite())
    throw Error(errc::fit_failure, "train: non-finite model matrices");
  return model;
}

Eigen::MatrixXd observation_operator_matrix(const KshmmModel& model, double x) {
  if (!std::isfinite(x)) throw Error(errc::invalid_input, "operator: non-finite query");
  const Eigen::VectorXd k2 = kernel_vector(model.kernel(), model.x2(), x);
  const Eigen::VectorXd v1 = normalize_weights(k2);
  const Eigen::VectorXd v2 = normalize_weights(model.ridge_solve(v1));
  Eigen::MatrixXd B = model.proj_F() * v2.asDiagonal() * model.Q();
  if (!B.allFinite()) throw UnstableError("operator: non-finite entries");
  return B;
}

BeliefState filter_init(const KshmmModel& model) {
  return BeliefState{normalize_weights(model.beta1())};
}

BeliefState filter_update(const KshmmModel& model, const BeliefState& belief, double x) {
  if (belief.b.size() != model.rank())
    throw Error(errc::invalid_input, "filter_update: belief dimension mismatch");
  const Eigen::MatrixXd B = observation_operator_matrix(model, x);
  return BeliefState{normalize_weights(B * belief.b)};
}

Eigen::VectorXd predictive_weights(const KshmmModel& model, const BeliefState& belief) {
  if (belief.b.size() != model.rank())
    throw Error(errc::invalid_input, "predictive_weights: belief dimension mismatch");
  return normalize_weights(model.Q() * belief.b);
}

double predictive_mean(const Eigen::VectorXd& eta, const std::vector<double>& x2) {
  if (eta.size() != static_cast<Eigen::Index>(x2.size()))
    throw Error(errc::invalid_input, "predictive_mean: length mismatch");
  double s = 0.0;
  for (Eigen::Index l = 0; l < eta.size(); ++l) s += eta(l) * x2[static_cast<std::size_t>(l)];
  return s;
}

double predictive_variance(const Eigen::VectorXd& eta, const std::vector<double>& x2, double mean) {
  if (eta.size() != static_cast<Eigen::Index>(x2.size()))
    throw Error(errc::invalid_input, "predictive_variance: length mismatch");
  double s = 0.0;
  for (Eigen::Index l = 0; l < eta.size(); ++l) {
    const double d = x2[static_cast<std::size_t>(l)] - mean;
    s += eta(l) * d * d;
  }
  return s;
}

ModeResult mode_estimate(const KshmmModel& model, const Eigen::VectorXd& eta) {
  if (eta.size() != model.m())
    throw Error(errc::invalid_input, "mode_estimate: weight length mismatch");
  const std::vector<double>& x2 = model.x2();

  Eigen::Index l0 = 0;
  eta.maxCoeff(&l0);
  const double init = x2[static_cast<std::size_t>(l0)];

  double x = init;
  for (int it = 0; it < 100; ++it) {
    double num = 0.0, den = 0.0;
    for (Eigen::Index l = 0; l < eta.size(); ++l) {
      const double w = eta(l) * kernel_evaluate(model.kernel(), x2[static_cast<std::size_t>(l)], x);
      den += w;
      num += x2[static_cast<std::size_t>(l)] * w;
    }
    if (std::abs(den) < 1e-12) return {init, false, it + 1};
    const double xn = num / den;
    if (std::abs(xn - x) < 1e-8 * std::max(1.0, std::abs(x))) return {xn, true, it + 1};
    x = xn;
  }
  return {x, false, 100};
}

ForecastDistribution forecast_distribution(const KshmmModel& model, const BeliefState& belief) {
  ForecastDistribution fd;
  fd.eta = predictive_weights(model, belief);
  fd.mean = predictive_mean(fd.eta, model.x2());
  fd.variance = predictive_variance(fd.eta, model.x2(), fd.mean);
  const ModeResult mr = mode_estimate(model, fd.eta);
  fd.mode = mr.value;
  fd.mode_converged = mr.converged;
  return fd;
}

// ---------------------------------------------------------------------------
// Serialization: little-endian binary, format version 1.

namespace {

constexpr std::uint32_t kMagic = 0x4b53464d;  // "KSFM"
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kByteOrderMark = 0x01020304;

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void write_bytes(std::FILE* f, const void* p, std::size_t n) {
  if (std::fwrite(p, 1, n, f) != n) throw Error(errc::io_error, "model write failed");
}

void read_bytes(std::FILE* f, void* p, std::size_t n) {
  if (std::fread(p, 1, n, f) != n) throw Error(errc::parse_error, "model file truncated");
}

void write_u32(std::FILE* f, std::uint32_t v) { write_bytes(f, &v, sizeof v); }
void write_i64(std::FILE* f, std::int64_t v) { write_bytes(f, &v, sizeof v); }
void write_f64(std::FILE* f, double v) { write_bytes(f, &v, sizeof v); }

std::uint32_t read_u32(std::FILE* f) {
  std::uint32_t v;
  read_bytes(f, &v, sizeof v);
  return v;
}
std::int64_t read_i64(std::FILE* f) {
  std::int64_t v;
  read_bytes(f, &v, sizeof v);
  return v;
}
double read_f64(std::FILE* f) {
  double v;
  read_bytes(f, &v, sizeof v);
  return v;
}

void write_matrix(std::FILE* f, const Eigen::MatrixXd& M) {
  write_i64(f, M.rows());
  write_i64(f, M.cols());
  write_bytes(f, M.data(), sizeof(double) * static_cast<std::size_t>(M.size()));
}

Eigen::MatrixXd read_matrix(std::FILE* f) {
  const std::int64_t r = read_i64(f);
  const std::int64_t c = read_i64(f);
  if (r < 0 || c < 0 || r > (1 << 24) || c > (1 << 24))
    throw Error(errc::parse_error, "model file: bad matrix shape");
  Eigen::MatrixXd M(r, c);
  read_bytes(f, M.data(), sizeof(double) * static_cast<std::size_t>(M.size()));
  return M;
}

void write_vector(std::FILE* f, const Eigen::VectorXd& v) {
  write_i64(f, v.size());
  write_bytes(f, v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
}

Eigen::VectorXd read_vector(std::FILE* f) {
  const std::int64_t n = read_i64(f);
  if (n < 0 || n > (1LL << 32)) throw Error(errc::parse_error, "model file: bad vector length");
  Eigen::VectorXd v(n);
  read_bytes(f, v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
  return v;
}

}  // namespace

void save_model(const KshmmModel& model, const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw Error(errc::io_error, "cannot open for writing: " + path);
  write_u32(f.get(), kMagic);
  write_u32(f.get(), kVersion);
  write_u32(f.get(), kByteOrderMark);
  write_u32(f.get(), static_cast<std::uint32_t>(model.kernel_.family));
  write_f64(f.get(), model.kernel_.bandwidth);
  write_f64(f.get(), model.lambda_);
  write_i64(f.get(), model.rank_);
  write_i64(f.get(), static_cast<std::int64_t>(model.x2_.size()));
  write_bytes(f.get(), model.x2_.data(), sizeof(double) * model.x2_.size());
  write_f64(f.get(), model.x_last_);
  write_vector(f.get(), model.omega_);
  write_vector(f.get(), model.d_);
  write_vector(f.get(), model.beta1_);
  write_matrix(f.get(), model.A_);
  write_matrix(f.get(), model.Q_);
  write_matrix(f.get(), model.F_);
  write_matrix(f.get(), model.chol_);
  if (std::fflush(f.get()) != 0) throw Error(errc::io_error, "model write failed: " + path);
}

KshmmModel load_model(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw Error(errc::io_error, "cannot open for reading: " + path);
  if (read_u32(f.get()) != kMagic) throw Error(errc::parse_error, "not a model file: " + path);
  const std::uint32_t version = read_u32(f.get());
  if (version != kVersion)
    throw Error(errc::parse_error, "unsupported model format version " + std::to_string(version));
  if (read_u32(f.get()) != kByteOrderMark)
    throw Error(errc::parse_error, "model file byte order mismatch");

  KshmmModel model;
  model.kernel_.family = static_cast<KernelFamily>(read_u32(f.get()));
  model.kernel_.bandwidth = read_f64(f.get());
  model.lambda_ = read_f64(f.get());
  model.rank_ = static_cast<int>(read_i64(f.get()));
  const std::int64_t msz = read_i64(f.get());
  if (msz < 2 || msz > (1 << 24)) throw Error(errc::parse_error, "model file: bad sample count");
  model.x2_.resize(static_cast<std::size_t>(msz));
  read_bytes(f.get(), model.x2_.data(), sizeof(double) * model.x2_.size());
  model.x_last_ = read_f64(f.get());
  model.omega_ = read_vector(f.get());
  model.d_ = read_vector(f.get());
  model.beta1_ = read_vector(f.get());
  model.A_ = read_matrix(f.get());
  model.Q_ = read_matrix(f.get());
  model.F_ = read_matrix(f.get());
  model.chol_ = read_matrix(f.get());

  if (model.omega_.size() != model.rank_ || model.A_.cols() != model.rank_ ||
      model.A_.rows() != msz || model.F_.rows() != msz || model.F_.cols() != msz)
    throw Error(errc::parse_error, "model file: inconsistent dimensions");
  model.rebuild_caches();
  return model;
}

// ---------------------------------------------------------------------------

KshmmFilter::KshmmFilter(std::shared_ptr<const KshmmModel> model)
    : model_(std::move(model)),
      belief_(filter_init(*model_)),
      last_obs_(model_->last_training_value()) {}

bool KshmmFilter::observe(double x) {
  // reject before mutating: last_obs_ backs the persistence fallback and
  // must never hold a non-finite value
  if (!std::isfinite(x)) throw Error(errc::invalid_input, "filter: non-finite observation");
  last_obs_ = x;
  try {
    belief_ = filter_update(*model_, belief_, x);
    return true;
  } catch (const UnstableError&) {
    belief_ = filter_init(*model_);
    pending_unstable_ = true;
    return false;
  }
}

ForecastDistribution KshmmFilter::distribution() {
  if (pending_unstable_) {
    pending_unstable_ = false;
    throw UnstableError("filter: previous update collapsed");
  }
  return forecast_distribution(*model_, belief_);
}

}  // namespace ksf
