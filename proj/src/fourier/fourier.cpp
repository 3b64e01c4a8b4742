#include "ttergodic/fourier/fourier.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "ttergodic/errors.hpp"
#include "ttergodic/tt/io.hpp"
#include "ttergodic/tt/ops.hpp"
#include "ttergodic/tt/round.hpp"

namespace ttergodic::fourier {

void BasisConfig::validate() const {
  if (d < 1) throw ArgumentError("basis: d must be >= 1");
  if (K < 1) throw ArgumentError("basis: K must be >= 1");
  if (!(L > 0.0) || !std::isfinite(L)) throw ArgumentError("basis: L must be positive");
  if (N < 1) throw ArgumentError("basis: N must be >= 1");
}

CosineBasis::CosineBasis(Index K, double L, bool half_period)
    : K_(K), L_(L), omega_((half_period ? 1.0 : 2.0) * std::numbers::pi / L), h1_inv_(1.0 / std::sqrt(L)),
      hk_inv_(std::sqrt(2.0 / L)) {
  if (K < 1 || !(L > 0.0)) throw ArgumentError("cosine basis needs K >= 1 and L > 0");
}

void CosineBasis::eval(double x, double* out) const {
  out[0] = h1_inv_;
  if (K_ == 1) return;
  const double th = omega_ * x;
  const double c1 = std::cos(th);
  double prev = 1.0;
  double cur = c1;
  for (Index k = 1; k < K_; ++k) {
    out[k] = hk_inv_ * cur;
    const double next = 2.0 * c1 * cur - prev;
    prev = cur;
    cur = next;
  }
}

void CosineBasis::grad(double x, double* out) const {
  out[0] = 0.0;
  if (K_ == 1) return;
  // d/dx cos(m w x) = -m w sin(m w x); sin(m th) by the same recurrence.
  const double th = omega_ * x;
  const double c1 = std::cos(th);
  double prev = 0.0;
  double cur = std::sin(th);
  for (Index k = 1; k < K_; ++k) {
    out[k] = -hk_inv_ * omega_ * static_cast<double>(k) * cur;
    const double next = 2.0 * c1 * cur - prev;
    prev = cur;
    cur = next;
  }
}

namespace {

void check_domain(double x, double L) {
  if (!(x >= 0.0 && x <= L)) {
    throw DomainError("x = " + std::to_string(x) + " lies outside [0, " + std::to_string(L) + "]");
  }
}

tt::TtTensor rank1_basis(const Vector& x, std::size_t grad_dim, const BasisConfig& cfg) {
  cfg.validate();
  if (static_cast<std::size_t>(x.size()) != cfg.d) throw ShapeError("state has wrong dimension");
  CosineBasis basis(cfg);
  std::vector<tt::Core> cores;
  cores.reserve(cfg.d);
  for (std::size_t i = 0; i < cfg.d; ++i) {
    check_domain(x(static_cast<Index>(i)), cfg.L);
    tt::Core c(1, 1, cfg.K);
    double* out = c.data().data();
    if (i == grad_dim) {
      basis.grad(x(static_cast<Index>(i)), out);
    } else {
      basis.eval(x(static_cast<Index>(i)), out);
    }
    cores.push_back(std::move(c));
  }
  return tt::TtTensor(std::move(cores));
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

Vector basis_eval(double x, const BasisConfig& cfg) {
  check_domain(x, cfg.L);
  Vector v(cfg.K);
  CosineBasis(cfg).eval(x, v.data());
  return v;
}

Vector basis_grad(double x, const BasisConfig& cfg) {
  check_domain(x, cfg.L);
  Vector v(cfg.K);
  CosineBasis(cfg).grad(x, v.data());
  return v;
}

tt::TtTensor phi_tensor(const Vector& x, const BasisConfig& cfg) {
  return rank1_basis(x, cfg.d, cfg);
}

tt::TtTensor grad_phi_tensor(const Vector& x, std::size_t i, const BasisConfig& cfg) {
  if (i >= cfg.d) {
    throw ArgumentError("gradient dimension " + std::to_string(i) + " out of range for d = " +
                        std::to_string(cfg.d));
  }
  return rank1_basis(x, i, cfg);
}

double lambda_value(const tt::IndexTuple& k) {
  double s = 1.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double v = static_cast<double>(k.one_based(i));
    s += v * v;
  }
  return std::pow(s, -0.5 * static_cast<double>(k.size() + 1));
}

tt::TtTensor lambda_tensor(const BasisConfig& cfg, const LambdaOptions& opt) {
  cfg.validate();
  const std::vector<Index> modes(cfg.d, cfg.K);
  tt::CrossOptions co;
  co.eps = opt.eps;
  co.seed = opt.seed;
  // The weights peak at the lowest frequency.
  co.hint_indices.push_back(tt::IndexTuple::from_zero_based(std::vector<Index>(cfg.d, 0)));
  auto res = tt::tt_cross([](const tt::IndexTuple& k) { return lambda_value(k); }, modes, co);
  return tt::tt_round(res.tensor, tt::ToleranceSpec::max_rank(opt.rank_cap));
}

QuadratureRule quadrature_rule(Index N, double L) {
  if (N < 1) throw ArgumentError("quadrature needs N >= 1");
  QuadratureRule q;
  q.nodes.resize(static_cast<std::size_t>(N));
  q.weights.resize(static_cast<std::size_t>(N));
  const double n = static_cast<double>(N);
  for (Index i = 0; i < N; ++i) {
    // Newton on P_N from the Tricomi initial guess.
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (Index j = 2; j <= N; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / static_cast<double>(j);
        p0 = p1;
        p1 = p2;
      }
      if (N == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged root for the weight.
    {
      double p0 = 1.0;
      double p1 = x;
      for (Index j = 2; j <= N; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / static_cast<double>(j);
        p0 = p1;
        p1 = p2;
      }
      if (N == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // Roots come out in decreasing order; store increasing.
    const auto slot = static_cast<std::size_t>(N - 1 - i);
    q.nodes[slot] = 0.5 * L * (1.0 + x);
    q.weights[slot] = 0.5 * L * w;
  }
  return q;
}

QuadratureRule midpoint_rule(Index N, double L) {
  if (N < 1) throw ArgumentError("quadrature needs N >= 1");
  QuadratureRule q;
  const double h = L / static_cast<double>(N);
  for (Index j = 0; j < N; ++j) {
    q.nodes.push_back((static_cast<double>(j) + 0.5) * h);
    q.weights.push_back(h);
  }
  return q;
}

QuadratureRule make_rule(QuadratureFamily family, Index N, double L) {
  return family == QuadratureFamily::midpoint ? midpoint_rule(N, L) : quadrature_rule(N, L);
}

tt::CrossResult discretize_pdf(const dist::ReferenceDistribution& p, const BasisConfig& cfg,
                               const QuadratureRule& rule, tt::CrossOptions opt) {
  cfg.validate();
  if (dist::dimension(p) != cfg.d) throw ShapeError("density dimension does not match basis");
  if (static_cast<Index>(rule.nodes.size()) != cfg.N) throw ShapeError("rule size differs from N");
  const std::vector<Index> modes(cfg.d, cfg.N);
  const auto& nodes = rule.nodes;
  for (const auto& mu : dist::modes(p)) {
    std::vector<Index> k(cfg.d);
    for (std::size_t i = 0; i < cfg.d; ++i) {
      const auto it = std::lower_bound(nodes.begin(), nodes.end(), mu(static_cast<Index>(i)));
      Index j = std::clamp<Index>(it - nodes.begin(), 0, cfg.N - 1);
      if (j > 0 && std::abs(nodes[j - 1] - mu(static_cast<Index>(i))) <
                       std::abs(nodes[j] - mu(static_cast<Index>(i)))) {
        --j;
      }
      k[i] = j;
    }
    opt.hint_indices.push_back(tt::IndexTuple::from_zero_based(k));
  }
  const auto d = static_cast<Index>(cfg.d);
  auto oracle = [&](const tt::IndexTuple& k) {
    Vector x(d);
    for (Index i = 0; i < d; ++i) x(i) = nodes[static_cast<std::size_t>(k.zero_based(i))];
    return dist::pdf(p, x);
  };
  return tt::tt_cross(oracle, modes, opt);
}

tt::TtTensor fourier_coeffs(const tt::TtTensor& p_tt, const QuadratureRule& rule,
                            const BasisConfig& cfg) {
  cfg.validate();
  if (p_tt.order() != cfg.d) throw ShapeError("fourier_coeffs: tensor order differs from d");
  const Index n = static_cast<Index>(rule.nodes.size());
  for (Index m : p_tt.mode_sizes()) {
    if (m != n) throw ShapeError("fourier_coeffs: mode sizes must equal the rule size");
  }
  // M(j, k) = alpha_j phi_k(x_j)
  tt::Matrix m(n, cfg.K);
  CosineBasis basis(cfg);
  Vector row(cfg.K);
  for (Index j = 0; j < n; ++j) {
    basis.eval(rule.nodes[static_cast<std::size_t>(j)], row.data());
    m.row(j) = rule.weights[static_cast<std::size_t>(j)] * row.transpose();
  }
  std::vector<tt::Core> cores;
  for (const auto& c : p_tt.cores()) {
    tt::Core w(c.left_rank(), c.right_rank(), cfg.K);
    // For fixed right index b the (left x modes) block is contiguous.
    for (Index b = 0; b < c.right_rank(); ++b) {
      Eigen::Map<const tt::Matrix> pb(c.data().data() + b * c.left_rank() * n, c.left_rank(), n);
      Eigen::Map<tt::Matrix> wb(w.data().data() + b * c.left_rank() * cfg.K, c.left_rank(),
                                cfg.K);
      wb.noalias() = pb * m;
    }
    cores.push_back(std::move(w));
  }
  return tt::TtTensor(std::move(cores));
}

namespace {

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.0};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Piece {
  double a, b, err;
  Vector value;
};

template <class F>
Piece gk15(const F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  Vector fc = f(c);
  Vector k = kWgk[7] * fc;
  Vector g = kWg[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const Vector f1 = f(c - h * kXgk[j]);
    const Vector f2 = f(c + h * kXgk[j]);
    k += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) g += kWg[j / 2] * (f1 + f2);
  }
  k *= h;
  g *= h;
  const double err = (k - g).cwiseAbs().maxCoeff();
  return {a, b, err, std::move(k)};
}

template <class F>
Vector adaptive(const F& f, double a, double b, const OracleOptions& opt) {
  std::vector<Piece> pieces;
  pieces.push_back(gk15(f, a, b));
  while (static_cast<int>(pieces.size()) < opt.max_intervals) {
    double total = 0.0;
    std::size_t worst = 0;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      total += pieces[i].err;
      if (pieces[i].err > pieces[worst].err) worst = i;
    }
    if (total <= opt.abs_tol) break;
    const Piece p = pieces[worst];
    const double mid = 0.5 * (p.a + p.b);
    pieces[worst] = gk15(f, p.a, mid);
    pieces.push_back(gk15(f, mid, p.b));
  }
  Vector sum = Vector::Zero(pieces.front().value.size());
  for (const auto& p : pieces) sum += p.value;
  return sum;
}

template <class F>
Vector fixed(const F& f, double L, const QuadratureRule& unit_panel, int panels) {
  Vector sum;
  const double w = L / panels;
  for (int p = 0; p < panels; ++p) {
    for (std::size_t j = 0; j < unit_panel.nodes.size(); ++j) {
      const Vector v = f(p * w + w * unit_panel.nodes[j]);
      if (sum.size() == 0) sum = Vector::Zero(v.size());
      sum += w * unit_panel.weights[j] * v;
    }
  }
  return sum;
}

class NestedOracle {
 public:
  NestedOracle(const dist::ReferenceDistribution& p, const BasisConfig& cfg,
               const OracleOptions& opt)
      : p_(p), cfg_(cfg), opt_(opt), basis_(cfg), x_(static_cast<Index>(cfg.d)),
        panel_(quadrature_rule(opt.order, 1.0)) {}

  Vector level(std::size_t l) {
    auto f = [this, l](double xl) {
      x_(static_cast<Index>(l)) = xl;
      Vector phi(cfg_.K);
      basis_.eval(xl, phi.data());
      if (l + 1 == cfg_.d) return Vector(phi * dist::pdf(p_, x_));
      const Vector inner = level(l + 1);
      Vector out(cfg_.K * inner.size());
      for (Index k = 0; k < cfg_.K; ++k) out.segment(k * inner.size(), inner.size()) = phi(k) * inner;
      return out;
    };
    return opt_.adaptive ? adaptive(f, 0.0, cfg_.L, opt_) : fixed(f, cfg_.L, panel_, opt_.panels);
  }

 private:
  const dist::ReferenceDistribution& p_;
  const BasisConfig& cfg_;
  const OracleOptions& opt_;
  CosineBasis basis_;
  Vector x_;
  QuadratureRule panel_;
};

}  // namespace

tt::DenseTensor fourier_coeffs_oracle(const dist::ReferenceDistribution& p,
                                      const BasisConfig& cfg, const OracleOptions& opt) {
  cfg.validate();
  if (cfg.d > 3) throw SizeError("the brute-force coefficient oracle is limited to d <= 3");
  if (dist::dimension(p) != cfg.d) throw ShapeError("density dimension does not match basis");
  NestedOracle oracle(p, cfg, opt);
  const Vector v = oracle.level(0);
  return tt::DenseTensor(std::vector<Index>(cfg.d, cfg.K), std::vector<double>(v.begin(), v.end()));
}

CoefficientSet compute_coefficients(const dist::ReferenceDistribution& p, const BasisConfig& cfg,
                                    const PipelineOptions& opt, PipelineReport* report) {
  cfg.validate();
  const auto rule = make_rule(opt.quadrature, cfg.N, cfg.L);
  tt::CrossOptions co;
  co.eps = opt.cross_eps;
  co.seed = opt.seed;

  auto t0 = std::chrono::steady_clock::now();
  const auto pres = discretize_pdf(p, cfg, rule, co);
  const double tp = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  tt::TtTensor w = fourier_coeffs(pres.tensor, rule, cfg);
  if (opt.round_eps > 0.0) w = tt::tt_round(w, tt::ToleranceSpec::accuracy(opt.round_eps));
  const double tw = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  tt::TtTensor lam = lambda_tensor(cfg, opt.lambda);
  const double tl = seconds_since(t0);

  if (report) {
    report->p_ranks = pres.tensor.ranks();
    report->p_error = pres.error_estimate;
    report->p_calls = pres.oracle_calls();
    report->p_sweeps = pres.sweeps;
    report->seconds_p = tp;
    report->seconds_w = tw;
    report->seconds_lambda = tl;
  }
  return {std::move(w), std::move(lam), cfg};
}

namespace {
constexpr char kMagic[8] = {'T', 'T', 'E', 'C', 'O', 'E', 'F', '2'};
}

void save_coefficients(const std::filesystem::path& path, const CoefficientSet& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof kMagic);
  const std::uint64_t hdr[4] = {c.config.d, static_cast<std::uint64_t>(c.config.K),
                                static_cast<std::uint64_t>(c.config.N),
                                c.config.half_period ? 1u : 0u};
  out.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
  out.write(reinterpret_cast<const char*>(&c.config.L), sizeof c.config.L);
  tt::write_tt(out, c.w_hat);
  tt::write_tt(out, c.lambda);
  if (!out) throw Error("failed writing " + path.string());
}

CoefficientSet load_coefficients(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[8];
  std::uint64_t hdr[4];
  CoefficientSet c;
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw ParseError(path.string() + ": not a coefficient cache");
  }
  if (!in.read(reinterpret_cast<char*>(hdr), sizeof hdr) ||
      !in.read(reinterpret_cast<char*>(&c.config.L), sizeof c.config.L)) {
    throw ParseError(path.string() + ": truncated header");
  }
  c.config.d = hdr[0];
  c.config.K = static_cast<Index>(hdr[1]);
  c.config.N = static_cast<Index>(hdr[2]);
  c.config.half_period = hdr[3] != 0;
  c.config.validate();
  c.w_hat = tt::read_tt(in);
  c.lambda = tt::read_tt(in);
  const std::vector<Index> modes(c.config.d, c.config.K);
  if (c.w_hat.mode_sizes() != modes || c.lambda.mode_sizes() != modes) {
    throw ParseError(path.string() + ": tensor shapes do not match the header");
  }
  return c;
}

}  // namespace ttergodic::fourier
