#include "adanorm/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <tuple>
#include <utility>
#include <vector>

#include "adanorm/error.hpp"

namespace adanorm::kernels {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_zero(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; });
}

std::size_t acceptance_limit(double tau, std::size_t m) {
  return static_cast<std::size_t>(std::floor(tau * static_cast<double>(m)));
}

void check_shift(const NormDraws& nd, std::span<const double> shift) {
  if (shift.size() != nd.draws.dim())
    fail(ErrorKind::DimensionMismatch, "shift has length " + std::to_string(shift.size()) + ", draws have dimension " +
                                           std::to_string(nd.draws.dim()));
}

// ---------------------------------------------------------------------------
// Column-major gauge evaluation.
//
// Rows live in `base` with column j starting at base + j * ld. Operation order
// per row matches gauge::of_vector exactly: coordinates in index order,
// a_j = u_j + t_j, then the same accumulation.

constexpr std::size_t kBlock = 128;

// Batcher odd-even merge sort for the next power of two, with comparators
// that touch padding positions dropped.
std::vector<std::pair<std::uint32_t, std::uint32_t>> make_sort_network(std::size_t n) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> net;
  std::size_t size = 1;
  while (size < n) size <<= 1;
  for (std::size_t p = 1; p < size; p <<= 1)
    for (std::size_t k = p; k >= 1; k >>= 1)
      for (std::size_t j = k % p; j + k < size; j += 2 * k)
        for (std::size_t i = 0; i < std::min(k, size - j - k); ++i)
          if ((i + j) / (2 * p) == (i + j + k) / (2 * p)) {
            const std::size_t a = i + j;
            const std::size_t b = i + j + k;
            if (b < n) net.emplace_back(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b));
          }
  return net;
}

const std::vector<std::pair<std::uint32_t, std::uint32_t>>& sort_network(std::size_t n) {
  thread_local std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> cache;
  if (cache.size() <= n) cache.resize(n + 1);
  auto& net = cache[n];
  if (net.empty() && n > 1) net = make_sort_network(n);
  return net;
}

class SoaGauges {
 public:
  SoaGauges(const NormSpec& spec, std::size_t d) : spec_(spec), d_(d) {
    if (spec.kind() == NormSpec::Kind::SumSquares) {
      spec.check_dimension(d);
      if (spec.k() == d)
        mode_ = Mode::Pow2;
      else if (spec.k() == 1)
        mode_ = Mode::MaxSquare;
      else {
        mode_ = Mode::TopSquares;
        net_ = &sort_network(d);
        sq_.resize(d * kBlock);
      }
    } else if (spec.kind() == NormSpec::Kind::LInf) {
      mode_ = Mode::MaxAbs;
    } else {
      const double p = spec.p();
      mode_ = p == 1.0 ? Mode::Pow1 : p == 2.0 ? Mode::Pow2 : p == 4.0 ? Mode::Pow4 : p == 6.0 ? Mode::Pow6 : Mode::General;
      row_.resize(d);
    }
  }

  /// Rows live in `base` with column j starting at base + j * ld.
  void run(const double* base, std::size_t ld, std::size_t count, std::span<const double> t, double* out) {
    for (std::size_t start = 0; start < count; start += kBlock) {
      const std::size_t n = std::min(kBlock, count - start);
      block(base + start, ld, n, t, out + start);
    }
  }

 private:
  enum class Mode { Pow1, Pow2, Pow4, Pow6, General, MaxAbs, MaxSquare, TopSquares };

  void block(const double* base, std::size_t ld, std::size_t n, std::span<const double> t, double* out) {
    double acc[kBlock];
    for (std::size_t r = 0; r < n; ++r) acc[r] = 0.0;
    switch (mode_) {
      case Mode::Pow1:
        fold_columns(base, ld, n, t, acc, [](double a, double v) { return a + std::abs(v); });
        break;
      case Mode::Pow2:
        fold_columns(base, ld, n, t, acc, [](double a, double v) { return a + v * v; });
        break;
      case Mode::Pow4:
        fold_columns(base, ld, n, t, acc, [](double a, double v) {
          const double q = v * v;
          return a + q * q;
        });
        break;
      case Mode::Pow6:
        fold_columns(base, ld, n, t, acc, [](double a, double v) {
          const double q = v * v;
          return a + q * q * q;
        });
        break;
      case Mode::MaxAbs:
        fold_columns(base, ld, n, t, acc, [](double a, double v) { return std::max(a, std::abs(v)); });
        break;
      case Mode::MaxSquare:
        fold_columns(base, ld, n, t, acc, [](double a, double v) { return std::max(a, v * v); });
        break;
      case Mode::TopSquares:
        top_squares(base, ld, n, t, acc);
        break;
      case Mode::General:
        for (std::size_t r = 0; r < n; ++r) {
          for (std::size_t j = 0; j < d_; ++j) row_[j] = base[j * ld + r] + t[j];
          acc[r] = gauge::of_vector(spec_, row_);
        }
        break;
    }
    std::copy(acc, acc + n, out);
  }

  // acc[r] = fold over j of op(acc[r], u_rj + t_j), in coordinate order.
  template <class Op>
  void fold_columns(const double* base, std::size_t ld, std::size_t n, std::span<const double> t, double* acc,
                    Op op) const {
    for (std::size_t j = 0; j < d_; ++j) {
      const double* col = base + j * ld;
      const double tj = t[j];
      for (std::size_t r = 0; r < n; ++r) acc[r] = op(acc[r], col[r] + tj);
    }
  }

  // Squares sorted ascending by the network, then the k largest added from
  // the top down.
  void top_squares(const double* base, std::size_t ld, std::size_t n, std::span<const double> t, double* acc) {
    double* sq = sq_.data();
    for (std::size_t j = 0; j < d_; ++j) {
      const double* col = base + j * ld;
      double* dst = sq + j * kBlock;
      const double tj = t[j];
      for (std::size_t r = 0; r < n; ++r) {
        const double a = col[r] + tj;
        dst[r] = a * a;
      }
    }
    for (const auto& [a, b] : *net_) {
      double* x = sq + a * kBlock;
      double* y = sq + b * kBlock;
      for (std::size_t r = 0; r < n; ++r) {
        const double lo = std::min(x[r], y[r]);
        const double hi = std::max(x[r], y[r]);
        x[r] = lo;
        y[r] = hi;
      }
    }
    for (std::size_t q = 0; q < spec_.k(); ++q) {
      const double* src = sq + (d_ - 1 - q) * kBlock;
      for (std::size_t r = 0; r < n; ++r) acc[r] += src[r];
    }
  }

  const NormSpec& spec_;
  std::size_t d_;
  Mode mode_ = Mode::Pow2;
  const std::vector<std::pair<std::uint32_t, std::uint32_t>>* net_ = nullptr;
  std::vector<double> sq_;
  std::vector<double> row_;
};

// Scratch reused across searches on the same thread.
constexpr int kFullPassSteps = 3;

struct SearchWorkspace {
  std::vector<double> g_lo, g_hi, g_mid, act, a_lo, a_hi, a_mid;
  std::vector<std::uint32_t> keep;
};

SearchWorkspace& workspace() {
  thread_local SearchWorkspace ws;
  return ws;
}

}  // namespace

// ---------------------------------------------------------------------------
// Reference

std::size_t reference::count_accepted(const NormDraws& nd, std::span<const double> shift) {
  check_shift(nd, shift);
  const std::size_t d = nd.draws.dim();
  std::vector<double> v(d);
  std::size_t count = 0;
  for (std::size_t i = 0; i < nd.draws.m(); ++i) {
    const auto u = nd.draws.row(i);
    for (std::size_t j = 0; j < d; ++j) v[j] = u[j] + shift[j];
    count += gauge::of_vector(nd.spec, v) <= nd.gauge_c0;
  }
  return count;
}

namespace {

// The bracketing and bisection shared by both engines. With a finite z the
// search stops once the bracket excludes z: it returns the current hi when
// the result is known to be <= z, and +inf when it is known to exceed z.
// A NaN z never stops early.
double reference_search(const NormDraws& nd, std::span<const double> x, const RaySearch& search, double z) {
  check_shift(nd, x);
  if (is_zero(x)) return kInf;
  const std::size_t limit = acceptance_limit(search.tau, nd.draws.m());
  std::vector<double> t(x.size());
  auto count_at = [&](double s) {
    for (std::size_t j = 0; j < x.size(); ++j) t[j] = s * x[j];
    return reference::count_accepted(nd, t);
  };

  double lo = 0.0;
  double hi = 1.0;
  int doublings = 0;
  while (count_at(hi) > limit) {
    if (doublings >= search.max_doublings) return kInf;
    lo = hi;
    hi *= 2.0;
    ++doublings;
    if (lo >= z) return kInf;
  }
  while (hi - lo > search.rel_tol * hi) {
    if (hi <= z) return hi;
    if (lo >= z) return kInf;
    const double mid = lo + 0.5 * (hi - lo);
    if (count_at(mid) <= limit)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

}  // namespace

double reference::multiplicative_factor(const NormDraws& nd, std::span<const double> x, const RaySearch& search) {
  return reference_search(nd, x, search, std::numeric_limits<double>::quiet_NaN());
}

bool reference::factor_at_most(const NormDraws& nd, std::span<const double> x, const RaySearch& search, double z) {
  if (z == kInf) return true;
  return reference_search(nd, x, search, z) <= z;
}

// ---------------------------------------------------------------------------
// Blocked

void blocked::row_gauges(const NormDraws& nd, std::span<const double> shift, std::span<double> out) {
  check_shift(nd, shift);
  const std::size_t m = nd.draws.m();
  if (out.size() != m) fail(ErrorKind::DimensionMismatch, "gauge output length");
  SoaGauges soa(nd.spec, nd.draws.dim());
  soa.run(nd.draws.column(0).data(), m, m, shift, out.data());
}

std::size_t blocked::count_accepted(const NormDraws& nd, std::span<const double> shift) {
  std::vector<double> g(nd.draws.m());
  row_gauges(nd, shift, g);
  return static_cast<std::size_t>(
      std::count_if(g.begin(), g.end(), [&](double v) { return v <= nd.gauge_c0; }));
}

namespace {

double blocked_search(const NormDraws& nd, std::span<const double> x, const RaySearch& search, double z) {
  check_shift(nd, x);
  if (is_zero(x)) return kInf;
  const std::size_t m = nd.draws.m();
  const std::size_t d = nd.draws.dim();
  if (nd.row_gauges.size() != m) fail(ErrorKind::DimensionMismatch, "row gauges length");
  const std::size_t limit = acceptance_limit(search.tau, m);
  const double gc0 = nd.gauge_c0;
  const double* columns = nd.draws.column(0).data();

  SoaGauges soa(nd.spec, d);
  SearchWorkspace& ws = workspace();
  std::vector<double> t(d);
  auto set_shift = [&](double s) {
    for (std::size_t j = 0; j < d; ++j) t[j] = s * x[j];
  };
  auto accepted = [gc0](const double* g, std::size_t n) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < n; ++i) c += g[i] <= gc0;
    return c;
  };

  // Passes over all rows stop as soon as count <= limit is settled; rows past
  // `filled` are evaluated later only if the pruned phase needs them.
  struct Pass {
    std::vector<double>* g;
    double s;
    std::size_t filled;
  };
  constexpr std::size_t kChunk = 4 * kBlock;
  auto decide = [&](std::vector<double>& g, double s) -> std::pair<bool, Pass> {
    g.resize(m);
    set_shift(s);
    std::size_t count = 0;
    std::size_t start = 0;
    while (start < m) {
      const std::size_t len = std::min(kChunk, m - start);
      soa.run(columns + start, m, len, t, g.data() + start);
      count += accepted(g.data() + start, len);
      start += len;
      if (count > limit || count + (m - start) <= limit) break;
    }
    return {count <= limit, Pass{&g, s, start}};
  };
  auto complete = [&](Pass& pass) {
    if (pass.filled == m) return;
    set_shift(pass.s);
    soa.run(columns + pass.filled, m, m - pass.filled, t, pass.g->data() + pass.filled);
    pass.filled = m;
  };

  ws.g_lo.assign(nd.row_gauges.begin(), nd.row_gauges.end());
  Pass p_lo{&ws.g_lo, 0.0, m};
  double lo = 0.0;
  double hi = 1.0;
  auto [hi_ok, p_hi] = decide(ws.g_hi, hi);
  int doublings = 0;
  while (!hi_ok) {
    if (doublings >= search.max_doublings) return kInf;
    lo = hi;
    hi *= 2.0;
    ++doublings;
    if (lo >= z) return kInf;
    std::swap(ws.g_lo, ws.g_hi);
    p_lo = Pass{&ws.g_lo, p_hi.s, p_hi.filled};
    std::tie(hi_ok, p_hi) = decide(ws.g_hi, hi);
  }

  // The first bisection steps also run over all rows: the bracket is still
  // wide, so few rows could be set aside, and most early-stopping searches
  // end here.
  for (int step = 0; step < kFullPassSteps && hi - lo > search.rel_tol * hi; ++step) {
    if (hi <= z) return hi;
    if (lo >= z) return kInf;
    const double mid = lo + 0.5 * (hi - lo);
    auto [mid_ok, p_mid] = decide(ws.g_mid, mid);
    if (mid_ok) {
      hi = mid;
      std::swap(ws.g_hi, ws.g_mid);
      p_hi = Pass{&ws.g_hi, p_mid.s, p_mid.filled};
    } else {
      lo = mid;
      std::swap(ws.g_lo, ws.g_mid);
      p_lo = Pass{&ws.g_lo, p_mid.s, p_mid.filled};
    }
  }
  if (!(hi - lo > search.rel_tol * hi) || hi <= z) return hi;
  if (lo >= z) return kInf;
  complete(p_lo);
  complete(p_hi);

  // Bisection over the rows whose state on [lo, hi] is still open. A row
  // accepted at both ends stays accepted in between, since sublevel sets of
  // a norm along a line are intervals. phi(u + s x) is phi(x)-Lipschitz in s,
  // so on [lo, hi] it stays above (phi_lo + phi_hi - (hi - lo) phi(x)) / 2 and
  // a row rejected at both ends is dropped once that exceeds c0.
  const double c0 = gauge::to_norm(nd.spec, gc0);
  const double phi_x = gauge::to_norm(nd.spec, gauge::of_vector(nd.spec, x));
  const double margin = 1.0 + 1e-9;
  double one_end = 0.0;   // one end above this gauge settles it
  double both_ends = 0.0; // below this at both ends the pair bound cannot settle it
  auto set_width = [&](double width) {
    one_end = gauge::from_norm(nd.spec, (c0 + width * phi_x) * margin);
    both_ends = gauge::from_norm(nd.spec, c0 + 0.5 * width * phi_x);
  };
  auto stays_rejected = [&](double g_a, double g_b, double width) {
    const double g_max = std::max(g_a, g_b);
    if (g_max > one_end) return true;
    if (g_max <= both_ends) return false;
    const double floor_value =
        0.5 * (gauge::to_norm(nd.spec, g_a) + gauge::to_norm(nd.spec, g_b) - width * phi_x);
    return floor_value > c0 * margin;
  };
  set_width(hi - lo);

  std::size_t fixed_accepted = 0;
  ws.keep.clear();
  for (std::size_t i = 0; i < m; ++i) {
    const bool acc_lo = ws.g_lo[i] <= gc0;
    const bool acc_hi = ws.g_hi[i] <= gc0;
    if (acc_lo && acc_hi)
      ++fixed_accepted;
    else if (acc_lo || acc_hi || !stays_rejected(ws.g_lo[i], ws.g_hi[i], hi - lo))
      ws.keep.push_back(static_cast<std::uint32_t>(i));
  }
  std::size_t n = ws.keep.size();
  const std::size_t ld = std::max<std::size_t>(n, 1);
  ws.act.resize(d * ld);
  ws.a_lo.resize(ld);
  ws.a_hi.resize(ld);
  ws.a_mid.resize(ld);
  for (std::size_t j = 0; j < d; ++j) {
    const double* col = columns + j * m;
    double* dst = ws.act.data() + j * ld;
    for (std::size_t r = 0; r < n; ++r) dst[r] = col[ws.keep[r]];
  }
  for (std::size_t r = 0; r < n; ++r) {
    ws.a_lo[r] = ws.g_lo[ws.keep[r]];
    ws.a_hi[r] = ws.g_hi[ws.keep[r]];
  }

  double* act = ws.act.data();
  while (hi - lo > search.rel_tol * hi) {
    if (hi <= z) return hi;
    if (lo >= z) return kInf;
    const double mid = lo + 0.5 * (hi - lo);
    set_shift(mid);
    soa.run(act, ld, n, t, ws.a_mid.data());
    const std::size_t count = fixed_accepted + accepted(ws.a_mid.data(), n);
    if (count <= limit) {
      hi = mid;
      std::swap(ws.a_hi, ws.a_mid);
    } else {
      lo = mid;
      std::swap(ws.a_lo, ws.a_mid);
    }
    const double width = hi - lo;
    set_width(width);
    double* g_lo = ws.a_lo.data();
    double* g_hi = ws.a_hi.data();
    std::size_t w = 0;
    for (std::size_t r = 0; r < n; ++r) {
      const bool acc_lo = g_lo[r] <= gc0;
      const bool acc_hi = g_hi[r] <= gc0;
      if (acc_lo && acc_hi) {
        ++fixed_accepted;
        continue;
      }
      if (!acc_lo && !acc_hi && stays_rejected(g_lo[r], g_hi[r], width)) continue;
      if (w != r) {
        for (std::size_t j = 0; j < d; ++j) act[j * ld + w] = act[j * ld + r];
        g_lo[w] = g_lo[r];
        g_hi[w] = g_hi[r];
      }
      ++w;
    }
    n = w;
  }
  return hi;
}

}  // namespace

double blocked::multiplicative_factor(const NormDraws& nd, std::span<const double> x, const RaySearch& search) {
  return blocked_search(nd, x, search, std::numeric_limits<double>::quiet_NaN());
}

bool blocked::factor_at_most(const NormDraws& nd, std::span<const double> x, const RaySearch& search, double z) {
  if (z == kInf) return true;
  return blocked_search(nd, x, search, z) <= z;
}

}  // namespace adanorm::kernels
