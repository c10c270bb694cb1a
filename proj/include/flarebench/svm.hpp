#pragma once

#include "core_types.hpp"
#include "sampling.hpp"
#include "text_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace flarebench {

enum class KernelKind { rbf, linear };

inline std::string to_string(KernelKind k) { return k == KernelKind::rbf ? "rbf" : "linear"; }

inline KernelKind parse_kernel(std::string_view s)
{
    if (s == "rbf")
        return KernelKind::rbf;
    if (s == "linear")
        return KernelKind::linear;
    throw config_error("unknown kernel '" + std::string(s) + "'");
}

struct SvmConfig
{
    double c = 1000.0;
    double gamma = 0.01;
    KernelKind kernel = KernelKind::rbf;
    double kkt_tolerance = 1e-3;
    // Consecutive pair updates without objective progress before giving up;
    // 0 means 10 x (number of distinct training points).
    std::size_t max_passes = 0;
    // Hard cap on pair updates; 0 means max(10^7, 200 x distinct points).
    std::size_t max_iterations = 0;
    // Full kernel matrix is cached up to this many distinct points.
    std::size_t kernel_cache_limit = 20000;
    ClassWeights class_weights = ClassWeights::unit();

    void validate() const
    {
        if (!(c > 0) || !std::isfinite(c))
            throw config_error("svm: c must be positive");
        if (!(gamma > 0) || !std::isfinite(gamma))
            throw config_error("svm: gamma must be positive");
        if (!(kkt_tolerance > 0))
            throw config_error("svm: kkt_tolerance must be positive");
        if (!(class_weights.xm > 0) || !(class_weights.cbn > 0))
            throw config_error("svm: class weights must be positive");
    }

    double upper_bound(int y) const noexcept { return c * class_weights.of_label(y); }
};

inline double kernel(std::span<const double> x, std::span<const double> z, const SvmConfig& cfg)
{
    if (x.size() != z.size())
        throw Error(ErrorKind::trial, "kernel: dimension mismatch (" + std::to_string(x.size()) + " vs "
                                          + std::to_string(z.size()) + ")");
    if (cfg.kernel == KernelKind::linear)
        return std::inner_product(x.begin(), x.end(), z.begin(), 0.0);
    double d2 = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double d = x[k] - z[k];
        d2 += d * d;
    }
    return std::exp(-cfg.gamma * d2);
}

struct TrainingInfo
{
    std::size_t iterations = 0;
    double kkt_violation = 0; // max violating-pair gap at exit
    bool converged = false;
    std::size_t n_train = 0;
    std::size_t n_distinct = 0;
    double dual_objective = 0;
};

/// Dual solution expressed over the caller's training rows.
struct DualSolution
{
    std::vector<double> alpha; // one per training row
    double bias = 0;
    TrainingInfo info;
};

class SvmModel
{
public:
    Grid<double> support_vectors;        // distinct rows with alpha > 0
    std::vector<double> alpha;           // per-copy multiplier, 0 < alpha <= C w_y
    std::vector<int> labels;             // +1 / -1
    std::vector<std::size_t> multiplicity; // identical training rows merged into this vector
    double bias = 0;
    SvmConfig config;
    TrainingInfo info;

    std::size_t dim() const noexcept { return support_vectors.cols(); }
    std::size_t size() const noexcept { return alpha.size(); }

    double coefficient(std::size_t i) const noexcept
    {
        return alpha[i] * static_cast<double>(multiplicity[i]) * labels[i];
    }

    /// f(x) = sum_i alpha_i y_i K(x_i, x) + b
    double decision_value(std::span<const double> x) const
    {
        if (x.size() != dim())
            throw Error(ErrorKind::trial, "predict: dimension mismatch (" + std::to_string(x.size())
                                              + " vs model " + std::to_string(dim()) + ")");
        double f = bias;
        const double* sv = support_vectors.data().data();
        for (std::size_t i = 0; i < size(); ++i, sv += dim())
            f += coefficient(i) * kernel(std::span<const double>(sv, dim()), x, config);
        return f;
    }

    // Ties go to the positive class.
    int predict(std::span<const double> x) const { return decision_value(x) >= 0 ? 1 : -1; }
};

namespace detail {

struct DistinctRows
{
    std::vector<std::size_t> group_of;      // training row -> distinct index
    std::vector<std::size_t> representative; // distinct index -> first training row
    std::vector<std::size_t> count;
};

// Groups identical (row, label) pairs; distinct indices follow first appearance.
inline DistinctRows group_identical(const Grid<double>& x, std::span<const int> y)
{
    const std::size_t n = x.rows(), d = x.cols();
    const double* base = x.data().data();
    const auto less = [&](std::size_t a, std::size_t b) {
        if (y[a] != y[b])
            return y[a] < y[b];
        const double* ra = base + a * d;
        const double* rb = base + b * d;
        for (std::size_t k = 0; k < d; ++k)
            if (ra[k] != rb[k])
                return ra[k] < rb[k];
        return a < b;
    };
    const auto same = [&](std::size_t a, std::size_t b) {
        return y[a] == y[b] && std::equal(base + a * d, base + a * d + d, base + b * d);
    };

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), less);

    std::vector<std::size_t> leader(n);
    for (std::size_t k = 0; k < n; ++k)
        leader[order[k]] = (k > 0 && same(order[k - 1], order[k])) ? leader[order[k - 1]] : order[k];

    DistinctRows g;
    g.group_of.assign(n, 0);
    std::vector<std::size_t> index_of(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t l = leader[i];
        if (index_of[l] == n) {
            index_of[l] = g.representative.size();
            g.representative.push_back(i);
            g.count.push_back(0);
        }
        g.group_of[i] = index_of[l];
        ++g.count[index_of[l]];
    }
    return g;
}

class KernelRows
{
public:
    KernelRows(const Grid<double>& pts, const SvmConfig& cfg) : pts_(pts), cfg_(cfg), n_(pts.rows())
    {
        diag_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i)
            diag_[i] = k(i, i);
        if (n_ <= cfg.kernel_cache_limit) {
            full_.assign(n_ * n_, 0.0);
            for (std::size_t i = 0; i < n_; ++i) {
                full_[i * n_ + i] = diag_[i];
                for (std::size_t j = i + 1; j < n_; ++j)
                    full_[i * n_ + j] = full_[j * n_ + i] = k(i, j);
            }
        } else {
            scratch_[0].resize(n_);
            scratch_[1].resize(n_);
        }
    }

    double diag(std::size_t i) const noexcept { return diag_[i]; }

    // Row i of the kernel matrix. When rows are not cached only the entries
    // listed in `subset` are filled (all of them if subset is null); slot
    // selects one of two scratch buffers.
    const double* row(std::size_t i, int slot, const std::vector<std::size_t>* subset = nullptr)
    {
        if (!full_.empty())
            return full_.data() + i * n_;
        auto& buf = scratch_[slot];
        if (subset) {
            for (std::size_t j : *subset)
                buf[j] = k(i, j);
        } else {
            for (std::size_t j = 0; j < n_; ++j)
                buf[j] = k(i, j);
        }
        return buf.data();
    }

private:
    double k(std::size_t i, std::size_t j) const
    {
        const std::size_t d = pts_.cols();
        const double* a = pts_.data().data() + i * d;
        const double* b = pts_.data().data() + j * d;
        return kernel(std::span<const double>(a, d), std::span<const double>(b, d), cfg_);
    }

    const Grid<double>& pts_;
    const SvmConfig& cfg_;
    std::size_t n_;
    std::vector<double> diag_;
    std::vector<double> full_;
    std::vector<double> scratch_[2];
};

struct BoxedDual
{
    std::vector<double> alpha;
    std::vector<double> grad; // gradient of 1/2 a'Qa - e'a
    double bias = 0;
    TrainingInfo info;
};

// Sequential two-variable optimisation of
//   min 1/2 a'Qa - e'a   s.t.  0 <= a_i <= upper_i,  y'a = 0,
// Q_ij = y_i y_j K_ij, with second-order working-pair selection. Variables
// stuck at a bound are periodically dropped from the active set; their
// gradients are rebuilt before convergence is declared.
inline BoxedDual solve_boxed_dual(const Grid<double>& pts, std::span<const int> y, std::span<const double> upper,
                                  const SvmConfig& cfg)
{
    const std::size_t n = pts.rows();
    constexpr double tau = 1e-12;
    KernelRows K(pts, cfg);

    BoxedDual s;
    s.alpha.assign(n, 0.0);
    s.grad.assign(n, -1.0);
    const std::size_t max_stall = cfg.max_passes ? cfg.max_passes : 10 * n;
    const std::size_t max_iter = cfg.max_iterations ? cfg.max_iterations : std::max<std::size_t>(10'000'000, 200 * n);

    const auto in_up = [&](std::size_t t) {
        return y[t] > 0 ? s.alpha[t] < upper[t] : s.alpha[t] > 0;
    };
    const auto in_low = [&](std::size_t t) {
        return y[t] > 0 ? s.alpha[t] > 0 : s.alpha[t] < upper[t];
    };

    std::vector<std::size_t> active(n);
    std::iota(active.begin(), active.end(), 0);
    std::vector<std::size_t> all = active;
    bool unshrunk = false;

    // G_t = -1 + y_t sum_j y_j a_j K_tj for every variable outside the active set.
    const auto reconstruct = [&] {
        if (active.size() == n)
            return;
        std::vector<char> is_active(n, 0);
        for (std::size_t t : active)
            is_active[t] = 1;
        std::vector<std::size_t> inactive;
        for (std::size_t t = 0; t < n; ++t)
            if (!is_active[t]) {
                inactive.push_back(t);
                s.grad[t] = -1.0;
            }
        for (std::size_t j = 0; j < n; ++j) {
            if (s.alpha[j] == 0)
                continue;
            const double* Kj = K.row(j, 0, &inactive);
            const double cj = y[j] * s.alpha[j];
            for (std::size_t t : inactive)
                s.grad[t] += y[t] * cj * Kj[t];
        }
    };

    const auto shrink = [&] {
        double g1 = -std::numeric_limits<double>::infinity(); // max over I_up of -y G
        double g2 = -std::numeric_limits<double>::infinity(); // max over I_low of y G
        for (std::size_t t : active) {
            if (in_up(t))
                g1 = std::max(g1, -y[t] * s.grad[t]);
            if (in_low(t))
                g2 = std::max(g2, y[t] * s.grad[t]);
        }
        if (!unshrunk && g1 + g2 <= 10 * cfg.kkt_tolerance) {
            unshrunk = true;
            reconstruct();
            active = all;
        }
        const auto drop = [&](std::size_t t) {
            if (s.alpha[t] >= upper[t])
                return y[t] > 0 ? -s.grad[t] > g1 : -s.grad[t] > g2;
            if (s.alpha[t] <= 0)
                return y[t] > 0 ? s.grad[t] > g2 : s.grad[t] > g1;
            return false;
        };
        std::erase_if(active, drop);
    };

    double objective = 0;
    std::size_t stall = 0;
    std::size_t iter = 0;
    std::size_t countdown = std::min<std::size_t>(n, 1000);
    bool recheck = false; // active set was just restored; select before shrinking again
    for (;; ++iter) {
        if (!recheck && --countdown == 0) {
            countdown = std::min<std::size_t>(n, 1000);
            shrink();
        }

        double gmax = -std::numeric_limits<double>::infinity();
        std::ptrdiff_t i = -1;
        for (std::size_t t : active) {
            if (in_up(t) && -y[t] * s.grad[t] >= gmax) {
                gmax = -y[t] * s.grad[t];
                i = static_cast<std::ptrdiff_t>(t);
            }
        }

        double gmax2 = -std::numeric_limits<double>::infinity();
        std::ptrdiff_t j = -1;
        double best = std::numeric_limits<double>::infinity();
        const double* Ki = i >= 0 ? K.row(static_cast<std::size_t>(i), 0, &active) : nullptr;
        for (std::size_t t : active) {
            if (!Ki)
                break;
            if (!in_low(t))
                continue;
            const double v = y[t] * s.grad[t];
            gmax2 = std::max(gmax2, v);
            const double b = gmax + v;
            if (b > 0) {
                double a = K.diag(static_cast<std::size_t>(i)) + K.diag(t) - 2.0 * Ki[t];
                if (a <= 0)
                    a = tau;
                const double gain = -(b * b) / a;
                if (gain <= best) {
                    best = gain;
                    j = static_cast<std::ptrdiff_t>(t);
                }
            }
        }

        s.info.kkt_violation = (i >= 0 && j >= 0) ? gmax + gmax2 : 0.0;
        if (i < 0 || j < 0 || gmax + gmax2 < cfg.kkt_tolerance) {
            if (active.size() < n) {
                reconstruct();
                active = all;
                countdown = 1;
                recheck = true;
                --iter;
                continue;
            }
            s.info.converged = true;
            break;
        }
        recheck = false;
        if (iter >= max_iter || stall >= max_stall) {
            reconstruct();
            break;
        }

        const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
        const double* Kj = K.row(uj, 1, &active);
        const double Ci = upper[ui], Cj = upper[uj];
        const double old_i = s.alpha[ui], old_j = s.alpha[uj];
        double& ai = s.alpha[ui];
        double& aj = s.alpha[uj];
        const double Kij = Ki[uj];
        double quad = K.diag(ui) + K.diag(uj) - 2.0 * Kij;
        if (quad <= 0)
            quad = tau;

        if (y[ui] != y[uj]) {
            const double delta = (-s.grad[ui] - s.grad[uj]) / quad;
            const double diff = ai - aj;
            ai += delta;
            aj += delta;
            if (diff > 0) {
                if (aj < 0) { aj = 0; ai = diff; }
            } else {
                if (ai < 0) { ai = 0; aj = -diff; }
            }
            if (diff > Ci - Cj) {
                if (ai > Ci) { ai = Ci; aj = Ci - diff; }
            } else {
                if (aj > Cj) { aj = Cj; ai = Cj + diff; }
            }
        } else {
            const double delta = (s.grad[ui] - s.grad[uj]) / quad;
            const double sum = ai + aj;
            ai -= delta;
            aj += delta;
            if (sum > Ci) {
                if (ai > Ci) { ai = Ci; aj = sum - Ci; }
            } else {
                if (aj < 0) { aj = 0; ai = sum; }
            }
            if (sum > Cj) {
                if (aj > Cj) { aj = Cj; ai = sum - Cj; }
            } else {
                if (ai < 0) { ai = 0; aj = sum; }
            }
        }

        const double di = ai - old_i, dj = aj - old_j;
        const double Qij = y[ui] * y[uj] * Kij;
        const double change = s.grad[ui] * di + s.grad[uj] * dj
            + 0.5 * (K.diag(ui) * di * di + K.diag(uj) * dj * dj) + Qij * di * dj;
        objective += change;
        stall = (-change > 1e-15 * (1.0 + std::abs(objective))) ? 0 : stall + 1;

        const double ci = y[ui] * di, cj = y[uj] * dj;
        for (std::size_t t : active)
            s.grad[t] += y[t] * (ci * Ki[t] + cj * Kj[t]);
    }
    s.info.iterations = iter;
    s.info.dual_objective = -objective;

    // Bias: mean of y_i - sum_j a_j y_j K_ji over free vectors, otherwise the
    // midpoint of the interval allowed by the bounded ones.
    double free_sum = 0;
    std::size_t n_free = 0;
    double lb = -std::numeric_limits<double>::infinity();
    double ub = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
        const double v = -y[t] * s.grad[t];
        if (s.alpha[t] > 0 && s.alpha[t] < upper[t]) {
            free_sum += v;
            ++n_free;
        } else if ((y[t] > 0) == (s.alpha[t] <= 0)) {
            lb = std::max(lb, v);
        } else {
            ub = std::min(ub, v);
        }
    }
    if (n_free > 0)
        s.bias = free_sum / static_cast<double>(n_free);
    else if (std::isfinite(lb) && std::isfinite(ub))
        s.bias = (lb + ub) / 2;
    else
        s.bias = std::isfinite(lb) ? lb : (std::isfinite(ub) ? ub : 0.0);
    return s;
}

} // namespace detail

/// Solves the class-weighted soft-margin dual. Identical training rows are
/// merged into one variable whose bound is the sum of their bounds; the
/// merged multiplier is then shared evenly among the copies.
inline DualSolution solve_dual(const Grid<double>& x, std::span<const int> y, const SvmConfig& cfg)
{
    cfg.validate();
    if (x.rows() != y.size())
        throw Error(ErrorKind::trial, "svm: " + std::to_string(x.rows()) + " rows but " + std::to_string(y.size())
                                          + " labels");
    bool has_pos = false, has_neg = false;
    for (int v : y) {
        if (v != 1 && v != -1)
            throw Error(ErrorKind::trial, "svm: labels must be +1 or -1");
        has_pos = has_pos || v > 0;
        has_neg = has_neg || v < 0;
    }
    if (!has_pos || !has_neg)
        throw Error(ErrorKind::trial, "svm: training data must contain both classes");
    for (double v : x.data())
        if (!std::isfinite(v))
            throw Error(ErrorKind::trial, "svm: non-finite feature value");

    const detail::DistinctRows groups = detail::group_identical(x, y);
    const std::size_t m = groups.representative.size();
    Grid<double> pts(m, x.cols());
    std::vector<int> ys(m);
    std::vector<double> upper(m);
    for (std::size_t g = 0; g < m; ++g) {
        const std::size_t r = groups.representative[g];
        std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(r * x.cols()), x.cols(),
                    pts.data().begin() + static_cast<std::ptrdiff_t>(g * x.cols()));
        ys[g] = y[r];
        upper[g] = cfg.upper_bound(y[r]) * static_cast<double>(groups.count[g]);
    }

    detail::BoxedDual dual = detail::solve_boxed_dual(pts, ys, upper, cfg);

    DualSolution sol;
    sol.bias = dual.bias;
    sol.info = dual.info;
    sol.info.n_train = x.rows();
    sol.info.n_distinct = m;
    sol.alpha.resize(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const std::size_t g = groups.group_of[i];
        sol.alpha[i] = std::min(dual.alpha[g] / static_cast<double>(groups.count[g]), cfg.upper_bound(y[i]));
    }
    return sol;
}

inline SvmModel train(const Grid<double>& x, std::span<const int> y, const SvmConfig& cfg)
{
    const DualSolution sol = solve_dual(x, y, cfg);
    SvmModel model;
    model.config = cfg;
    model.bias = sol.bias;
    model.info = sol.info;

    const detail::DistinctRows groups = detail::group_identical(x, y);
    std::vector<std::size_t> keep;
    for (std::size_t g = 0; g < groups.representative.size(); ++g)
        if (sol.alpha[groups.representative[g]] > 0)
            keep.push_back(g);

    model.support_vectors = Grid<double>(keep.size(), x.cols());
    for (std::size_t k = 0; k < keep.size(); ++k) {
        const std::size_t r = groups.representative[keep[k]];
        std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(r * x.cols()), x.cols(),
                    model.support_vectors.data().begin() + static_cast<std::ptrdiff_t>(k * x.cols()));
        model.alpha.push_back(sol.alpha[r]);
        model.labels.push_back(y[r]);
        model.multiplicity.push_back(groups.count[keep[k]]);
    }
    return model;
}

/// Dual objective sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij, evaluated directly.
inline double dual_objective(const Grid<double>& x, std::span<const int> y, std::span<const double> alpha,
                             const SvmConfig& cfg)
{
    const std::size_t n = x.rows(), d = x.cols();
    double lin = 0, quad = 0;
    for (std::size_t i = 0; i < n; ++i) {
        lin += alpha[i];
        if (alpha[i] == 0)
            continue;
        const std::span<const double> xi(x.data().data() + i * d, d);
        for (std::size_t j = 0; j < n; ++j) {
            if (alpha[j] == 0)
                continue;
            const std::span<const double> xj(x.data().data() + j * d, d);
            quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel(xi, xj, cfg);
        }
    }
    return lin - 0.5 * quad;
}


// Text model format, one key=value per line, then one line per support
// vector: label,alpha,multiplicity,x_1,...,x_d
inline void write_model(std::ostream& os, const SvmModel& m)
{
    using text::put_real;
    const auto kv = [&](const char* k, double v) {
        os << k << '=';
        put_real(os, v);
        os << '\n';
    };
    os << "flarebench-svm=1\n";
    os << "kernel=" << to_string(m.config.kernel) << '\n';
    kv("c", m.config.c);
    kv("gamma", m.config.gamma);
    kv("kkt_tolerance", m.config.kkt_tolerance);
    os << "weight_mode=" << to_string(m.config.class_weights.mode) << '\n';
    kv("weight_xm", m.config.class_weights.xm);
    kv("weight_cbn", m.config.class_weights.cbn);
    kv("bias", m.bias);
    os << "iterations=" << m.info.iterations << '\n';
    kv("kkt_violation", m.info.kkt_violation);
    os << "converged=" << (m.info.converged ? 1 : 0) << '\n';
    os << "dim=" << m.dim() << '\n';
    os << "support_vectors=" << m.size() << '\n';
    for (std::size_t i = 0; i < m.size(); ++i) {
        os << m.labels[i] << ',';
        put_real(os, m.alpha[i]);
        os << ',' << m.multiplicity[i];
        for (std::size_t k = 0; k < m.dim(); ++k) {
            os << ',';
            put_real(os, m.support_vectors(i, k));
        }
        os << '\n';
    }
}

inline SvmModel read_model(std::istream& is)
{
    using text::get_real;
    SvmModel m;
    std::string line;
    const auto value_of = [&](std::string_view key) {
        if (!std::getline(is, line) || line.rfind(std::string(key) + "=", 0) != 0)
            throw data_error("svm model: expected '" + std::string(key) + "='");
        return line.substr(key.size() + 1);
    };
    if (value_of("flarebench-svm") != "1")
        throw data_error("svm model: unsupported version");
    m.config.kernel = parse_kernel(value_of("kernel"));
    m.config.c = get_real(value_of("c"), "c");
    m.config.gamma = get_real(value_of("gamma"), "gamma");
    m.config.kkt_tolerance = get_real(value_of("kkt_tolerance"), "kkt_tolerance");
    m.config.class_weights.mode = parse_weight_mode(value_of("weight_mode"));
    m.config.class_weights.xm = get_real(value_of("weight_xm"), "weight_xm");
    m.config.class_weights.cbn = get_real(value_of("weight_cbn"), "weight_cbn");
    m.bias = get_real(value_of("bias"), "bias");
    m.info.iterations = std::stoull(value_of("iterations"));
    m.info.kkt_violation = get_real(value_of("kkt_violation"), "kkt_violation");
    m.info.converged = value_of("converged") == "1";
    const std::size_t dim = std::stoull(value_of("dim"));
    const std::size_t n = std::stoull(value_of("support_vectors"));
    m.support_vectors = Grid<double>(n, dim);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::getline(is, line))
            throw data_error("svm model: truncated support vector list");
        std::vector<std::string_view> cells;
        std::string_view rest(line);
        for (;;) {
            const auto pos = rest.find(',');
            cells.push_back(rest.substr(0, pos));
            if (pos == std::string_view::npos)
                break;
            rest.remove_prefix(pos + 1);
        }
        if (cells.size() != dim + 3)
            throw data_error("svm model: support vector " + std::to_string(i) + " has wrong width");
        m.labels.push_back(cells[0] == "1" ? 1 : -1);
        m.alpha.push_back(get_real(cells[1], "alpha"));
        m.multiplicity.push_back(std::stoull(std::string(cells[2])));
        for (std::size_t k = 0; k < dim; ++k)
            m.support_vectors(i, k) = get_real(cells[k + 3], "support vector");
    }
    return m;
}

} // namespace flarebench
