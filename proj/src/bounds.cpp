#include "rsgnet/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rsgnet/trainer.hpp"

namespace rsgnet {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double BoundInputs::gamma_for(int layer) const {
    if (layer_gammas.empty()) return gamma;
    return layer_gammas.at(static_cast<std::size_t>(layer) - 1);
}

double harmonic(long long n, double theta) {
    if (n < 1) throw std::invalid_argument("harmonic number needs N >= 1");
    double sum = 0.0;
    if (theta >= 0.0) {
        for (long long i = n; i >= 1; --i) sum += std::pow(static_cast<double>(i), -theta);
    } else {
        for (long long i = 1; i <= n; ++i) sum += std::pow(static_cast<double>(i), -theta);
    }
    return sum;
}

double const_e_s(int d_x, int d_y) {
    if (d_x < 1 || d_y < 1) throw std::invalid_argument("widths must be >= 1");
    return 13.0 * d_x * d_y / 256.0;
}

namespace {

void require_widths(const BoundInputs& in, std::size_t at_least) {
    if (in.widths.size() < at_least)
        throw std::invalid_argument("bound inputs need at least " + std::to_string(at_least) +
                                    " widths");
    for (int w : in.widths)
        if (w < 1) throw std::invalid_argument("widths must be >= 1");
}

}  // namespace

BoundReport bound_1nn_const(const BoundInputs& in) {
    require_widths(in, 2);
    BoundReport report;
    const double e_s = const_e_s(in.widths.front(), in.widths.back());
    const double e_s_gamma = 1.0 - 13.0 / 16.0 * in.gamma;
    report.constants["e_s"] = e_s;
    report.constants["e_s_gamma"] = e_s_gamma;
    if (in.objective_gap > 0.0)
        report.optimal_gamma = optimal_gamma_1nn(in.batch_size, in.objective_gap,
                                                 in.widths.front(), in.widths.back(),
                                                 in.iterations);
    if (e_s_gamma <= 0.0) {
        report.violated_preconditions.push_back("gamma must be < 16/13 so e_s_gamma > 0");
        return report;
    }
    report.bound_value =
        (in.objective_gap / (static_cast<double>(in.iterations) * in.gamma) +
         e_s * in.gamma / in.batch_size) /
        e_s_gamma;
    return report;
}

double optimal_gamma_1nn(int batch_size, double f_w1, int d_x, int d_y, long long n) {
    if (batch_size < 1 || f_w1 <= 0.0 || n < 1)
        throw std::invalid_argument("optimal gamma needs positive B, f(W^1) and N");
    return std::sqrt(batch_size * f_w1 / (const_e_s(d_x, d_y) * static_cast<double>(n)));
}

BoundReport bound_1nn_decreasing(const BoundInputs& in) {
    require_widths(in, 2);
    BoundReport report;
    const double e_s = const_e_s(in.widths.front(), in.widths.back());
    report.constants["e_s"] = e_s;
    const double h_rho = harmonic(in.iterations, in.rho);
    const double h_2rho = harmonic(in.iterations, 2.0 * in.rho);
    report.constants["H_N_rho"] = h_rho;
    report.constants["H_N_2rho"] = h_2rho;
    // gamma/k^rho is monotone in k, so checking both ends covers every k.
    const double g_first = in.gamma;
    const double g_last = in.gamma / std::pow(static_cast<double>(in.iterations), in.rho);
    if (std::max(g_first, g_last) >= 16.0 / 13.0) {
        report.violated_preconditions.push_back(
            "gamma/k^rho must stay < 16/13 for every k <= N");
        return report;
    }
    report.bound_value = 16.0 / (3.0 * h_rho) *
                         (in.objective_gap / in.gamma +
                          e_s * in.gamma * h_2rho / in.batch_size);
    return report;
}

IterationComplexity iteration_complexity_1nn(double epsilon, double delta, int runs,
                                             int batch_size, double f_w1, int d_x, int d_y) {
    if (epsilon <= 0.0 || delta <= 0.0 || delta >= 1.0 || runs < 1 || batch_size < 1 ||
        f_w1 <= 0.0)
        throw std::invalid_argument("iteration complexity needs epsilon > 0, delta in (0,1), "
                                    "T >= 1, B >= 1, f(W^1) > 0");
    const double e_s = const_e_s(d_x, d_y);
    IterationComplexity out;
    out.delta_bar = 13.0 * batch_size * epsilon * std::pow(delta, 1.0 / runs) / (32.0 * e_s);
    const double n_real = 4.0 * f_w1 * e_s * (1.0 + out.delta_bar) * (1.0 + out.delta_bar) /
                          (batch_size * std::pow(delta, 2.0 / runs) * epsilon * epsilon);
    out.iterations = static_cast<long long>(std::ceil(n_real));
    return out;
}

long long sample_size_from_iterations(long long n, int batch_size, long long epochs) {
    if (epochs < 1) throw std::invalid_argument("epoch count must be >= 1");
    if (n < 1 || batch_size < 1) throw std::invalid_argument("need N >= 1 and B >= 1");
    const double s = static_cast<double>(batch_size) * static_cast<double>(n) /
                     static_cast<double>(epochs);
    return static_cast<long long>(std::ceil(s));
}

double const_e_da(int d_x, int d_h, double zeta, double w_m, const DataMoments& moments) {
    if (d_x < 1 || d_h < 1) throw std::invalid_argument("widths must be >= 1");
    if (!(zeta > 0.0 && zeta <= 1.0)) throw std::invalid_argument("zeta must lie in (0,1]");
    if (w_m <= 0.0) throw std::invalid_argument("w_m must be > 0");
    const double zdw = zeta * d_x * w_m;
    const double bracket = 1.0 + zdw / 4.0 * moments.mu_x +
                           (5.0 * zeta / 16.0 - zeta * zeta / 4.0) * zdw * zdw * moments.tau_x;
    return static_cast<double>(d_x) * d_h / 16.0 * bracket;
}

BoundReport bound_da(const BoundInputs& in) {
    require_widths(in, 2);
    if (in.box_limits.empty()) throw std::invalid_argument("DA bound needs a box limit");
    BoundReport report;
    const double w_m = in.box_limits.front();
    const double e_da =
        const_e_da(in.widths[0], in.widths[1], in.keep_prob, w_m, in.moments);
    report.constants["e_da"] = e_da;
    if (in.lipschitz <= 0.0) {
        report.violated_preconditions.push_back("DA bound needs a positive Lipschitz constant");
        return report;
    }
    report.constants["U_da"] = in.lipschitz;
    report.optimal_gamma = std::sqrt(2.0 * in.batch_size * in.objective_gap /
                                     (in.lipschitz * e_da * static_cast<double>(in.iterations)));
    const double e_da_gamma = 1.0 - in.lipschitz / 2.0 * in.gamma;
    report.constants["e_da_gamma"] = e_da_gamma;
    if (in.gamma >= 2.0 / in.lipschitz) {
        report.violated_preconditions.push_back("gamma must be < 2/U_da");
        return report;
    }
    report.bound_value =
        in.objective_gap / (static_cast<double>(in.iterations) * in.gamma * e_da_gamma) +
        e_da / in.batch_size * (1.0 + 1.0 / e_da_gamma);
    return report;
}

std::vector<double> const_e_m(const std::vector<int>& widths, const std::vector<double>& gammas,
                              const std::vector<double>& box_limits) {
    const int L = static_cast<int>(widths.size()) - 1;
    if (L < 2)
        throw std::invalid_argument("multi-layer constants need L >= 2 (use e_s for L = 1)");
    if (static_cast<int>(gammas.size()) != L)
        throw std::invalid_argument("need one gamma per layer");
    if (static_cast<int>(box_limits.size()) < L - 1)
        throw std::invalid_argument("need one box limit per hidden layer");
    std::vector<double> e(static_cast<std::size_t>(L));
    for (int l = 1; l <= L - 1; ++l)
        e[static_cast<std::size_t>(l) - 1] = gammas[static_cast<std::size_t>(l) - 1] / 4.0 *
                                             widths[static_cast<std::size_t>(l) - 1] *
                                             widths[static_cast<std::size_t>(l)] *
                                             widths[static_cast<std::size_t>(l) + 1] *
                                             box_limits[static_cast<std::size_t>(l) - 1];
    const double gl = gammas[static_cast<std::size_t>(L) - 1];
    e[static_cast<std::size_t>(L) - 1] =
        13.0 * widths[static_cast<std::size_t>(L) - 1] * widths[static_cast<std::size_t>(L)] *
        gl * gl / 256.0;
    return e;
}

namespace {

struct MultiLayerParts {
    std::vector<double> e_m;
    double e_m_gamma = 0.0;
    std::vector<std::string> violations;
};

MultiLayerParts multilayer_parts(const BoundInputs& in) {
    const int L = static_cast<int>(in.widths.size()) - 1;
    MultiLayerParts parts;
    std::vector<double> gammas(static_cast<std::size_t>(L));
    for (int l = 1; l <= L; ++l) gammas[static_cast<std::size_t>(l) - 1] = in.gamma_for(l);
    parts.e_m = const_e_m(in.widths, gammas, in.box_limits);

    const double g_L = gammas[static_cast<std::size_t>(L) - 1];
    if (g_L >= 16.0 / 13.0)
        parts.violations.push_back("output-layer gamma must be < 16/13");
    double e_m_gamma = g_L - 13.0 / 16.0 * g_L * g_L;
    for (int l = 1; l <= L - 1; ++l) {
        const double g_l = gammas[static_cast<std::size_t>(l) - 1];
        const double coef = in.alpha * in.widths[static_cast<std::size_t>(l) + 1] *
                            in.box_limits[static_cast<std::size_t>(l) - 1] / 20.0;
        if (coef > 0.0 && g_l >= 1.0 / coef)
            parts.violations.push_back("stepsize condition gamma_" + std::to_string(l) +
                                       " < 20/(alpha d_" + std::to_string(l + 1) +
                                       " w_m) violated");
        e_m_gamma = std::min(e_m_gamma, g_l - coef * g_l * g_l);
    }
    parts.e_m_gamma = e_m_gamma;
    return parts;
}

void fill_multilayer_constants(BoundReport& report, const MultiLayerParts& parts) {
    for (std::size_t l = 0; l < parts.e_m.size(); ++l)
        report.constants["e_m_" + std::to_string(l + 1)] = parts.e_m[l];
    report.constants["e_m_gamma"] = parts.e_m_gamma;
}

}  // namespace

BoundReport bound_multilayer(const BoundInputs& in) {
    require_widths(in, 3);
    if (in.alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
    const int L = static_cast<int>(in.widths.size()) - 1;
    BoundReport report;
    const MultiLayerParts parts = multilayer_parts(in);
    fill_multilayer_constants(report, parts);
    report.violated_preconditions = parts.violations;
    if (!report.feasible()) return report;

    double hidden_sum = 0.0;
    for (int l = 1; l <= L - 1; ++l) hidden_sum += parts.e_m[static_cast<std::size_t>(l) - 1];
    report.bound_value =
        (in.objective_gap / static_cast<double>(in.iterations) +
         (parts.e_m[static_cast<std::size_t>(L) - 1] + in.alpha * hidden_sum) / in.batch_size) /
        parts.e_m_gamma;
    return report;
}

BoundReport bound_pretrain_dropout(const BoundInputs& in) {
    require_widths(in, 3);
    if (!(in.keep_prob > 0.0 && in.keep_prob <= 1.0))
        throw std::invalid_argument("zeta must lie in (0,1]");
    if (in.alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
    const int L = static_cast<int>(in.widths.size()) - 1;
    BoundReport report;
    const MultiLayerParts parts = multilayer_parts(in);
    fill_multilayer_constants(report, parts);
    report.violated_preconditions = parts.violations;
    if (!report.feasible()) return report;

    const double zeta = in.keep_prob;
    double tail = 0.0;
    for (int l = 1; l <= L - 2; ++l) tail += parts.e_m[static_cast<std::size_t>(l) - 1];
    report.bound_value =
        in.objective_gap /
            (static_cast<double>(in.iterations) * parts.e_m_gamma * zeta * zeta) +
        (parts.e_m[static_cast<std::size_t>(L) - 1] / zeta +
         in.alpha * parts.e_m[static_cast<std::size_t>(L) - 2] + in.alpha * zeta * tail) /
            (parts.e_m_gamma * in.batch_size);
    return report;
}

LipschitzEstimate estimate_lipschitz(const std::function<Matrix(const Matrix&)>& gradient,
                                     const std::function<Matrix(Rng&)>& sampler, int pairs,
                                     Rng& rng) {
    if (pairs < 1) throw std::invalid_argument("need at least one weight pair");
    LipschitzEstimate est;
    int drawn = 0;
    while (drawn < pairs) {
        const Matrix a = sampler(rng);
        const Matrix b = sampler(rng);
        const double denom = (a - b).norm();
        if (denom < 1e-12) continue;  // coincident pair, resample
        ++drawn;
        const double ratio = (gradient(a) - gradient(b)).norm() / denom;
        est.value = std::max(est.value, ratio);
    }
    est.pairs = pairs;
    return est;
}

LipschitzEstimate estimate_lipschitz_da(int d_x, int d_h, double box_limit, const Dataset& eval,
                                        int pairs, Rng& rng) {
    if (box_limit <= 0.0) throw std::invalid_argument("box limit must be > 0");
    const auto gradient = [&](const Matrix& w) {
        WeightMatrix wm{w, box_limit};
        return evaluate_autoencoder(wm, eval, 1.0).gradients[0];
    };
    const auto sampler = [d_x, d_h, box_limit](Rng& r) {
        Matrix w(d_h, d_x);
        for (int i = 0; i < d_h; ++i)
            for (int j = 0; j < d_x; ++j) w(i, j) = uniform_range(r, -box_limit, box_limit);
        return w;
    };
    return estimate_lipschitz(gradient, sampler, pairs, rng);
}

BoundReport evaluate_bound(BoundFormula formula, const BoundInputs& in) {
    switch (formula) {
        case BoundFormula::SingleConst: return bound_1nn_const(in);
        case BoundFormula::SingleDecreasing: return bound_1nn_decreasing(in);
        case BoundFormula::Autoencoder: return bound_da(in);
        case BoundFormula::MultiLayer: return bound_multilayer(in);
        case BoundFormula::PretrainDropout: return bound_pretrain_dropout(in);
    }
    throw std::invalid_argument("unknown bound formula");
}

double stepsize_cap(BoundFormula formula, const BoundInputs& in) {
    switch (formula) {
        case BoundFormula::SingleConst:
        case BoundFormula::SingleDecreasing:
            return 16.0 / 13.0;
        case BoundFormula::Autoencoder:
            return in.lipschitz > 0.0 ? 2.0 / in.lipschitz : 16.0 / 13.0;
        case BoundFormula::MultiLayer:
        case BoundFormula::PretrainDropout: {
            double cap = 16.0 / 13.0;
            const int L = static_cast<int>(in.widths.size()) - 1;
            for (int l = 1; l <= L - 1 && static_cast<std::size_t>(l) <= in.box_limits.size();
                 ++l) {
                const double coef = in.alpha * in.widths[static_cast<std::size_t>(l) + 1] *
                                    in.box_limits[static_cast<std::size_t>(l) - 1];
                if (coef > 0.0) cap = std::min(cap, 20.0 / coef);
            }
            return cap;
        }
    }
    throw std::invalid_argument("unknown bound formula");
}

namespace {

bool has_free(const PlanRequest& req, const std::string& name) {
    return std::find(req.free.begin(), req.free.end(), name) != req.free.end();
}

}  // namespace

PlanResult plan_hyperparameters(const PlanRequest& request) {
    if (request.free.empty()) throw std::invalid_argument("plan needs at least one free variable");
    for (const auto& f : request.free)
        if (f != "N" && f != "B" && f != "gamma" && f != "zeta")
            throw std::invalid_argument("unknown free variable: " + f);

    std::vector<long long> n_grid = request.n_grid;
    if (n_grid.empty()) n_grid = {100, 464, 2154, 10000, 46416, 215443, 1000000};
    std::vector<int> b_grid = request.b_grid;
    if (b_grid.empty()) b_grid = {1, 10, 50, 100, 500};
    std::vector<double> zeta_grid = request.zeta_grid;
    if (zeta_grid.empty())
        zeta_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};

    if (!has_free(request, "N")) n_grid = {request.base.iterations};
    if (!has_free(request, "B")) b_grid = {request.base.batch_size};
    if (!has_free(request, "zeta")) zeta_grid = {request.base.keep_prob};

    std::vector<double> gamma_grid;
    if (has_free(request, "gamma")) {
        const double cap = stepsize_cap(request.formula, request.base);
        const double hi = cap * (1.0 - 1e-9);
        const double lo = cap / 1000.0;
        const int points = std::max(2, request.gamma_points);
        for (int i = 0; i < points; ++i)
            gamma_grid.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1)));
    } else {
        gamma_grid = {request.base.gamma};
    }

    PlanResult result;
    const PlanPoint* best_feasible = nullptr;
    const PlanPoint* best_overall = nullptr;
    for (long long n : n_grid)
        for (int b : b_grid)
            for (double z : zeta_grid)
                for (double g : gamma_grid) {
                    BoundInputs in = request.base;
                    in.iterations = n;
                    in.batch_size = b;
                    in.keep_prob = z;
                    in.gamma = g;
                    in.layer_gammas.clear();
                    result.grid.push_back({in, evaluate_bound(request.formula, in)});
                }

    // Among points meeting the target: cheapest N, then B, then lowest bound.
    const auto better_feasible = [](const PlanPoint& a, const PlanPoint& b) {
        if (a.inputs.iterations != b.inputs.iterations)
            return a.inputs.iterations < b.inputs.iterations;
        if (a.inputs.batch_size != b.inputs.batch_size)
            return a.inputs.batch_size < b.inputs.batch_size;
        return a.report.bound_value < b.report.bound_value;
    };
    for (const auto& point : result.grid) {
        if (!point.report.feasible()) continue;
        if (!best_overall || point.report.bound_value < best_overall->report.bound_value)
            best_overall = &point;
        if (point.report.bound_value <= request.target_bound)
            if (!best_feasible || better_feasible(point, *best_feasible)) best_feasible = &point;
    }
    if (best_feasible) {
        result.target_met = true;
        result.recommended = *best_feasible;
    } else if (best_overall) {
        result.target_met = false;
        result.recommended = *best_overall;  // nearest achievable
    } else if (!result.grid.empty()) {
        result.recommended = result.grid.front();
    }
    return result;
}

}  // namespace rsgnet
