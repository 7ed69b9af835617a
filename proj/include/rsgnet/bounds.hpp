#pragma once

#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "rsgnet/data.hpp"
#include "rsgnet/networks.hpp"
#include "rsgnet/rng.hpp"

namespace rsgnet {

/// Everything the closed-form bounds consume. Fields not used by a given
/// formula are ignored by it.
struct BoundInputs {
    std::vector<int> widths;  // d_0..d_L
    int batch_size = 1;       // B
    long long iterations = 1; // N
    double gamma = 0.1;
    std::vector<double> layer_gammas;  // per-layer override for multi-layer formulas
    double rho = 0.0;
    double objective_gap = 1.0;     // D_f, defaulting to f(W^1) when measured
    std::vector<double> box_limits; // w_m per hidden layer (index l-1); [w_m] for the DA
    double keep_prob = 1.0;         // zeta
    double alpha = 0.0;
    double lipschitz = 0.0;         // U_da for the DA bound
    int runs = 1;                   // T
    double epsilon = 0.1;
    double delta = 0.1;
    DataMoments moments;

    double gamma_for(int layer) const;
};

struct BoundReport {
    std::map<std::string, double> constants;
    double bound_value = std::numeric_limits<double>::infinity();
    double optimal_gamma = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::string> violated_preconditions;

    bool feasible() const { return violated_preconditions.empty(); }
};

/// Generalized harmonic number H_N(theta) = sum_{i=1..N} i^-theta, accumulated
/// smallest-terms-first.
double harmonic(long long n, double theta);

/// Single-layer gradient-variance constant 13 d_x d_y / 256.
double const_e_s(int d_x, int d_y);

/// Constant-stepsize single-layer bound (1/e^s_gamma)(D_f/(N gamma) + e^s gamma/B).
BoundReport bound_1nn_const(const BoundInputs& in);

/// Closed-form stepsize sqrt(B f(W^1) / (e^s N)) balancing the two bound terms.
double optimal_gamma_1nn(int batch_size, double f_w1, int d_x, int d_y, long long n);

/// Decreasing-stepsize single-layer bound with the stepsize-coupled stopping pmf.
BoundReport bound_1nn_decreasing(const BoundInputs& in);

struct IterationComplexity {
    long long iterations = 0;  // N(epsilon, delta)
    double delta_bar = 0.0;
};

/// Iterations needed for an (epsilon,delta)-solution over T runs.
IterationComplexity iteration_complexity_1nn(double epsilon, double delta, int runs,
                                             int batch_size, double f_w1, int d_x, int d_y);

/// Sample size from the S*C ~ B*N budget identity.
long long sample_size_from_iterations(long long n, int batch_size, long long epochs);

/// DA gradient-variance constant; moments enter scaled by zeta d_x w_m.
double const_e_da(int d_x, int d_h, double zeta, double w_m, const DataMoments& moments);

/// Box-constrained DA bound D_f/(N gamma e^da_gamma) + (e^da/B)(1 + 1/e^da_gamma),
/// valid for gamma < 2/U_da; reports the closed-form optimal stepsize too.
BoundReport bound_da(const BoundInputs& in);

/// Per-layer multi-layer constants e^m_1..e^m_L.
std::vector<double> const_e_m(const std::vector<int>& widths, const std::vector<double>& gammas,
                              const std::vector<double>& box_limits);

/// Pretrained multi-layer bound (hidden layers at an (alpha, delta_alpha) solution).
BoundReport bound_multilayer(const BoundInputs& in);

/// Multi-layer bound with input+hidden dropout at rate zeta; reduces to the
/// pretrained bound at zeta = 1.
BoundReport bound_pretrain_dropout(const BoundInputs& in);

struct LipschitzEstimate {
    double value = 0.0;
    int pairs = 0;
};

/// Max of |g(Wa)-g(Wb)| / |Wa-Wb| over sampled weight pairs; a lower estimate
/// of the true Lipschitz constant of the gradient field.
LipschitzEstimate estimate_lipschitz(const std::function<Matrix(const Matrix&)>& gradient,
                                     const std::function<Matrix(Rng&)>& sampler, int pairs,
                                     Rng& rng);

/// Lipschitz estimate for the evaluation-set DA gradient over the weight box.
LipschitzEstimate estimate_lipschitz_da(int d_x, int d_h, double box_limit, const Dataset& eval,
                                        int pairs, Rng& rng);

enum class BoundFormula { SingleConst, SingleDecreasing, Autoencoder, MultiLayer, PretrainDropout };

BoundReport evaluate_bound(BoundFormula formula, const BoundInputs& in);

/// Largest admissible stepsize for a formula (the hard precondition cap).
double stepsize_cap(BoundFormula formula, const BoundInputs& in);

struct PlanRequest {
    BoundFormula formula = BoundFormula::SingleConst;
    BoundInputs base;
    double target_bound = std::numeric_limits<double>::infinity();
    std::vector<std::string> free;  // subset of {"N","B","gamma","zeta"}
    std::vector<long long> n_grid;  // defaults to 10^2..10^6, 7 log-spaced points
    std::vector<int> b_grid;        // defaults to {1,10,50,100,500}
    std::vector<double> zeta_grid;  // defaults to {0.1..1.0} step 0.1
    int gamma_points = 20;          // log-spaced under the formula's stepsize cap
};

struct PlanPoint {
    BoundInputs inputs;
    BoundReport report;
};

struct PlanResult {
    bool target_met = false;
    PlanPoint recommended;       // cheapest feasible point meeting the target,
                                 // or the nearest-achievable point otherwise
    std::vector<PlanPoint> grid; // full table in grid order
};

/// Grid search over the free variables with the exact bound formulas. Among
/// points meeting the target, prefers smallest N, then smallest B, then the
/// smallest bound.
PlanResult plan_hyperparameters(const PlanRequest& request);

}  // namespace rsgnet
