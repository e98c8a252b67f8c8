// Discrete-observation hidden Markov models: scaled forward-backward
// smoothing, normalised Baum-Welch re-estimation, log-domain Viterbi decoding
// and forward simulation.
//
// States and symbols are zero-based. The model is (nu, Q, G): initial
// distribution, r x r hidden transition matrix and r x m emission matrix.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "wlhmm/observation.hpp"
#include "wlhmm/random.hpp"

namespace wlhmm {

class HmmError : public std::runtime_error {
public:
    enum class Kind { InvalidModel, ImpossibleObservation, SymbolOutOfRange, SequenceTooShort, InvalidArgument };

    HmmError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

template <typename Scalar>
struct BasicHmm {
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    Vector nu;
    Matrix Q;
    Matrix G;

    Eigen::Index states() const { return Q.rows(); }
    Eigen::Index symbols() const { return G.cols(); }

    /// Throws InvalidModel unless shapes agree and nu, Q, G are stochastic within `tol`.
    void check(Scalar tol = Scalar(1e-9)) const
    {
        const auto r = Q.rows();
        if (r < 1 || Q.cols() != r || nu.size() != r || G.rows() != r || G.cols() < 1)
            throw HmmError(HmmError::Kind::InvalidModel, "inconsistent HMM dimensions");
        auto bad = [tol](const auto& x) {
            return (x.array() < Scalar(0)).any() || (x.array() > Scalar(1)).any() || !x.allFinite() ||
                   std::abs(x.sum() - Scalar(1)) > tol;
        };
        if (bad(nu))
            throw HmmError(HmmError::Kind::InvalidModel, "initial distribution is not a probability vector");
        for (Eigen::Index i = 0; i < r; ++i) {
            if (bad(Q.row(i)))
                throw HmmError(HmmError::Kind::InvalidModel, "Q row " + std::to_string(i) + " is not stochastic");
            if (bad(G.row(i)))
                throw HmmError(HmmError::Kind::InvalidModel, "G row " + std::to_string(i) + " is not stochastic");
        }
    }

    template <typename Other>
    BasicHmm<Other> cast() const
    {
        return {nu.template cast<Other>(), Q.template cast<Other>(), G.template cast<Other>()};
    }
};

using Hmm = BasicHmm<double>;

/// Posterior state marginals and pairwise marginals given a full observation sequence.
template <typename Scalar>
struct SmoothingCache {
    using Vector = typename BasicHmm<Scalar>::Vector;
    using Matrix = typename BasicHmm<Scalar>::Matrix;

    Scalar log_likelihood = 0;
    Matrix phi;                   // (n+1) x r, row k = P(C_k = . | S_0^n)
    std::vector<Matrix> phi_pair; // n slices, slice k = P(C_k = ., C_{k+1} = . | S_0^n)
    Vector scale;                 // per-step normalisers, log_likelihood = sum(log(scale))
};

struct ViterbiPath {
    std::vector<int> states;
    double max_log_posterior = 0;
};

struct SimulatedSequence {
    std::vector<int> states;
    ObservationSequence observations;
};

struct BaumWelchOptions {
    double tol = 1e-6;
    int max_iter = 500;
    int restarts = 5;
    std::uint64_t seed = 0;
};

template <typename Scalar>
struct BaumWelchResult {
    BasicHmm<Scalar> model;
    int iterations = 0;  // M-steps applied to the returned model
    bool converged = false;
    std::vector<Scalar> log_likelihood;  // one entry per visited parameter set
    std::vector<int> degenerate_states;
};

namespace detail {

template <typename Scalar>
void check_inputs(const BasicHmm<Scalar>& hmm, const ObservationSequence& obs)
{
    hmm.check();
    if (obs.empty())
        throw HmmError(HmmError::Kind::SequenceTooShort, "observation sequence is empty");
    if (obs.m != hmm.symbols())
        throw HmmError(HmmError::Kind::SymbolOutOfRange, "alphabet size differs from the model's");
    for (int s : obs.obs)
        if (s < 0 || s >= obs.m)
            throw HmmError(HmmError::Kind::SymbolOutOfRange, "observation symbol outside alphabet");
}

[[noreturn]] inline void impossible(std::size_t k)
{
    throw HmmError(HmmError::Kind::ImpossibleObservation,
                   "observation at index " + std::to_string(k) + " has zero probability under the model");
}

/// Scaled forward pass. Column k of `alpha` holds P(C_k = . | S_0^k); scale(k) = P(S_k | S_0^{k-1}).
template <typename Scalar>
void forward(const BasicHmm<Scalar>& hmm, const ObservationSequence& obs,
             typename BasicHmm<Scalar>::Matrix& alpha, typename BasicHmm<Scalar>::Vector& scale)
{
    const auto r = hmm.states();
    const auto len = static_cast<Eigen::Index>(obs.size());
    alpha.resize(r, len);
    scale.resize(len);

    alpha.col(0) = hmm.nu.cwiseProduct(hmm.G.col(obs[0]));
    for (Eigen::Index k = 0; k < len; ++k) {
        if (k > 0) {
            alpha.col(k).noalias() = hmm.Q.transpose() * alpha.col(k - 1);
            alpha.col(k).array() *= hmm.G.col(obs[static_cast<std::size_t>(k)]).array();
        }
        const Scalar c = alpha.col(k).sum();
        if (!(c > Scalar(0)))
            impossible(static_cast<std::size_t>(k));
        scale(k) = c;
        alpha.col(k) /= c;
    }
}

/// Expected sufficient statistics of one E-step.
template <typename Scalar>
struct Expectations {
    using Vector = typename BasicHmm<Scalar>::Vector;
    using Matrix = typename BasicHmm<Scalar>::Matrix;

    Scalar log_likelihood = 0;
    Vector first;      // phi_{0|n}
    Matrix transition; // sum_k phi_{k:k+1|n}
    Matrix emission;   // r x m, sum_k delta(s_k, s) phi_{k|n}
    Vector occupancy;  // sum_{k<=n} phi_{k|n}
};

template <typename Scalar>
Expectations<Scalar> expectations(const BasicHmm<Scalar>& hmm, const ObservationSequence& obs,
                                  typename BasicHmm<Scalar>::Matrix& alpha)
{
    using Vector = typename BasicHmm<Scalar>::Vector;
    using Matrix = typename BasicHmm<Scalar>::Matrix;

    const auto r = hmm.states();
    Vector scale;
    forward(hmm, obs, alpha, scale);

    Expectations<Scalar> e;
    e.log_likelihood = scale.array().log().sum();
    e.transition = Matrix::Zero(r, r);
    e.emission = Matrix::Zero(r, hmm.symbols());
    e.occupancy = Vector::Zero(r);

    const auto n = static_cast<Eigen::Index>(obs.size()) - 1;
    Vector beta = Vector::Ones(r);
    Vector weighted(r);
    Vector phi(r);
    for (Eigen::Index k = n; k >= 0; --k) {
        phi = alpha.col(k).cwiseProduct(beta);
        e.emission.col(obs[static_cast<std::size_t>(k)]) += phi;
        e.occupancy += phi;
        if (k == 0)
            break;
        // weighted(j) = g_j(s_k) beta_k(j) / c_k
        weighted = hmm.G.col(obs[static_cast<std::size_t>(k)]).cwiseProduct(beta) / scale(k);
        e.transition.noalias() += (alpha.col(k - 1) * weighted.transpose()).cwiseProduct(hmm.Q);
        beta.noalias() = hmm.Q * weighted;
    }
    e.first = phi;
    return e;
}

template <typename Scalar>
void normalise_row_or_uniform(auto&& row, Scalar mass)
{
    if (mass < Scalar(1e-12))
        row.setConstant(Scalar(1) / static_cast<Scalar>(row.size()));
    else
        row /= row.sum();
}

}  // namespace detail

/// log P(S_0^n = s_0^n) by the scaled forward recursion.
template <typename Scalar>
Scalar log_likelihood(const BasicHmm<Scalar>& hmm, const ObservationSequence& obs)
{
    detail::check_inputs(hmm, obs);
    typename BasicHmm<Scalar>::Matrix alpha;
    typename BasicHmm<Scalar>::Vector scale;
    detail::forward(hmm, obs, alpha, scale);
    return scale.array().log().sum();
}

template <typename Scalar>
SmoothingCache<Scalar> forward_backward(const BasicHmm<Scalar>& hmm, const ObservationSequence& obs)
{
    using Vector = typename BasicHmm<Scalar>::Vector;
    using Matrix = typename BasicHmm<Scalar>::Matrix;
    detail::check_inputs(hmm, obs);

    const auto r = hmm.states();
    const auto len = static_cast<Eigen::Index>(obs.size());
    SmoothingCache<Scalar> cache;
    Matrix alpha;
    detail::forward(hmm, obs, alpha, cache.scale);
    cache.log_likelihood = cache.scale.array().log().sum();

    cache.phi.resize(len, r);
    cache.phi_pair.resize(static_cast<std::size_t>(len - 1));
    Vector beta = Vector::Ones(r);
    Vector weighted(r);
    for (Eigen::Index k = len - 1; k >= 0; --k) {
        cache.phi.row(k) = alpha.col(k).cwiseProduct(beta).transpose();
        if (k == 0)
            break;
        weighted = hmm.G.col(obs[static_cast<std::size_t>(k)]).cwiseProduct(beta) / cache.scale(k);
        cache.phi_pair[static_cast<std::size_t>(k - 1)] = (alpha.col(k - 1) * weighted.transpose()).cwiseProduct(hmm.Q);
        beta = hmm.Q * weighted;
    }
    return cache;
}

/// One application of the re-estimation formulas. States whose total posterior
/// mass falls below 1e-12 get uniform rows and are appended to `degenerate`.
template <typename Scalar>
BasicHmm<Scalar> reestimate(const detail::Expectations<Scalar>& e, std::vector<int>* degenerate = nullptr)
{
    BasicHmm<Scalar> next;
    next.nu = e.first / e.first.sum();
    next.Q = e.transition;
    next.G = e.emission;
    for (Eigen::Index j = 0; j < next.Q.rows(); ++j) {
        if (e.occupancy(j) < Scalar(1e-12) && degenerate)
            degenerate->push_back(static_cast<int>(j));
        detail::normalise_row_or_uniform(next.Q.row(j), e.transition.row(j).sum());
        detail::normalise_row_or_uniform(next.G.row(j), e.occupancy(j));
    }
    return next;
}

/// Single Baum-Welch step: the re-estimated model for `hmm` on `obs`.
template <typename Scalar>
BasicHmm<Scalar> baum_welch_step(const BasicHmm<Scalar>& hmm, const ObservationSequence& obs)
{
    detail::check_inputs(hmm, obs);
    typename BasicHmm<Scalar>::Matrix alpha;
    return reestimate(detail::expectations(hmm, obs, alpha));
}

/// Baum-Welch from a given starting model. Stops when successive
/// log-likelihoods differ by less than `opts.tol` or after `opts.max_iter` M-steps.
template <typename Scalar>
BaumWelchResult<Scalar> baum_welch(const ObservationSequence& obs, const BasicHmm<Scalar>& init,
                                   const BaumWelchOptions& opts)
{
    detail::check_inputs(init, obs);
    if (obs.size() < 2)
        throw HmmError(HmmError::Kind::SequenceTooShort, "Baum-Welch needs at least two observations");
    if (!(opts.tol > 0) || opts.max_iter < 0)
        throw HmmError(HmmError::Kind::InvalidArgument, "tolerance must be positive");

    BaumWelchResult<Scalar> result;
    result.model = init;
    typename BasicHmm<Scalar>::Matrix alpha;
    for (;;) {
        auto e = detail::expectations(result.model, obs, alpha);
        result.log_likelihood.push_back(e.log_likelihood);
        const auto t = result.log_likelihood.size();
        if (t > 1 && std::abs(result.log_likelihood[t - 1] - result.log_likelihood[t - 2]) < Scalar(opts.tol)) {
            result.converged = true;
            break;
        }
        if (result.iterations >= opts.max_iter)
            break;
        std::vector<int> degenerate;
        result.model = reestimate(e, &degenerate);
        ++result.iterations;
        for (int j : degenerate)
            if (std::find(result.degenerate_states.begin(), result.degenerate_states.end(), j) ==
                result.degenerate_states.end())
                result.degenerate_states.push_back(j);
    }
    return result;
}

/// Default starting point: uniform nu, sticky Q (0.9 on the diagonal), Dirichlet(1,...,1) emission rows.
template <typename Scalar = double>
BasicHmm<Scalar> default_initial_model(int r, int m, std::uint64_t seed)
{
    if (r < 1 || m < 1)
        throw HmmError(HmmError::Kind::InvalidArgument, "state and symbol counts must be positive");
    BasicHmm<Scalar> hmm;
    hmm.nu = BasicHmm<Scalar>::Vector::Constant(r, Scalar(1) / Scalar(r));
    if (r == 1) {
        hmm.Q = BasicHmm<Scalar>::Matrix::Ones(1, 1);
    } else {
        hmm.Q = BasicHmm<Scalar>::Matrix::Constant(r, r, Scalar(0.1) / Scalar(r - 1));
        hmm.Q.diagonal().setConstant(Scalar(0.9));
    }
    auto rng = make_rng(seed);
    std::exponential_distribution<double> gamma1(1.0);  // Gamma(1) draws normalise to Dirichlet(1)
    hmm.G.resize(r, m);
    for (int i = 0; i < r; ++i) {
        for (int s = 0; s < m; ++s)
            hmm.G(i, s) = static_cast<Scalar>(gamma1(rng));
        hmm.G.row(i) /= hmm.G.row(i).sum();
    }
    return hmm;
}

/// Baum-Welch with `opts.restarts` default initialisations; keeps the best final likelihood.
template <typename Scalar = double>
BaumWelchResult<Scalar> baum_welch(const ObservationSequence& obs, int r, const BaumWelchOptions& opts)
{
    if (r < 1)
        throw HmmError(HmmError::Kind::InvalidArgument, "state count must be positive");
    BaumWelchResult<Scalar> best;
    bool have = false;
    for (int i = 0; i < std::max(1, opts.restarts); ++i) {
        auto init = default_initial_model<Scalar>(r, obs.m, derive_seed(opts.seed, static_cast<std::uint64_t>(i)));
        auto fit = baum_welch(obs, init, opts);
        if (!have || fit.log_likelihood.back() > best.log_likelihood.back()) {
            best = std::move(fit);
            have = true;
        }
    }
    return best;
}

/// Most probable hidden path. Log-domain recursion
/// m_{k+1}(j) = max_i (m_k(i) + log q_ij) + log g_j(s_{k+1}); ties go to the lowest state id.
template <typename Scalar>
ViterbiPath viterbi(const BasicHmm<Scalar>& hmm, const ObservationSequence& obs)
{
    using Matrix = typename BasicHmm<Scalar>::Matrix;
    using Vector = typename BasicHmm<Scalar>::Vector;
    detail::check_inputs(hmm, obs);

    const auto r = hmm.states();
    const auto len = obs.size();
    const Matrix logQ = hmm.Q.array().log().matrix();
    const Matrix logG = hmm.G.array().log().matrix();
    constexpr Scalar neg_inf = -std::numeric_limits<Scalar>::infinity();

    Vector score = hmm.nu.array().log().matrix() + logG.col(obs[0]);
    Vector next(r);
    std::vector<int> back(len * static_cast<std::size_t>(r), 0);
    for (std::size_t k = 1; k < len; ++k) {
        for (Eigen::Index j = 0; j < r; ++j) {
            Scalar best = neg_inf;
            int arg = 0;
            for (Eigen::Index i = 0; i < r; ++i) {
                const Scalar cand = score(i) + logQ(i, j);
                if (cand > best) {
                    best = cand;
                    arg = static_cast<int>(i);
                }
            }
            next(j) = best + logG(j, obs[k]);
            back[k * static_cast<std::size_t>(r) + static_cast<std::size_t>(j)] = arg;
        }
        std::swap(score, next);
    }

    Eigen::Index last = 0;
    for (Eigen::Index j = 1; j < r; ++j)
        if (score(j) > score(last))
            last = j;
    if (score(last) == neg_inf)
        throw HmmError(HmmError::Kind::ImpossibleObservation, "no hidden path has positive probability");

    ViterbiPath path;
    path.max_log_posterior = static_cast<double>(score(last));
    path.states.resize(len);
    path.states[len - 1] = static_cast<int>(last);
    for (std::size_t k = len - 1; k > 0; --k)
        path.states[k - 1] = back[k * static_cast<std::size_t>(r) + static_cast<std::size_t>(path.states[k])];
    return path;
}

/// log J(c, s): joint log-probability of a hidden path and the observations.
template <typename Scalar>
Scalar joint_log_probability(const BasicHmm<Scalar>& hmm, std::span<const int> states, const ObservationSequence& obs)
{
    if (states.size() != obs.size() || states.empty())
        throw HmmError(HmmError::Kind::InvalidArgument, "path and observation lengths differ");
    Scalar lp = std::log(hmm.nu(states[0])) + std::log(hmm.G(states[0], obs[0]));
    for (std::size_t k = 1; k < states.size(); ++k)
        lp += std::log(hmm.Q(states[k - 1], states[k])) + std::log(hmm.G(states[k], obs[k]));
    return lp;
}

/// Draws C_0 ~ nu, C_t ~ Q(C_{t-1}, .), S_t ~ G(C_t, .).
template <typename Scalar>
SimulatedSequence simulate(const BasicHmm<Scalar>& hmm, std::size_t length, std::uint64_t seed)
{
    hmm.check();
    if (length < 1)
        throw HmmError(HmmError::Kind::InvalidArgument, "simulation length must be at least 1");
    auto row_dist = [](const auto& row) {
        std::vector<double> w(static_cast<std::size_t>(row.size()));
        for (Eigen::Index i = 0; i < row.size(); ++i)
            w[static_cast<std::size_t>(i)] = static_cast<double>(row(i));
        return std::discrete_distribution<int>(w.begin(), w.end());
    };
    const auto r = hmm.states();
    auto initial = row_dist(hmm.nu);
    std::vector<std::discrete_distribution<int>> transition, emission;
    for (Eigen::Index i = 0; i < r; ++i) {
        transition.push_back(row_dist(hmm.Q.row(i)));
        emission.push_back(row_dist(hmm.G.row(i)));
    }

    auto rng = make_rng(seed);
    SimulatedSequence out;
    out.states.resize(length);
    out.observations.m = static_cast<int>(hmm.symbols());
    out.observations.obs.resize(length);
    int c = initial(rng);
    for (std::size_t t = 0; t < length; ++t) {
        if (t > 0)
            c = transition[static_cast<std::size_t>(c)](rng);
        out.states[t] = c;
        out.observations.obs[t] = emission[static_cast<std::size_t>(c)](rng);
    }
    return out;
}

/// State pairs whose emission rows are within L1 distance `g_l1` and whose
/// transitions are near-identical or oscillate between the two.
template <typename Scalar>
std::vector<std::pair<int, int>> near_duplicate_states(const BasicHmm<Scalar>& hmm, Scalar g_l1 = Scalar(0.05))
{
    std::vector<std::pair<int, int>> pairs;
    for (Eigen::Index i = 0; i < hmm.states(); ++i)
        for (Eigen::Index j = i + 1; j < hmm.states(); ++j) {
            const Scalar dg = (hmm.G.row(i) - hmm.G.row(j)).cwiseAbs().sum();
            const Scalar dq = (hmm.Q.row(i) - hmm.Q.row(j)).cwiseAbs().sum();
            const bool oscillate = hmm.Q(i, j) > Scalar(0.5) && hmm.Q(j, i) > Scalar(0.5);
            if (dg < g_l1 && (dq < g_l1 || oscillate))
                pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
        }
    return pairs;
}

struct SweepEntry {
    int states = 0;
    double log_likelihood = 0;
    double per_symbol = 0;
    int iterations = 0;
    std::vector<std::pair<int, int>> near_duplicates;
    Hmm model;
};

/// Fits each candidate state count and reports likelihoods and near-duplicate states.
inline std::vector<SweepEntry> sweep_states(const ObservationSequence& obs, std::span<const int> candidates,
                                            const BaumWelchOptions& opts)
{
    std::vector<SweepEntry> out;
    for (int r : candidates) {
        auto fit = baum_welch<double>(obs, r, opts);
        SweepEntry e;
        e.states = r;
        e.log_likelihood = fit.log_likelihood.back();
        e.per_symbol = e.log_likelihood / static_cast<double>(obs.size());
        e.iterations = fit.iterations;
        e.near_duplicates = near_duplicate_states(fit.model);
        e.model = std::move(fit.model);
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace wlhmm
