#include "photrec/maxent.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>

#include "photrec/errors.hpp"

namespace photrec {

namespace {

using Basis = std::vector<std::vector<double>>; // K rows over n = 0..cutoff

Basis moment_basis(std::size_t cutoff, std::size_t order)
{
    Basis g(order, std::vector<double>(cutoff + 1));
    for (std::size_t n = 0; n <= cutoff; ++n) {
        const double x = static_cast<double>(n);
        g[0][n] = x;
        if (order > 1)
            g[1][n] = x * x;
    }
    return g;
}

Basis povm_basis(std::size_t cutoff, const std::vector<double>& etas)
{
    Basis g(etas.size(), std::vector<double>(cutoff + 1));
    for (std::size_t k = 0; k < etas.size(); ++k) {
        double w = 1.0;
        for (std::size_t n = 0; n <= cutoff; ++n) {
            g[k][n] = w;
            w *= 1.0 - etas[k];
        }
    }
    return g;
}

Basis basis_for(const MaxEntState& state)
{
    if (state.level == ObservationLevel::povm)
        return povm_basis(state.cutoff, state.efficiencies);
    return moment_basis(state.cutoff, state.targets.size());
}

struct Eval {
    double log_z = 0.0;
    std::vector<double> q;
    std::vector<double> mean;
};

// Single pass over the support at fixed multipliers; exponents are shifted
// by their maximum so nothing overflows.
Eval evaluate_basis(const Basis& g, const std::vector<double>& lambda)
{
    const std::size_t K = g.size();
    const std::size_t N = g[0].size();
    std::vector<double> expo(N);
    double shift = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < N; ++n) {
        double e = 0.0;
        for (std::size_t k = 0; k < K; ++k)
            e -= lambda[k] * g[k][n];
        expo[n] = e;
        shift = std::max(shift, e);
    }
    Eval ev;
    ev.q.resize(N);
    double z = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
        ev.q[n] = std::exp(expo[n] - shift);
        z += ev.q[n];
    }
    ev.log_z = shift + std::log(z);
    for (std::size_t n = 0; n < N; ++n)
        ev.q[n] /= z;
    ev.mean.assign(K, 0.0);
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t n = 0; n < N; ++n)
            ev.mean[k] += ev.q[n] * g[k][n];
    return ev;
}

Eigen::MatrixXd covariance(const Basis& g, const Eval& ev)
{
    const std::size_t K = g.size();
    const std::size_t N = g[0].size();
    Eigen::MatrixXd cov(K, K);
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t j = k; j < K; ++j) {
            double m = 0.0;
            for (std::size_t n = 0; n < N; ++n)
                m += ev.q[n] * g[k][n] * g[j][n];
            cov(k, j) = m - ev.mean[k] * ev.mean[j];
            cov(j, k) = cov(k, j);
        }
    }
    return cov;
}

struct NewtonOutcome {
    std::vector<double> lambda;
    Eval ev;
    int iterations = 0;
    bool converged = false;
};

// Damped Newton on the convex dual psi(lambda) = log Z + lambda . targets.
// Its gradient is targets - <g> and its Hessian the constraint covariance,
// so the step is Cov^{-1} (<g> - targets). Near the solution psi changes
// fall below double resolution while the residual still shrinks, hence a
// step is also accepted on residual progress alone. Levenberg damping
// handles the nearly collinear constraint sets of the povm level.
NewtonOutcome newton_solve(const Basis& g, const std::vector<double>& targets,
                           std::vector<double> lambda, double tol, int max_iterations)
{
    const std::size_t K = targets.size();
    auto residual_norm = [&](const Eval& ev) {
        double rn = 0.0;
        for (std::size_t k = 0; k < K; ++k)
            rn = std::max(rn, std::abs(ev.mean[k] - targets[k]));
        return rn;
    };
    auto dual = [&](const Eval& ev, const std::vector<double>& l) {
        double psi = ev.log_z;
        for (std::size_t k = 0; k < K; ++k)
            psi += l[k] * targets[k];
        return psi;
    };

    Eval ev = evaluate_basis(g, lambda);
    double psi = dual(ev, lambda);
    bool converged = false;
    int iter = 0;

    for (; iter < max_iterations; ++iter) {
        const double rn = residual_norm(ev);
        if (rn <= tol) {
            converged = true;
            break;
        }

        Eigen::VectorXd r(K);
        for (std::size_t k = 0; k < K; ++k)
            r(k) = ev.mean[k] - targets[k];
        const Eigen::MatrixXd cov = covariance(g, ev);
        const double scale = std::max(cov.trace() / static_cast<double>(K), 1e-300);

        bool moved = false;
        double damping = 0.0;
        for (int attempt = 0; attempt < 9 && !moved; ++attempt) {
            Eigen::MatrixXd h = cov;
            if (damping > 0.0)
                h.diagonal().array() += damping;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
            if (ldlt.info() == Eigen::Success) {
                const Eigen::VectorXd step = ldlt.solve(r);
                const double slope = -r.dot(step); // directional derivative of psi
                if (step.allFinite() && slope < 0.0) {
                    std::vector<double> cand(K);
                    for (double t = 1.0; t > 1e-14; t *= 0.5) {
                        for (std::size_t k = 0; k < K; ++k)
                            cand[k] = lambda[k] + t * step(k);
                        Eval ec = evaluate_basis(g, cand);
                        const double psic = dual(ec, cand);
                        if (psic <= psi + 1e-4 * t * slope || residual_norm(ec) < rn) {
                            lambda = cand;
                            ev = std::move(ec);
                            psi = psic;
                            moved = true;
                            break;
                        }
                    }
                }
            }
            damping = damping == 0.0 ? scale * 1e-12 : damping * 100.0;
        }
        if (!moved)
            break; // no acceptable step at any damping: stalled
    }

    if (!converged)
        converged = residual_norm(ev) <= tol;

    NewtonOutcome out;
    out.lambda = std::move(lambda);
    out.ev = std::move(ev);
    out.iterations = iter;
    out.converged = converged;
    return out;
}

// Relative mass the family would put on {cutoff+1 .. 2*cutoff+20} if the
// support were extended at fixed multipliers.
double extension_mass(const std::vector<double>& lambda, double log_z, std::size_t cutoff,
                      std::size_t order)
{
    double extra = 0.0;
    for (std::size_t m = cutoff + 1; m <= 2 * cutoff + 20; ++m) {
        const double x = static_cast<double>(m);
        double e = -lambda[0] * x;
        if (order > 1)
            e -= lambda[1] * x * x;
        if (e - log_z > 700.0)
            return 1.0; // divergent extension (negative curvature)
        extra += std::exp(e - log_z);
    }
    if (!std::isfinite(extra))
        return 1.0;
    return extra / (1.0 + extra);
}

MaxEntState snapped_state(ObservationLevel level, std::vector<double> targets,
                          std::vector<double> probs)
{
    MaxEntState st;
    st.level = level;
    st.targets = std::move(targets);
    st.cutoff = probs.size() - 1;
    st.degenerate_snap = true;
    st.snap_probs = std::move(probs);
    st.converged = true;
    const Basis g = moment_basis(st.cutoff, st.targets.size());
    st.residuals.assign(st.targets.size(), 0.0);
    for (std::size_t k = 0; k < st.targets.size(); ++k) {
        double m = 0.0;
        for (std::size_t n = 0; n < st.snap_probs.size(); ++n)
            m += st.snap_probs[n] * g[k][n];
        st.residuals[k] = m - st.targets[k];
    }
    return st;
}

void check_target_domain(double m1, double m2)
{
    if (!std::isfinite(m1) || !std::isfinite(m2) || !(m1 > 0.0) || m2 < 0.0)
        throw std::invalid_argument(
            "moment targets must be finite with mean > 0 and second moment >= 0");
}

// Shared interior solve for the moments level (order 1 or 2), including
// support growth while the family has normalizable tails.
MaxEntState interior_moment_solve(std::vector<double> targets, std::vector<double> lambda,
                                  std::size_t initial_cutoff, const MaxEntOptions& options)
{
    const std::size_t order = targets.size();
    const bool fixed_cutoff = options.cutoff != 0;
    std::size_t cutoff = fixed_cutoff ? options.cutoff : initial_cutoff;

    MaxEntState st;
    st.level = ObservationLevel::moments;
    st.targets = targets;
    int total_iterations = 0;
    NewtonOutcome outcome;

    for (int round = 0;; ++round) {
        const Basis g = moment_basis(cutoff, order);
        outcome = newton_solve(g, targets, lambda, options.residual_tol, options.max_iterations);
        lambda = outcome.lambda;
        total_iterations += outcome.iterations;

        st.tail_bound = extension_mass(lambda, outcome.ev.log_z, cutoff, order);
        // A negative top multiplier is only terminal when the extension
        // actually diverges. Right on the thermal line the truncated fit
        // dips a hair below zero and recovers once the support grows, so
        // the sign alone must not stop the growth.
        st.negative_curvature = lambda[order - 1] < 0.0 && st.tail_bound >= 0.5;
        if (st.negative_curvature || fixed_cutoff)
            break; // cutoff is part of the model here, not an approximation
        if (st.tail_bound <= options.tail_tol || round >= 7)
            break;
        cutoff *= 2; // warm start from the current multipliers
    }

    st.multipliers = lambda;
    st.cutoff = cutoff;
    st.log_partition = outcome.ev.log_z;
    st.iterations = total_iterations;
    st.residuals.resize(order);
    for (std::size_t k = 0; k < order; ++k)
        st.residuals[k] = outcome.ev.mean[k] - targets[k];
    const bool tail_ok =
        st.negative_curvature || fixed_cutoff || st.tail_bound <= options.tail_tol;
    st.converged = outcome.converged && tail_ok;
    return st;
}

} // namespace

PhotonDistribution maxent_distribution(const MaxEntState& state)
{
    if (state.degenerate_snap)
        return PhotonDistribution::from_probabilities(state.snap_probs);
    const Basis g = basis_for(state);
    Eval ev = evaluate_basis(g, state.multipliers);
    return PhotonDistribution::from_probabilities(std::move(ev.q));
}

std::vector<double> constraint_values(const MaxEntState& state)
{
    if (state.degenerate_snap) {
        std::vector<double> vals(state.targets.size());
        const Basis g = moment_basis(state.cutoff, state.targets.size());
        for (std::size_t k = 0; k < vals.size(); ++k) {
            double m = 0.0;
            for (std::size_t n = 0; n < state.snap_probs.size(); ++n)
                m += state.snap_probs[n] * g[k][n];
            vals[k] = m;
        }
        return vals;
    }
    const Basis g = basis_for(state);
    return evaluate_basis(g, state.multipliers).mean;
}

std::vector<std::vector<double>> constraint_jacobian(const MaxEntState& state)
{
    const Basis g = basis_for(state);
    Eval ev;
    if (state.degenerate_snap) {
        ev.q = state.snap_probs;
        ev.mean.assign(g.size(), 0.0);
        for (std::size_t k = 0; k < g.size(); ++k)
            for (std::size_t n = 0; n < ev.q.size(); ++n)
                ev.mean[k] += ev.q[n] * g[k][n];
    } else {
        ev = evaluate_basis(g, state.multipliers);
    }
    const Eigen::MatrixXd cov = covariance(g, ev);
    std::vector<std::vector<double>> jac(g.size(), std::vector<double>(g.size()));
    for (std::size_t k = 0; k < g.size(); ++k)
        for (std::size_t j = 0; j < g.size(); ++j)
            jac[k][j] = -cov(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
    return jac;
}

MaxEntState solve_moments(double mean_photons, double second_moment, const MaxEntOptions& options)
{
    check_target_domain(mean_photons, second_moment);
    const double band = options.boundary_tol * mean_photons;
    const double excess = second_moment - mean_photons * mean_photons; // variance

    if (excess < -band)
        throw UnphysicalMomentsError("second moment " + std::to_string(second_moment)
                                     + " below square of mean " + std::to_string(mean_photons)
                                     + ": no distribution has these moments");

    if (std::abs(excess) <= band) {
        // Zero-variance boundary: only a number state fits, and only if the
        // mean actually is a number.
        const double nearest = std::round(mean_photons);
        if (std::abs(mean_photons - nearest) <= options.fock_snap_tol) {
            const auto n = static_cast<std::size_t>(nearest);
            std::vector<double> probs(n + 1, 0.0);
            probs[n] = 1.0;
            return snapped_state(ObservationLevel::moments,
                                 {mean_photons, second_moment}, std::move(probs));
        }
        throw NearDegenerateError(
            "moments sit on the zero-variance boundary but the mean "
            + std::to_string(mean_photons) + " is not close to an integer");
    }

    if (mean_photons < 1.0) {
        // n^2 >= n pointwise forces m2 >= m1; equality pins the support to
        // {0, 1} and the solution is the unique two-point distribution.
        const double gap = second_moment - mean_photons;
        if (gap < -band)
            throw UnphysicalMomentsError("second moment " + std::to_string(second_moment)
                                         + " below mean " + std::to_string(mean_photons)
                                         + ": no distribution has these moments");
        if (gap <= band)
            return snapped_state(ObservationLevel::moments, {mean_photons, second_moment},
                                 {1.0 - mean_photons, mean_photons});
    }

    const auto initial_cutoff = static_cast<std::size_t>(std::max(
        20.0, std::ceil(mean_photons + 10.0 * std::sqrt(excess + mean_photons))));
    std::vector<double> lambda = {std::log1p(1.0 / mean_photons), 0.0};
    return interior_moment_solve({mean_photons, second_moment}, std::move(lambda), initial_cutoff,
                                 options);
}

MaxEntState solve_single_moment(double mean_photons, const MaxEntOptions& options)
{
    if (!std::isfinite(mean_photons) || mean_photons < 0.0)
        throw std::invalid_argument("mean photon number target must be finite and >= 0");
    if (mean_photons == 0.0)
        return snapped_state(ObservationLevel::moments, {0.0}, {1.0});

    const double variance = mean_photons * (1.0 + mean_photons); // thermal value
    const auto initial_cutoff = static_cast<std::size_t>(
        std::max(20.0, std::ceil(mean_photons + 10.0 * std::sqrt(variance))));
    std::vector<double> lambda = {std::log1p(1.0 / mean_photons)};
    return interior_moment_solve({mean_photons}, std::move(lambda), initial_cutoff, options);
}

MaxEntState solve_povm(std::span<const PovmChannel> channels, const MaxEntOptions& options)
{
    if (channels.empty())
        throw std::invalid_argument("povm solve needs at least one channel");
    std::set<double> etas;
    for (const auto& ch : channels) {
        if (!(ch.off_probability > 0.0) || !(ch.off_probability < 1.0))
            throw std::invalid_argument("off probability must lie strictly in (0, 1), got "
                                        + std::to_string(ch.off_probability));
        if (!etas.insert(ch.eta.value()).second)
            throw std::invalid_argument("povm efficiencies must be pairwise distinct");
    }

    const std::size_t K = channels.size();
    std::vector<double> targets(K), eta_values(K);
    double crude_mean = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        targets[k] = channels[k].off_probability;
        eta_values[k] = channels[k].eta.value();
        crude_mean += (1.0 - targets[k]) / eta_values[k];
    }
    crude_mean /= static_cast<double>(K);

    const std::size_t cutoff =
        options.cutoff != 0
            ? options.cutoff
            : static_cast<std::size_t>(std::max(40.0, std::ceil(4.0 * crude_mean + 20.0)));

    const Basis g = povm_basis(cutoff, eta_values);
    std::vector<double> lambda(K, 0.0);
    NewtonOutcome outcome =
        newton_solve(g, targets, std::move(lambda), options.residual_tol, options.max_iterations);

    MaxEntState st;
    st.level = ObservationLevel::povm;
    st.targets = targets;
    st.efficiencies = eta_values;
    st.multipliers = outcome.lambda;
    st.cutoff = cutoff;
    st.log_partition = outcome.ev.log_z;
    st.iterations = outcome.iterations;
    st.converged = outcome.converged;
    st.residuals.resize(K);
    for (std::size_t k = 0; k < K; ++k)
        st.residuals[k] = outcome.ev.mean[k] - targets[k];
    return st;
}

} // namespace photrec
