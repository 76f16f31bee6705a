#ifndef EVMC_DIRICHLET_HPP
#define EVMC_DIRICHLET_HPP

#include <cstddef>
#include <vector>

namespace evmc {

/// Dirichlet concentration parameters interpreted as model evidences.
/// Every component is >= 1 (the network head clamps below at 1) and the
/// number of models J is at least 2.
struct EvidenceVector {
    std::vector<double> alpha;

    EvidenceVector() = default;
    explicit EvidenceVector(std::vector<double> a);

    std::size_t models() const { return alpha.size(); }
    double strength() const; // alpha_0 = sum of components

    /// Throws std::invalid_argument if any invariant is violated.
    static void validate(const std::vector<double>& alpha);
};

/// Posterior model probabilities together with the epistemic uncertainty
/// (vacuity) u = J / alpha_0 of the evidence vector they came from.
struct ModelPosterior {
    std::vector<double> probs;
    double uncertainty = 1.0;
};

/// Mean of Dir(alpha): alpha / alpha_0.
std::vector<double> mean_probabilities(const EvidenceVector& ev);

/// Epistemic uncertainty u = J / alpha_0, in (0, 1]. Equals 1 iff alpha
/// is the all-ones vector.
double uncertainty_score(const EvidenceVector& ev);

ModelPosterior to_posterior(const EvidenceVector& ev);

/// Replace the true model's evidence by 1, keep the rest:
/// alpha~ = m + (1 - m) * alpha for a one-hot m.
EvidenceVector truth_masked_evidence(const EvidenceVector& ev,
                                     const std::vector<double>& one_hot);

/// KL[ Dir(alpha~) || Dir(1) ], the ground-truth preserving regularizer.
/// Non-negative; zero iff alpha~ is the all-ones vector.
double kl_to_uniform(const EvidenceVector& alpha_tilde);

/// Analytic gradient of kl_to_uniform with respect to each component.
std::vector<double> kl_to_uniform_grad(const EvidenceVector& alpha_tilde);

/// Log density of Dir(pi | alpha) for pi on the open simplex.
double dirichlet_log_pdf(const std::vector<double>& pi, const EvidenceVector& ev);

/// log BF_jk derived from posterior probabilities and the model prior:
/// log(p_j / p_k) - log(prior_j / prior_k).
double log_bayes_factor(const ModelPosterior& posterior, std::size_t j, std::size_t k,
                        const std::vector<double>& model_prior);

} // namespace evmc

#endif
