#include "evmc/dirichlet.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "evmc/special_functions.hpp"

namespace evmc {

void EvidenceVector::validate(const std::vector<double>& alpha) {
    if (alpha.size() < 2) {
        throw std::invalid_argument("EvidenceVector: need at least 2 models");
    }
    for (std::size_t j = 0; j < alpha.size(); ++j) {
        if (!(alpha[j] >= 1.0) || !std::isfinite(alpha[j])) {
            throw std::invalid_argument("EvidenceVector: component " + std::to_string(j) +
                                        " violates alpha_j >= 1");
        }
    }
}

EvidenceVector::EvidenceVector(std::vector<double> a) : alpha(std::move(a)) {
    validate(alpha);
}

double EvidenceVector::strength() const {
    double s = 0.0;
    for (double a : alpha) s += a;
    return s;
}

std::vector<double> mean_probabilities(const EvidenceVector& ev) {
    EvidenceVector::validate(ev.alpha);
    const double a0 = ev.strength();
    std::vector<double> probs(ev.alpha.size());
    for (std::size_t j = 0; j < probs.size(); ++j) {
        probs[j] = ev.alpha[j] / a0;
    }
    return probs;
}

double uncertainty_score(const EvidenceVector& ev) {
    EvidenceVector::validate(ev.alpha);
    return static_cast<double>(ev.models()) / ev.strength();
}

ModelPosterior to_posterior(const EvidenceVector& ev) {
    return ModelPosterior{mean_probabilities(ev), uncertainty_score(ev)};
}

EvidenceVector truth_masked_evidence(const EvidenceVector& ev,
                                     const std::vector<double>& one_hot) {
    EvidenceVector::validate(ev.alpha);
    if (one_hot.size() != ev.alpha.size()) {
        throw std::invalid_argument("truth_masked_evidence: label length mismatch");
    }
    std::size_t ones = 0;
    std::size_t true_index = 0;
    for (std::size_t j = 0; j < one_hot.size(); ++j) {
        if (one_hot[j] == 1.0) {
            ones++;
            true_index = j;
        } else if (one_hot[j] != 0.0) {
            throw std::invalid_argument("truth_masked_evidence: label is not one-hot");
        }
    }
    if (ones != 1) {
        throw std::invalid_argument("truth_masked_evidence: label is not one-hot");
    }
    EvidenceVector masked = ev;
    masked.alpha[true_index] = 1.0;
    return masked;
}

double kl_to_uniform(const EvidenceVector& alpha_tilde) {
    EvidenceVector::validate(alpha_tilde.alpha);
    const std::size_t j_count = alpha_tilde.models();
    const double a0 = alpha_tilde.strength();
    double kl = log_gamma(a0) - log_gamma(static_cast<double>(j_count));
    const double psi_a0 = digamma(a0);
    for (double a : alpha_tilde.alpha) {
        kl -= log_gamma(a);
        kl += (a - 1.0) * (digamma(a) - psi_a0);
    }
    return kl;
}

std::vector<double> kl_to_uniform_grad(const EvidenceVector& alpha_tilde) {
    EvidenceVector::validate(alpha_tilde.alpha);
    const double a0 = alpha_tilde.strength();
    const double j_count = static_cast<double>(alpha_tilde.models());
    const double tail = (a0 - j_count) * trigamma(a0);
    std::vector<double> grad(alpha_tilde.alpha.size());
    for (std::size_t j = 0; j < grad.size(); ++j) {
        const double a = alpha_tilde.alpha[j];
        grad[j] = (a - 1.0) * trigamma(a) - tail;
    }
    return grad;
}

double dirichlet_log_pdf(const std::vector<double>& pi, const EvidenceVector& ev) {
    EvidenceVector::validate(ev.alpha);
    if (pi.size() != ev.alpha.size()) {
        throw std::invalid_argument("dirichlet_log_pdf: dimension mismatch");
    }
    double sum = 0.0;
    for (double p : pi) {
        if (!(p > 0.0)) {
            throw std::invalid_argument("dirichlet_log_pdf: pi must be strictly positive");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("dirichlet_log_pdf: pi does not sum to 1");
    }
    double logp = log_gamma(ev.strength());
    for (std::size_t j = 0; j < pi.size(); ++j) {
        logp -= log_gamma(ev.alpha[j]);
        logp += (ev.alpha[j] - 1.0) * std::log(pi[j]);
    }
    return logp;
}

double log_bayes_factor(const ModelPosterior& posterior, std::size_t j, std::size_t k,
                        const std::vector<double>& model_prior) {
    const auto& probs = posterior.probs;
    if (j >= probs.size() || k >= probs.size() || model_prior.size() != probs.size()) {
        throw std::invalid_argument("log_bayes_factor: index out of range");
    }
    if (!(probs[j] > 0.0) || !(probs[k] > 0.0)) {
        throw std::overflow_error("log_bayes_factor: zero posterior probability");
    }
    if (!(model_prior[j] > 0.0) || !(model_prior[k] > 0.0)) {
        throw std::invalid_argument("log_bayes_factor: model prior must be positive");
    }
    return std::log(probs[j] / probs[k]) - std::log(model_prior[j] / model_prior[k]);
}

} // namespace evmc
