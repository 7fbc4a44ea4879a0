#pragma once

#include <cmath>
#include <stdexcept>

namespace salvo {

struct RewardParams {
    double gamma_a = 4000.0;  // terminal LOS-error weight
    double gamma_t = 2000.0;  // terminal time-error weight
    double xi_a = 10.0;       // terminal LOS-error decay
    double xi_t = 1.0;        // terminal time-error decay
    double k_a = 1.0;         // flight angle-consensus decay
    double k_t = 0.2;         // flight time-consensus decay
    double beta_a = 10.0;     // flight angle-consensus weight
    double beta_t = 2.0;      // flight time-consensus weight

    void validate() const {
        for (double v : {gamma_a, gamma_t, xi_a, xi_t, k_a, k_t, beta_a, beta_t})
            if (!(v > 0.0))
                throw std::invalid_argument("RewardParams: all coefficients must be positive");
    }
};

/// Terminal reward, nonzero only at a missile's terminal step; peaks at
/// gamma_a + gamma_t when both errors vanish.
inline double terminal_reward(double e_xi, double e_t, bool is_terminal_step,
                              const RewardParams& p) {
    if (!is_terminal_step)
        return 0.0;
    return p.gamma_a * std::exp(-p.xi_a * std::abs(e_xi)) +
           p.gamma_t * std::exp(-p.xi_t * std::abs(e_t));
}

/// Flight reward; always <= 0, zero iff both consensus errors are zero.
inline double flight_reward(double e_a, double e_t, const RewardParams& p) {
    return p.beta_a * (-1.0 + std::exp(-p.k_a * std::abs(e_a))) +
           p.beta_t * (-1.0 + std::exp(-p.k_t * std::abs(e_t)));
}

/// Running fitness of one missile over an episode. Flight rewards integrate
/// over evaluation intervals; the terminal reward is a one-shot addition.
class FitnessAccumulator {
public:
    void add_flight(double reward, double dt_eval) { fitness_ += reward * dt_eval; }

    void add_terminal(double reward) {
        if (terminal_applied_)
            throw std::logic_error("FitnessAccumulator: terminal reward already applied");
        terminal_applied_ = true;
        fitness_ += reward;
    }

    double fitness() const { return fitness_; }
    bool terminal_applied() const { return terminal_applied_; }

private:
    double fitness_ = 0.0;
    bool terminal_applied_ = false;
};

}  // namespace salvo
