#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splitforge/matrix.hpp"

namespace splitforge {

struct ProbeConfig {
    int max_iter = 1000;       // descent steps
    double grad_tol = 1e-6;    // infinity norm of the gradient
    double initial_step = 1.0; // backtracking line search
    double step_shrink = 0.5;
    double sufficient_decrease = 1e-4;
    bool standardize = false; // per-feature standardization from train statistics
};

struct ProbeModel {
    std::vector<double> weights;
    double bias = 0.0;
    bool converged = false;
    int iterations_used = 0;
    double final_grad_norm = 0.0;
};

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad_w;
    double grad_b = 0.0;
};

// Weighted logistic loss: sum_i s_i * log(1 + exp(-y~_i (w.x_i + b))), y~ in {-1,+1}.
// Numerically stable for large |margins|.
LossGrad loss_and_gradient(const std::vector<double>& w, double b, const Matrix& x,
                           const std::vector<std::uint8_t>& y,
                           const std::vector<double>& sample_weights);

// Balanced class weights (M / (2 * M_c)), full-batch gradient descent with
// backtracking from w=0, b=0. Optional loss_trace records the loss after each
// accepted step.
ProbeModel train_probe(const Matrix& x, const std::vector<std::uint8_t>& y,
                       const ProbeConfig& cfg, std::vector<double>* loss_trace = nullptr);

// label 1 iff w.x + b > 0 (exact zero maps to 0)
std::vector<std::uint8_t> predict(const ProbeModel& m, const Matrix& x);

std::string probe_model_to_json(const ProbeModel& m);

} // namespace splitforge
