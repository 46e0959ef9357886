#include "splitforge/probe.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "splitforge/error.hpp"
#include "splitforge/kernels.hpp"

namespace splitforge {

namespace {

// log(1 + exp(-m)) without overflow for any margin
double softplus_neg(double m) {
    if (m >= 0.0) return std::log1p(std::exp(-m));
    return -m + std::log1p(std::exp(m));
}

// sigma(-m) = 1 / (1 + exp(m))
double sigmoid_neg(double m) {
    if (m >= 0.0) {
        const double e = std::exp(-m);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(m));
}

void check_dims(const std::vector<double>& w, const Matrix& x, const std::vector<std::uint8_t>& y,
                const std::vector<double>& s) {
    if (x.rows() == 0) throw ValidationError("probe: empty sample matrix");
    if (w.size() != x.cols()) throw ValidationError("probe: weight/feature dimension mismatch");
    if (y.size() != x.rows() || s.size() != x.rows()) {
        throw ValidationError("probe: label/weight vector length mismatch");
    }
}

double loss_only(const std::vector<double>& w, double b, const Matrix& x,
                 const std::vector<std::uint8_t>& y, const std::vector<double>& s) {
    double loss = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto row = x.row(i);
        const double margin_sign = y[i] ? 1.0 : -1.0;
        const double m = margin_sign * (kernels::dot(w.data(), row.data(), w.size()) + b);
        loss += s[i] * softplus_neg(m);
    }
    return loss;
}

} // namespace

LossGrad loss_and_gradient(const std::vector<double>& w, double b, const Matrix& x,
                           const std::vector<std::uint8_t>& y,
                           const std::vector<double>& sample_weights) {
    check_dims(w, x, y, sample_weights);
    if (!std::isfinite(b)) throw ValidationError("probe: non-finite bias");
    for (double v : w) {
        if (!std::isfinite(v)) throw ValidationError("probe: non-finite weight");
    }
    for (double v : sample_weights) {
        if (!std::isfinite(v) || v <= 0.0) {
            throw ValidationError("probe: sample weights must be finite and positive");
        }
    }

    LossGrad out;
    out.grad_w.assign(w.size(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto row = x.row(i);
        const double margin_sign = y[i] ? 1.0 : -1.0;
        const double raw = kernels::dot(w.data(), row.data(), w.size()) + b;
        if (!std::isfinite(raw)) throw ValidationError("probe: non-finite margin");
        const double m = margin_sign * raw;
        out.loss += sample_weights[i] * softplus_neg(m);
        const double coef = -sample_weights[i] * sigmoid_neg(m) * margin_sign;
        kernels::axpy(coef, row.data(), out.grad_w.data(), w.size());
        out.grad_b += coef;
    }
    return out;
}

ProbeModel train_probe(const Matrix& x, const std::vector<std::uint8_t>& y,
                       const ProbeConfig& cfg, std::vector<double>* loss_trace) {
    if (cfg.max_iter < 1) throw ValidationError("probe: max_iter must be >= 1");
    if (cfg.grad_tol <= 0.0) throw ValidationError("probe: grad_tol must be > 0");
    const std::size_t m = x.rows();
    const std::size_t d = x.cols();
    if (y.size() != m) throw ValidationError("probe: label length mismatch");

    std::size_t m_pos = 0;
    for (std::uint8_t v : y) m_pos += v;
    if (m_pos == 0 || m_pos == m) {
        throw ValidationError("train_probe: degenerate labels (single class)");
    }

    // balanced class weights: M / (2 * M_c)
    const double w_pos = static_cast<double>(m) / (2.0 * static_cast<double>(m_pos));
    const double w_neg = static_cast<double>(m) / (2.0 * static_cast<double>(m - m_pos));
    std::vector<double> sample_weights(m);
    for (std::size_t i = 0; i < m; ++i) sample_weights[i] = y[i] ? w_pos : w_neg;

    // optional standardization in train statistics; weights are folded back to
    // raw feature space before returning
    const Matrix* features = &x;
    Matrix standardized;
    std::vector<double> mean(d, 0.0), scale(d, 1.0);
    if (cfg.standardize) {
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < d; ++j) mean[j] += x.at(i, j);
        }
        for (std::size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(m);
        std::vector<double> var(d, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                const double dev = x.at(i, j) - mean[j];
                var[j] += dev * dev;
            }
        }
        standardized = Matrix(m, d);
        for (std::size_t j = 0; j < d; ++j) {
            const double sd = std::sqrt(var[j] / static_cast<double>(m));
            scale[j] = sd > 0.0 ? sd : 1.0;
        }
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                standardized.at(i, j) = (x.at(i, j) - mean[j]) / scale[j];
            }
        }
        features = &standardized;
    }

    std::vector<double> w(d, 0.0);
    double b = 0.0;
    LossGrad lg = loss_and_gradient(w, b, *features, y, sample_weights);
    if (loss_trace) loss_trace->push_back(lg.loss);

    ProbeModel model;
    std::vector<double> w_next(d);
    for (int iter = 1; iter <= cfg.max_iter; ++iter) {
        double grad_inf = std::abs(lg.grad_b);
        for (double v : lg.grad_w) grad_inf = std::max(grad_inf, std::abs(v));
        if (grad_inf <= cfg.grad_tol) {
            model.converged = true;
            break;
        }

        const double descent =
            -(kernels::dot(lg.grad_w.data(), lg.grad_w.data(), d) + lg.grad_b * lg.grad_b);
        double step = cfg.initial_step;
        bool accepted = false;
        double b_next = b;
        for (int ls = 0; ls < 64; ++ls) {
            for (std::size_t j = 0; j < d; ++j) w_next[j] = w[j] - step * lg.grad_w[j];
            b_next = b - step * lg.grad_b;
            const double candidate = loss_only(w_next, b_next, *features, y, sample_weights);
            if (candidate <= lg.loss + cfg.sufficient_decrease * step * descent) {
                accepted = true;
                break;
            }
            step *= cfg.step_shrink;
        }
        if (!accepted) break; // line search stalled at floating-point resolution

        w.swap(w_next);
        b = b_next;
        lg = loss_and_gradient(w, b, *features, y, sample_weights);
        if (loss_trace) loss_trace->push_back(lg.loss);
        model.iterations_used = iter;
    }

    double grad_inf = std::abs(lg.grad_b);
    for (double v : lg.grad_w) grad_inf = std::max(grad_inf, std::abs(v));
    model.final_grad_norm = grad_inf;
    model.converged = model.converged || grad_inf <= cfg.grad_tol;

    if (cfg.standardize) {
        model.weights.assign(d, 0.0);
        double bias = b;
        for (std::size_t j = 0; j < d; ++j) {
            model.weights[j] = w[j] / scale[j];
            bias -= w[j] * mean[j] / scale[j];
        }
        model.bias = bias;
    } else {
        model.weights = std::move(w);
        model.bias = b;
    }
    return model;
}

std::vector<std::uint8_t> predict(const ProbeModel& m, const Matrix& x) {
    if (x.cols() != m.weights.size()) {
        throw ValidationError("predict: feature dimension mismatch (" + std::to_string(x.cols()) +
                              " vs model " + std::to_string(m.weights.size()) + ")");
    }
    std::vector<std::uint8_t> out(x.rows(), 0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto row = x.row(i);
        const double margin = kernels::dot(m.weights.data(), row.data(), row.size()) + m.bias;
        out[i] = margin > 0.0 ? 1 : 0;
    }
    return out;
}

std::string probe_model_to_json(const ProbeModel& m) {
    nlohmann::ordered_json j;
    j["weights"] = m.weights;
    j["bias"] = m.bias;
    j["converged"] = m.converged;
    j["iterations_used"] = m.iterations_used;
    j["final_grad_norm"] = m.final_grad_norm;
    return j.dump();
}

} // namespace splitforge
