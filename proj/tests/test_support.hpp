#pragma once

// Shared test helpers: independent scalar oracles for the recurrent cells,
// a finite-difference gradient checker, and small fixture builders. The
// oracles deliberately use raw index loops and their own activation code so
// they share no path with the library implementation they check.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tbp/adam.hpp"
#include "tbp/rng.hpp"
#include "tbp/rnn.hpp"
#include "tbp/sample.hpp"

namespace testsup {

inline double ref_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct RefState {
    std::vector<double> h;
    std::vector<double> c;
};

// y_r = sum_c M[r][c] * v[c] + base_r, all scalar loops.
inline std::vector<double> ref_affine(const tbp::Matrix& w, const std::vector<double>& x,
                                      const tbp::Matrix& u, const std::vector<double>& h,
                                      const std::vector<double>& b) {
    std::vector<double> out(b);
    for (std::size_t r = 0; r < w.rows; ++r) {
        for (std::size_t c = 0; c < w.cols; ++c) out[r] += w.data[r * w.cols + c] * x[c];
        for (std::size_t c = 0; c < u.cols; ++c) out[r] += u.data[r * u.cols + c] * h[c];
    }
    return out;
}

inline RefState ref_lstm_step(const tbp::CellParams& p, const std::vector<double>& x,
                              const RefState& s) {
    const std::size_t n = p.hidden();
    const auto f = ref_affine(p.gates[0].w, x, p.gates[0].u, s.h, p.gates[0].b);
    const auto i = ref_affine(p.gates[1].w, x, p.gates[1].u, s.h, p.gates[1].b);
    const auto g = ref_affine(p.gates[2].w, x, p.gates[2].u, s.h, p.gates[2].b);
    const auto o = ref_affine(p.gates[3].w, x, p.gates[3].u, s.h, p.gates[3].b);
    RefState next;
    next.h.resize(n);
    next.c.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double fk = ref_sigmoid(f[k]);
        const double ik = ref_sigmoid(i[k]);
        const double gk = std::tanh(g[k]);
        const double ok = ref_sigmoid(o[k]);
        next.c[k] = ik * gk + fk * s.c[k];
        next.h[k] = ok * std::tanh(next.c[k]);
    }
    return next;
}

inline RefState ref_gru_step(const tbp::CellParams& p, const std::vector<double>& x,
                             const RefState& s) {
    const std::size_t n = p.hidden();
    const auto z_pre = ref_affine(p.gates[0].w, x, p.gates[0].u, s.h, p.gates[0].b);
    const auto r_pre = ref_affine(p.gates[1].w, x, p.gates[1].u, s.h, p.gates[1].b);
    RefState next;
    next.h.resize(n);
    std::vector<double> rh(n);
    for (std::size_t k = 0; k < n; ++k) rh[k] = ref_sigmoid(r_pre[k]) * s.h[k];
    const auto cand_pre = ref_affine(p.gates[2].w, x, p.gates[2].u, rh, p.gates[2].b);
    for (std::size_t k = 0; k < n; ++k) {
        const double zk = ref_sigmoid(z_pre[k]);
        next.h[k] = zk * s.h[k] + (1.0 - zk) * std::tanh(cand_pre[k]);
    }
    return next;
}

inline RefState ref_srnn_step(const tbp::CellParams& p, const std::vector<double>& x,
                              const RefState& s) {
    const auto pre = ref_affine(p.gates[0].w, x, p.gates[0].u, s.h, p.gates[0].b);
    RefState next;
    next.h.resize(p.hidden());
    for (std::size_t k = 0; k < pre.size(); ++k) next.h[k] = std::tanh(pre[k]);
    return next;
}

// Runs a whole sequence through the scalar reference, returning h after each
// step.
inline std::vector<std::vector<double>> ref_sequence(tbp::CellType cell,
                                                     const tbp::CellParams& p,
                                                     const std::vector<std::vector<double>>& xs) {
    RefState s;
    s.h.assign(p.hidden(), 0.0);
    s.c.assign(p.hidden(), 0.0);
    std::vector<std::vector<double>> hs;
    for (const auto& x : xs) {
        switch (cell) {
            case tbp::CellType::Lstm: s = ref_lstm_step(p, x, s); break;
            case tbp::CellType::Gru: s = ref_gru_step(p, x, s); break;
            case tbp::CellType::Srnn: s = ref_srnn_step(p, x, s); break;
        }
        hs.push_back(s.h);
    }
    return hs;
}

// ---------------------------------------------------------------------------
// Random fixtures
// ---------------------------------------------------------------------------

inline tbp::CellParams random_cell(tbp::CellType cell, std::size_t n, std::size_t d,
                                   std::uint64_t seed) {
    tbp::Rng rng(seed);
    tbp::CellParams params;
    params.gates.resize(tbp::gate_count(cell));
    for (auto& g : params.gates) {
        g.w = tbp::Matrix(n, d);
        g.u = tbp::Matrix(n, n);
        g.b.assign(n, 0.0);
        for (double& v : g.w.data) v = rng.uniform(-0.8, 0.8);
        for (double& v : g.u.data) v = rng.uniform(-0.8, 0.8);
        for (double& v : g.b) v = rng.uniform(-0.3, 0.3);
    }
    return params;
}

inline std::vector<std::vector<double>> random_inputs(std::size_t steps, std::size_t d,
                                                      std::uint64_t seed) {
    tbp::Rng rng(seed);
    std::vector<std::vector<double>> xs(steps, std::vector<double>(d));
    for (auto& x : xs) {
        for (double& v : x) v = rng.uniform(-1.0, 1.0);
    }
    return xs;
}

inline tbp::SequenceSample random_sample(std::size_t steps, std::size_t d, std::uint64_t seed) {
    tbp::Rng rng(seed);
    tbp::SequenceSample s;
    s.steps = steps;
    s.dim = d;
    s.inputs.resize(steps * d);
    for (double& v : s.inputs) v = rng.uniform(-1.0, 1.0);
    s.target = rng.uniform(-0.5, 0.5);
    return s;
}

// ---------------------------------------------------------------------------
// Finite-difference gradient check
// ---------------------------------------------------------------------------

struct GradCheck {
    double max_rel_err = 0.0;
    std::size_t checked = 0;
};

// Central differences with fixed dropout masks (the mask stream is reseeded
// for every loss evaluation, so perturbations see identical masks).
inline GradCheck finite_difference_check(tbp::RnnModel model,
                                         const std::vector<tbp::SequenceSample>& batch,
                                         std::uint64_t mask_seed, double h = 1e-5) {
    auto loss_of = [&batch, mask_seed](const tbp::RnnModel& m) {
        tbp::Rng rng(mask_seed);
        tbp::BatchCache cache = tbp::forward_batch(m, batch, tbp::RunMode::Train, &rng);
        std::vector<double> preds;
        std::vector<double> targets;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            preds.push_back(cache.samples[i].prediction);
            targets.push_back(batch[i].target);
        }
        return tbp::quadratic_loss(preds, targets);
    };

    tbp::Rng rng(mask_seed);
    const tbp::BatchCache cache = tbp::forward_batch(model, batch, tbp::RunMode::Train, &rng);
    const tbp::ModelGrads grads = tbp::backward(model, batch, cache);

    std::vector<std::span<const double>> grad_spans;
    tbp::for_each_grad(grads, [&](std::span<const double> g) { grad_spans.push_back(g); });
    std::vector<std::span<double>> param_spans;
    tbp::for_each_param(model, [&](std::span<double> p) { param_spans.push_back(p); });

    GradCheck result;
    for (std::size_t s = 0; s < param_spans.size(); ++s) {
        for (std::size_t i = 0; i < param_spans[s].size(); ++i) {
            double& w = param_spans[s][i];
            const double saved = w;
            w = saved + h;
            const double up = loss_of(model);
            w = saved - h;
            const double down = loss_of(model);
            w = saved;
            const double fd = (up - down) / (2.0 * h);
            const double a = grad_spans[s][i];
            const double rel = std::abs(a - fd) / std::max({1.0, std::abs(a), std::abs(fd)});
            result.max_rel_err = std::max(result.max_rel_err, rel);
            ++result.checked;
        }
    }
    return result;
}

// Scratch directory under the system temp root, unique per tag.
inline std::filesystem::path temp_dir(const std::string& tag) {
    const auto dir = std::filesystem::temp_directory_path() / ("tbp_test_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testsup
