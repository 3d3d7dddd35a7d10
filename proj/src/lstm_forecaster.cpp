#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "detector_internal.hpp"
#include "tsad/errors.hpp"

namespace tsad::detail {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// y (n) += w (n x m, row major) * x (m)
void matvec_acc(std::span<const double> w, std::span<const double> x,
                std::span<double> y) {
    const std::size_t n = y.size(), m = x.size();
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        const auto wr = w.subspan(i * m, m);
        for (std::size_t j = 0; j < m; ++j) s += wr[j] * x[j];
        y[i] += s;
    }
}

// y (m) += w^T (w is n x m, row major) * x (n)
void matvec_t_acc(std::span<const double> w, std::span<const double> x,
                  std::span<double> y) {
    const std::size_t m = y.size(), n = x.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double v = x[i];
        const auto wr = w.subspan(i * m, m);
        for (std::size_t j = 0; j < m; ++j) y[j] += v * wr[j];
    }
}

// w (n x m) += a (n) outer b (m)
void outer_acc(std::span<const double> a, std::span<const double> b,
               std::span<double> w) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double v = a[i];
        const auto wr = w.subspan(i * b.size(), b.size());
        for (std::size_t j = 0; j < b.size(); ++j) wr[j] += v * b[j];
    }
}

void add_acc(std::span<const double> a, std::span<double> y) {
    for (std::size_t i = 0; i < a.size(); ++i) y[i] += a[i];
}

// Gate order in the parameter layout: input, forget, candidate, output.
struct LstmViews {
    std::span<const double> wx[4]; // h x q
    std::span<const double> wh[4]; // h x h
    std::span<const double> b[4];  // h
    std::span<const double> wy;    // q x h
    std::span<const double> by;    // q
};

LstmViews view_params(std::span<const double> p, std::size_t q, std::size_t h) {
    LstmViews v;
    std::size_t off = 0;
    for (int g = 0; g < 4; ++g) { v.wx[g] = p.subspan(off, h * q); off += h * q; }
    for (int g = 0; g < 4; ++g) { v.wh[g] = p.subspan(off, h * h); off += h * h; }
    for (int g = 0; g < 4; ++g) { v.b[g] = p.subspan(off, h); off += h; }
    v.wy = p.subspan(off, q * h); off += q * h;
    v.by = p.subspan(off, q);
    return v;
}

struct LstmGradViews {
    std::span<double> wx[4];
    std::span<double> wh[4];
    std::span<double> b[4];
    std::span<double> wy;
    std::span<double> by;
};

LstmGradViews view_grad(std::span<double> p, std::size_t q, std::size_t h) {
    LstmGradViews v;
    std::size_t off = 0;
    for (int g = 0; g < 4; ++g) { v.wx[g] = p.subspan(off, h * q); off += h * q; }
    for (int g = 0; g < 4; ++g) { v.wh[g] = p.subspan(off, h * h); off += h * h; }
    for (int g = 0; g < 4; ++g) { v.b[g] = p.subspan(off, h); off += h; }
    v.wy = p.subspan(off, q * h); off += q * h;
    v.by = p.subspan(off, q);
    return v;
}

// Per-step activations kept for backpropagation through time.
struct StepTrace {
    std::vector<double> gates[4]; // post-activation i, f, g, o
    std::vector<double> c;
    std::vector<double> tc; // tanh(c)
    std::vector<double> h;
    std::vector<double> r; // prediction residual for step t+1
};

// Runs one window forward; returns the window's mean squared one-step error.
// trace may be null when only the loss is needed.
double forward_window(const LstmViews& v, std::span<const double> window,
                      std::size_t q, std::size_t h, std::size_t w,
                      std::vector<StepTrace>* trace) {
    const std::size_t steps = w - 1;
    std::vector<double> hprev(h, 0.0), cprev(h, 0.0), pre(h);
    double total = 0.0;
    if (trace) trace->assign(steps, StepTrace{});
    for (std::size_t t = 0; t < steps; ++t) {
        const auto xt = window.subspan(t * q, q);
        const auto xnext = window.subspan((t + 1) * q, q);
        StepTrace local;
        StepTrace& st = trace ? (*trace)[t] : local;
        for (int g = 0; g < 4; ++g) {
            pre.assign(v.b[g].begin(), v.b[g].end());
            matvec_acc(v.wx[g], xt, pre);
            matvec_acc(v.wh[g], hprev, pre);
            st.gates[g].resize(h);
            for (std::size_t i = 0; i < h; ++i)
                st.gates[g][i] = (g == 2) ? std::tanh(pre[i]) : sigmoid(pre[i]);
        }
        st.c.resize(h);
        st.tc.resize(h);
        st.h.resize(h);
        for (std::size_t i = 0; i < h; ++i) {
            st.c[i] = st.gates[1][i] * cprev[i] + st.gates[0][i] * st.gates[2][i];
            st.tc[i] = std::tanh(st.c[i]);
            st.h[i] = st.gates[3][i] * st.tc[i];
        }
        st.r.assign(v.by.begin(), v.by.end());
        matvec_acc(v.wy, st.h, st.r);
        for (std::size_t j = 0; j < q; ++j) st.r[j] -= xnext[j];
        for (std::size_t j = 0; j < q; ++j) total += st.r[j] * st.r[j];
        hprev = st.h;
        cprev = st.c;
    }
    return total / static_cast<double>(steps * q);
}

} // namespace

LstmLoss::LstmLoss(std::size_t input_dim, std::size_t hidden_dim,
                   std::size_t window_length)
    : q_(input_dim), h_(hidden_dim), w_(window_length) {
    if (q_ == 0 || h_ == 0)
        throw ArgumentError("forecaster dimensions must be positive");
    if (w_ < 2)
        throw ArgumentError("forecaster needs windows of at least 2 steps");
}

std::size_t LstmLoss::param_count() const {
    return 4 * (h_ * q_ + h_ * h_ + h_) + q_ * h_ + q_;
}

void LstmLoss::init_params(std::span<double> params, RngStream& rng) const {
    if (params.size() != param_count())
        throw ArgumentError("parameter buffer size mismatch");
    const double bx = 1.0 / std::sqrt(static_cast<double>(q_));
    const double bh = 1.0 / std::sqrt(static_cast<double>(h_));
    std::size_t off = 0;
    for (int g = 0; g < 4; ++g)
        for (std::size_t i = 0; i < h_ * q_; ++i)
            params[off++] = (2.0 * rng.next_double() - 1.0) * bx;
    for (int g = 0; g < 4; ++g)
        for (std::size_t i = 0; i < h_ * h_; ++i)
            params[off++] = (2.0 * rng.next_double() - 1.0) * bh;
    for (int g = 0; g < 4; ++g)
        for (std::size_t i = 0; i < h_; ++i) params[off++] = 0.0;
    for (std::size_t i = 0; i < q_ * h_; ++i)
        params[off++] = (2.0 * rng.next_double() - 1.0) * bh;
    for (std::size_t i = 0; i < q_; ++i) params[off++] = 0.0;
}

double LstmLoss::loss(std::span<const double> params, const Matrix& batch) const {
    if (batch.cols() != w_ * q_)
        throw ArgumentError("batch width does not match forecaster window");
    const auto v = view_params(params, q_, h_);
    double total = 0.0;
    for (std::size_t r = 0; r < batch.rows(); ++r)
        total += forward_window(v, batch.row(r), q_, h_, w_, nullptr);
    return total / static_cast<double>(batch.rows());
}

double LstmLoss::loss_grad(std::span<const double> params, const Matrix& batch,
                           std::span<double> grad) const {
    if (batch.cols() != w_ * q_)
        throw ArgumentError("batch width does not match forecaster window");
    if (grad.size() != param_count())
        throw ArgumentError("gradient buffer size mismatch");
    const auto v = view_params(params, q_, h_);
    std::fill(grad.begin(), grad.end(), 0.0);
    auto gv = view_grad(grad, q_, h_);

    const std::size_t steps = w_ - 1;
    const double scale =
        2.0 / static_cast<double>(batch.rows() * steps * q_);
    double total = 0.0;
    std::vector<StepTrace> trace;
    std::vector<double> dy(q_), dh(h_), dcnext(h_), dhnext(h_);
    std::vector<double> pa[4];
    for (auto& p : pa) p.resize(h_);

    for (std::size_t row = 0; row < batch.rows(); ++row) {
        const auto window = batch.row(row);
        total += forward_window(v, window, q_, h_, w_, &trace);
        std::fill(dhnext.begin(), dhnext.end(), 0.0);
        std::fill(dcnext.begin(), dcnext.end(), 0.0);
        for (std::size_t t = steps; t-- > 0;) {
            const StepTrace& st = trace[t];
            const auto xt = window.subspan(t * q_, q_);
            const auto cprev =
                t > 0 ? std::span<const double>(trace[t - 1].c) : std::span<const double>();
            const auto hprev =
                t > 0 ? std::span<const double>(trace[t - 1].h) : std::span<const double>();

            for (std::size_t j = 0; j < q_; ++j) dy[j] = scale * st.r[j];
            outer_acc(dy, st.h, gv.wy);
            add_acc(dy, gv.by);

            dh = dhnext;
            matvec_t_acc(v.wy, dy, dh);

            for (std::size_t i = 0; i < h_; ++i) {
                const double o = st.gates[3][i];
                const double dco = dh[i] * o * (1.0 - st.tc[i] * st.tc[i]) + dcnext[i];
                const double di = dco * st.gates[2][i];
                const double dg = dco * st.gates[0][i];
                const double df = dco * (t > 0 ? cprev[i] : 0.0);
                const double do_ = dh[i] * st.tc[i];
                pa[0][i] = di * st.gates[0][i] * (1.0 - st.gates[0][i]);
                pa[1][i] = df * st.gates[1][i] * (1.0 - st.gates[1][i]);
                pa[2][i] = dg * (1.0 - st.gates[2][i] * st.gates[2][i]);
                pa[3][i] = do_ * o * (1.0 - o);
                dcnext[i] = dco * st.gates[1][i];
            }
            std::fill(dhnext.begin(), dhnext.end(), 0.0);
            for (int g = 0; g < 4; ++g) {
                outer_acc(pa[g], xt, gv.wx[g]);
                if (t > 0) outer_acc(pa[g], hprev, gv.wh[g]);
                add_acc(pa[g], gv.b[g]);
                matvec_t_acc(v.wh[g], pa[g], dhnext);
            }
        }
    }
    return total / static_cast<double>(batch.rows());
}

void LstmLoss::score(std::span<const double> params, const Matrix& batch,
                     std::span<double> out) const {
    if (batch.cols() != w_ * q_)
        throw ArgumentError("batch width does not match forecaster window");
    if (out.size() != batch.rows())
        throw ArgumentError("score buffer size mismatch");
    const auto v = view_params(params, q_, h_);
    for (std::size_t r = 0; r < batch.rows(); ++r)
        out[r] = forward_window(v, batch.row(r), q_, h_, w_, nullptr);
}

} // namespace tsad::detail
