#include "snap/benchmarks.hpp"

#include "snap/csv.hpp"
#include "snap/error.hpp"
#include "snap/kernels.hpp"
#include "snap/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace snap::benchmarks {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Standardized {
    Matrix X;                   // centered/scaled columns; zero-SD columns zeroed
    std::vector<double> y;      // centered
    std::vector<double> mu, sd; // per column
    double ybar = 0.0;
};

Standardized standardize(const Matrix& X, std::span<const double> y) {
    const std::size_t n = X.rows, k = X.cols;
    Standardized s;
    s.X = Matrix(n, k);
    s.mu.assign(k, 0.0);
    s.sd.assign(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        double m = 0.0;
        for (std::size_t r = 0; r < n; ++r) m += X(r, j);
        m /= static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t r = 0; r < n; ++r) ss += (X(r, j) - m) * (X(r, j) - m);
        const double sd = std::sqrt(ss / static_cast<double>(n));
        s.mu[j] = m;
        s.sd[j] = sd;
        if (sd > 0)
            for (std::size_t r = 0; r < n; ++r) s.X(r, j) = (X(r, j) - m) / sd;
    }
    s.ybar = 0.0;
    for (double v : y) s.ybar += v;
    s.ybar /= static_cast<double>(n);
    s.y.resize(n);
    for (std::size_t r = 0; r < n; ++r) s.y[r] = y[r] - s.ybar;
    return s;
}

// Solve (X'X/n + ridge I) w = X'y/n for the pure-quadratic cases.
std::vector<double> quad_solve(const Matrix& X, std::span<const double> y, double ridge) {
    const std::size_t n = X.rows, k = X.cols;
    Matrix a(k, k);
    std::vector<double> b(k, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const double* row = X.row(r);
        for (std::size_t i = 0; i < k; ++i) {
            b[i] += row[i] * y[r];
            for (std::size_t j = 0; j <= i; ++j) a(i, j) += row[i] * row[j];
        }
    }
    const double dn = static_cast<double>(n);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            a(i, j) /= dn;
            a(j, i) = a(i, j);
        }
        a(i, i) += ridge;
        b[i] /= dn;
    }
    // Gaussian elimination with partial pivoting (k is small here).
    std::vector<std::size_t> piv(k);
    std::iota(piv.begin(), piv.end(), 0);
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t best = c;
        for (std::size_t r = c + 1; r < k; ++r)
            if (std::fabs(a(r, c)) > std::fabs(a(best, c))) best = r;
        if (std::fabs(a(best, c)) < 1e-14) {
            // Degenerate column (e.g. zero-variance feature stays zeroed).
            for (std::size_t r = c; r < k; ++r) a(r, c) = 0.0;
            a(c, c) = 1.0;
            b[c] = 0.0;
            continue;
        }
        if (best != c) {
            for (std::size_t j = 0; j < k; ++j) std::swap(a(c, j), a(best, j));
            std::swap(b[c], b[best]);
        }
        for (std::size_t r = c + 1; r < k; ++r) {
            const double f = a(r, c) / a(c, c);
            if (f == 0.0) continue;
            for (std::size_t j = c; j < k; ++j) a(r, j) -= f * a(c, j);
            b[r] -= f * b[c];
        }
    }
    std::vector<double> w(k, 0.0);
    for (std::size_t i = k; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < k; ++j) s -= a(i, j) * w[j];
        w[i] = s / a(i, i);
    }
    return w;
}

inline double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

double elastic_objective(const Matrix& X, std::span<const double> y,
                         std::span<const double> w, double l1, double l2) {
    const std::size_t n = X.rows;
    double sse = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const double e = y[r] - kernels::dot(X.row(r), w.data(), X.cols);
        sse += e * e;
    }
    double pen = 0.0;
    for (double v : w) pen += l1 * std::fabs(v) + 0.5 * l2 * v * v;
    return sse / (2.0 * static_cast<double>(n)) + pen;
}

} // namespace

double LinearModel::predict(std::span<const double> x) const {
    if (x.size() != weights.size()) throw ShapeError("LinearModel::predict: length");
    return intercept + kernels::dot(weights.data(), x.data(), x.size());
}

double lasso_lambda_max(const Matrix& X, std::span<const double> y) {
    Standardized s = standardize(X, y);
    double best = 0.0;
    for (std::size_t j = 0; j < s.X.cols; ++j) {
        double dot = 0.0;
        for (std::size_t r = 0; r < s.X.rows; ++r) dot += s.X(r, j) * s.y[r];
        best = std::max(best, std::fabs(dot) / static_cast<double>(s.X.rows));
    }
    return best;
}

LinearModel fit_regularized(const Matrix& X, std::span<const double> y, Penalty penalty,
                            double lambda, double alpha, double tol,
                            std::size_t max_sweeps) {
    if (lambda < 0.0) throw ParamError("fit_regularized: lambda must be >= 0");
    if (alpha < 0.0 || alpha > 1.0)
        throw ParamError("fit_regularized: alpha must be in [0,1]");
    if (X.rows != y.size()) throw ShapeError("fit_regularized: rows(X) != len(y)");
    if (X.rows == 0) throw InputError("fit_regularized: empty data");

    double mix = alpha;
    switch (penalty) {
        case Penalty::none: lambda = 0.0; mix = 0.0; break;
        case Penalty::l1: mix = 1.0; break;
        case Penalty::l2: mix = 0.0; break;
        case Penalty::elastic: break;
    }
    const double l1 = lambda * mix;
    const double l2 = lambda * (1.0 - mix);

    Standardized s = standardize(X, y);
    const std::size_t n = X.rows, k = X.cols;
    const double dn = static_cast<double>(n);

    LinearModel model;
    model.penalty = penalty;
    model.lambda = lambda;
    model.alpha = mix;

    std::vector<double> w(k, 0.0);
    if (l1 == 0.0) {
        w = quad_solve(s.X, s.y, l2);
        model.sweeps = 0;
    } else {
        // Cyclic coordinate descent; residual r = y - Xw maintained.
        std::vector<double> resid(s.y.begin(), s.y.end());
        // column norms (1 for standardized columns, 0 for degenerate ones)
        std::vector<double> colnorm(k, 0.0);
        for (std::size_t j = 0; j < k; ++j) {
            double ss = 0.0;
            for (std::size_t r = 0; r < n; ++r) ss += s.X(r, j) * s.X(r, j);
            colnorm[j] = ss / dn;
        }
        double prev_obj = elastic_objective(s.X, s.y, w, l1, l2);
        bool converged = false;
        std::size_t sweep = 0;
        for (; sweep < max_sweeps && !converged; ++sweep) {
            double max_change = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                if (colnorm[j] == 0.0) continue;
                double rho = 0.0;
                for (std::size_t r = 0; r < n; ++r) rho += s.X(r, j) * resid[r];
                rho = rho / dn + colnorm[j] * w[j];
                const double w_new = soft_threshold(rho, l1) / (colnorm[j] + l2);
                const double delta = w_new - w[j];
                if (delta != 0.0) {
                    for (std::size_t r = 0; r < n; ++r) resid[r] -= delta * s.X(r, j);
                    w[j] = w_new;
                    max_change = std::max(max_change, std::fabs(delta));
                }
            }
            if (max_change < tol) converged = true;
        }
        model.sweeps = sweep;
        model.converged = converged;
        const double obj = elastic_objective(s.X, s.y, w, l1, l2);
        if (obj > prev_obj + 1e-9)
            throw NumericError("fit_regularized: objective increased");
    }

    // Unwind standardization.
    model.weights.assign(k, 0.0);
    double dot_mu = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        model.weights[j] = s.sd[j] > 0 ? w[j] / s.sd[j] : 0.0;
        dot_mu += model.weights[j] * s.mu[j];
    }
    model.intercept = s.ybar - dot_mu;
    return model;
}

PathResult fit_lambda_path(const Matrix& X_train, std::span<const double> y_train,
                           const Matrix& X_val, std::span<const double> y_val,
                           Penalty penalty, double alpha, std::size_t steps) {
    if (steps < 2) throw ParamError("fit_lambda_path: need >= 2 steps");
    const double lmax = std::max(lasso_lambda_max(X_train, y_train), 1e-12);
    const double lmin = lmax * 1e-4;
    PathResult out;
    double best_mse = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < steps; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(steps - 1);
        const double lambda = std::exp(std::log(lmax) + f * (std::log(lmin) - std::log(lmax)));
        LinearModel m = fit_regularized(X_train, y_train, penalty, lambda, alpha);
        double mse = 0.0;
        for (std::size_t r = 0; r < X_val.rows; ++r) {
            const double e = y_val[r] - m.predict(X_val.row_span(r));
            mse += e * e;
        }
        mse /= static_cast<double>(X_val.rows);
        out.lambdas.push_back(lambda);
        out.validation_mse.push_back(mse);
        if (mse < best_mse) {
            best_mse = mse;
            out.best = std::move(m);
            out.best_lambda = lambda;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Feedforward network
// ---------------------------------------------------------------------------

void FfnHyper::validate() const {
    if (hidden == 0) throw ParamError("ffn: hidden width must be >= 1");
    if (learning_rate <= 0) throw ParamError("ffn: learning_rate must be > 0");
    if (batch_size == 0) throw ParamError("ffn: batch_size must be >= 1");
    if (max_epochs == 0) throw ParamError("ffn: max_epochs must be >= 1");
}

double FfnModel::predict(std::span<const double> x) const {
    if (x.size() != W1.rows) throw ShapeError("FfnModel::predict: length");
    double out = b2;
    for (std::size_t h = 0; h < w2.size(); ++h) {
        double pre = b1[h];
        for (std::size_t j = 0; j < W1.rows; ++j) pre += W1(j, h) * x[j];
        const double act = linear_activation ? pre : (pre > 0 ? pre : 0.0);
        out += w2[h] * act;
    }
    return out;
}

FfnModel init_ffn(const FfnHyper& hyper, std::size_t n_features) {
    hyper.validate();
    if (n_features == 0) throw ParamError("ffn: zero features");
    FfnModel m;
    m.linear_activation = hyper.linear_activation;
    Rng rng = Rng(hyper.seed).child(7);
    const double bound1 = std::sqrt(6.0 / static_cast<double>(n_features + hyper.hidden));
    m.W1 = Matrix(n_features, hyper.hidden);
    for (auto& w : m.W1.data) w = rng.uniform(-bound1, bound1);
    m.b1.assign(hyper.hidden, 0.0);
    const double bound2 = std::sqrt(6.0 / static_cast<double>(hyper.hidden + 1));
    m.w2.resize(hyper.hidden);
    for (auto& w : m.w2) w = rng.uniform(-bound2, bound2);
    m.b2 = 0.0;
    return m;
}

std::vector<double> ffn_gather(const FfnModel& m) {
    std::vector<double> flat;
    flat.reserve(m.W1.size() + m.b1.size() + m.w2.size() + 1);
    flat.insert(flat.end(), m.W1.data.begin(), m.W1.data.end());
    flat.insert(flat.end(), m.b1.begin(), m.b1.end());
    flat.insert(flat.end(), m.w2.begin(), m.w2.end());
    flat.push_back(m.b2);
    return flat;
}

void ffn_scatter(FfnModel& m, std::span<const double> flat) {
    const std::size_t total = m.W1.size() + m.b1.size() + m.w2.size() + 1;
    if (flat.size() != total) throw ShapeError("ffn_scatter: size mismatch");
    std::size_t off = 0;
    std::copy_n(flat.begin(), m.W1.size(), m.W1.data.begin());
    off += m.W1.size();
    std::copy_n(flat.begin() + off, m.b1.size(), m.b1.begin());
    off += m.b1.size();
    std::copy_n(flat.begin() + off, m.w2.size(), m.w2.begin());
    off += m.w2.size();
    m.b2 = flat[off];
}

double ffn_loss_and_grad(const FfnModel& model, const Matrix& X,
                         std::span<const double> y, std::vector<double>& grad) {
    const std::size_t n = X.rows, k = X.rows ? X.cols : 0;
    if (n == 0) throw InputError("ffn_loss_and_grad: empty batch");
    if (y.size() != n) throw ShapeError("ffn_loss_and_grad: target length");
    const std::size_t H = model.w2.size();
    grad.assign(k * H + H + H + 1, 0.0);
    double* gW1 = grad.data();
    double* gb1 = grad.data() + k * H;
    double* gw2 = gb1 + H;
    double* gb2 = gw2 + H;

    std::vector<double> pre(H), act(H);
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
        const double* x = X.row(r);
        for (std::size_t h = 0; h < H; ++h) {
            double p = model.b1[h];
            for (std::size_t j = 0; j < k; ++j) p += model.W1(j, h) * x[j];
            pre[h] = p;
            act[h] = model.linear_activation ? p : (p > 0 ? p : 0.0);
        }
        double out = model.b2;
        for (std::size_t h = 0; h < H; ++h) out += model.w2[h] * act[h];
        const double e = out - y[r];
        loss += e * e * inv_n;
        const double dout = 2.0 * e * inv_n;
        *gb2 += dout;
        for (std::size_t h = 0; h < H; ++h) {
            gw2[h] += act[h] * dout;
            const double dact = model.w2[h] * dout;
            const double dpre =
                model.linear_activation ? dact : (pre[h] > 0 ? dact : 0.0);
            if (dpre != 0.0) {
                gb1[h] += dpre;
                for (std::size_t j = 0; j < k; ++j) gW1[j * H + h] += dpre * x[j];
            }
        }
    }
    return loss;
}

FfnModel fit_ffn(const Matrix& X_train, std::span<const double> y_train,
                 const Matrix& X_val, std::span<const double> y_val,
                 const FfnHyper& hyper) {
    hyper.validate();
    if (X_train.rows == 0 || X_val.rows == 0) throw InputError("fit_ffn: empty split");
    FfnModel model = init_ffn(hyper, X_train.cols);
    std::vector<double> params = ffn_gather(model);
    AdamState adam(params.size());
    std::vector<double> grad;

    Rng shuffle_base = Rng(hyper.seed).child(8);
    std::vector<std::size_t> order(X_train.rows);
    std::iota(order.begin(), order.end(), 0);

    auto val_mse = [&]() {
        double mse = 0.0;
        for (std::size_t r = 0; r < X_val.rows; ++r) {
            const double e = y_val[r] - model.predict(X_val.row_span(r));
            mse += e * e;
        }
        return mse / static_cast<double>(X_val.rows);
    };

    std::vector<double> best_params = params;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t bad = 0;

    for (std::size_t epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
        Rng srng = shuffle_base.child(epoch);
        shuffle(srng, order);
        for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
            const std::size_t stop = std::min(order.size(), start + hyper.batch_size);
            Matrix xb(stop - start, X_train.cols);
            std::vector<double> yb(stop - start);
            for (std::size_t i = start; i < stop; ++i) {
                std::copy_n(X_train.row(order[i]), X_train.cols, xb.row(i - start));
                yb[i - start] = y_train[order[i]];
            }
            ffn_loss_and_grad(model, xb, yb, grad);
            clip_global_norm(grad, hyper.grad_clip);
            adam_step(params, grad, adam, hyper.learning_rate, hyper.adam_beta1,
                      hyper.adam_beta2, hyper.adam_eps);
            ffn_scatter(model, params);
        }
        const double v = val_mse();
        if (v < best_val) {
            best_val = v;
            best_params = params;
            bad = 0;
        } else if (++bad > hyper.patience) {
            break;
        }
    }
    ffn_scatter(model, best_params);
    return model;
}

// ---------------------------------------------------------------------------
// Factor regressions
// ---------------------------------------------------------------------------

int FactorTable::month_index(data::MonthId m) const {
    auto it = std::lower_bound(months.begin(), months.end(), m);
    if (it == months.end() || *it != m) return -1;
    return static_cast<int>(it - months.begin());
}

FactorTable load_factor_csv(const std::string& path) {
    auto t = csv::read_file(path);
    if (t.header.empty() || t.header[0] != "month")
        throw ParseError(path + ": header must start with month");
    FactorTable f;
    f.names.assign(t.header.begin() + 1, t.header.end());
    f.values = Matrix(t.rows.size(), f.names.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const std::string ctx = path + ":" + std::to_string(i + 2);
        f.months.push_back(data::parse_month(t.rows[i][0]));
        for (std::size_t j = 0; j < f.names.size(); ++j) {
            f.values(i, j) = csv::parse_double(t.rows[i][j + 1], ctx);
            if (!std::isfinite(f.values(i, j)))
                throw ParseError(ctx + ": missing factor value");
        }
    }
    if (!std::is_sorted(f.months.begin(), f.months.end()))
        throw ParseError(path + ": months must be ascending");
    return f;
}

stats::OlsFit factor_regression(std::span<const data::MonthId> months,
                                std::span<const double> returns,
                                const FactorTable& factors) {
    if (months.size() != returns.size())
        throw ShapeError("factor_regression: months/returns length mismatch");
    if (months.empty()) throw InputError("factor_regression: empty series");
    const std::size_t k = factors.names.size();
    Matrix X(months.size(), k + 1);
    for (std::size_t i = 0; i < months.size(); ++i) {
        const int mi = factors.month_index(months[i]);
        if (mi < 0)
            throw AlignmentError("factor_regression: no factor data for " +
                                 data::format_month(months[i]));
        X(i, 0) = 1.0;
        for (std::size_t j = 0; j < k; ++j) X(i, j + 1) = factors.values(mi, j);
    }
    return stats::ols_robust(returns, X);
}

PredictionPanel factor_prediction_panel(const data::PanelDataset& ds,
                                        const FactorTable& factors, data::Split split,
                                        std::size_t min_history) {
    const std::size_t k = factors.names.size();
    PredictionPanel panel;
    for (const auto& stock : ds.stocks) {
        // The stock's realized (month, return) pairs in time order; returns
        // at row month t are realized at t+1, so the factor month is t+1.
        for (std::size_t i = 0; i < stock.n_rows; ++i) {
            const std::size_t r = stock.first_row + i;
            if (ds.split_of(ds.rows[r].month) != split) continue;

            double pred = 0.0;
            // expanding window: all of the stock's observations strictly
            // before this row
            if (i >= std::max(min_history, k + 2)) {
                Matrix X(i, k + 1);
                std::vector<double> yv(i);
                bool ok = true;
                for (std::size_t q = 0; q < i; ++q) {
                    const std::size_t rq = stock.first_row + q;
                    const int mi = factors.month_index(ds.rows[rq].month + 1);
                    if (mi < 0) {
                        ok = false;
                        break;
                    }
                    X(q, 0) = 1.0;
                    for (std::size_t j = 0; j < k; ++j)
                        X(q, j + 1) = factors.values(mi, j);
                    yv[q] = ds.rows[rq].excess_return;
                }
                const int target_mi = factors.month_index(ds.rows[r].month + 1);
                if (ok && target_mi >= 0) {
                    try {
                        auto fit = stats::ols_robust(yv, X);
                        pred = fit.coefficients[0];
                        for (std::size_t j = 0; j < k; ++j)
                            pred += fit.coefficients[j + 1] * factors.values(target_mi, j);
                    } catch (const SingularError&) {
                        pred = 0.0;
                    }
                }
            }
            PredictionRow pr;
            pr.stock_id = ds.rows[r].stock_id;
            pr.month = ds.rows[r].month;
            pr.realized = ds.rows[r].excess_return;
            pr.predicted = pred;
            pr.residual = pr.realized - pr.predicted;
            pr.alpha_hat = kNaN;
            panel.rows.push_back(pr);
        }
    }
    if (panel.rows.empty())
        throw InputError("factor_prediction_panel: empty split");
    return panel;
}

// ---------------------------------------------------------------------------
// Panel plumbing
// ---------------------------------------------------------------------------

Matrix design_matrix(const data::PanelDataset& ds, std::span<const std::size_t> rows) {
    Matrix X(rows.size(), ds.n_chars);
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy_n(ds.feat(rows[i]).data(), ds.n_chars, X.row(i));
    return X;
}

std::vector<double> target_vector(const data::PanelDataset& ds,
                                  std::span<const std::size_t> rows) {
    std::vector<double> y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) y[i] = ds.rows[rows[i]].excess_return;
    return y;
}

namespace {

template <typename Model>
PredictionPanel panel_from_model(const Model& model, const data::PanelDataset& ds,
                                 data::Split split) {
    auto rows = ds.split_rows(split);
    if (rows.empty()) throw InputError("prediction panel: empty split");
    PredictionPanel panel;
    panel.rows.reserve(rows.size());
    for (auto r : rows) {
        PredictionRow pr;
        pr.stock_id = ds.rows[r].stock_id;
        pr.month = ds.rows[r].month;
        pr.realized = ds.rows[r].excess_return;
        pr.predicted = model.predict(ds.feat(r));
        pr.residual = pr.realized - pr.predicted;
        pr.alpha_hat = kNaN;
        panel.rows.push_back(pr);
    }
    return panel;
}

} // namespace

PredictionPanel linear_prediction_panel(const LinearModel& model,
                                        const data::PanelDataset& ds, data::Split split) {
    return panel_from_model(model, ds, split);
}

PredictionPanel ffn_prediction_panel(const FfnModel& model, const data::PanelDataset& ds,
                                     data::Split split) {
    return panel_from_model(model, ds, split);
}

} // namespace snap::benchmarks
