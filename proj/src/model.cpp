#include "snap/model.hpp"

#include "snap/csv.hpp"
#include "snap/error.hpp"
#include "snap/kernels.hpp"
#include "snap/numerics.hpp"
#include "snap/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

namespace snap {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------------------
// Hyperparameters and initialization
// ---------------------------------------------------------------------------

void SnapHyper::validate() const {
    if (window < 1) throw ParamError("hyper: window must be >= 1");
    if (dropout_keep <= 0.0 || dropout_keep > 1.0)
        throw ParamError("hyper: dropout_keep must be in (0,1]");
    if (adam_beta1 <= 0.0 || adam_beta1 >= 1.0 || adam_beta2 <= 0.0 || adam_beta2 >= 1.0)
        throw ParamError("hyper: adam betas must be in (0,1)");
    if (learning_rate <= 0.0) throw ParamError("hyper: learning_rate must be > 0");
    if (adam_eps <= 0.0) throw ParamError("hyper: adam_eps must be > 0");
    if (layers < 1) throw ParamError("hyper: layers must be >= 1");
    if (batch_months < 1) throw ParamError("hyper: batch_months must be >= 1");
    if (max_epochs < 1) throw ParamError("hyper: max_epochs must be >= 1");
}

namespace {

std::size_t rule_of_thumb_dim(std::size_t input_dim) {
    return std::max<std::size_t>(4, (2 * input_dim) / 3);
}

BranchParams init_branch(Rng& rng, std::size_t input_dim, std::size_t hidden_dim,
                         std::size_t layers, const SnapHyper& hyper) {
    BranchParams b;
    b.stack.opts.gate_act = hyper.gate_act;
    b.stack.opts.gate_cap = hyper.gate_cap;
    for (std::size_t l = 0; l < layers; ++l)
        b.stack.layers.push_back(init_params(rng, l == 0 ? input_dim : hidden_dim,
                                             hidden_dim, hyper.forget_bias));
    // Heads start small so initial predictions sit near the monthly-return
    // scale; Adam's normalized steps recalibrate from there.
    const double bound = 0.1 * std::sqrt(6.0 / static_cast<double>(hidden_dim + 1));
    b.head_w.resize(hidden_dim);
    for (auto& w : b.head_w) w = rng.uniform(-bound, bound);
    b.head_b = 0.0;
    return b;
}

} // namespace

SnapModel init_model(const SnapHyper& hyper, std::size_t n_chars, std::size_t n_common,
                     bool masked) {
    hyper.validate();
    if (n_chars == 0 || n_common == 0) throw ParamError("init_model: zero input dims");
    SnapModel m;
    m.hyper = hyper;
    m.masked = masked;
    m.n_chars = n_chars;
    m.n_common = n_common;
    if (m.hyper.hidden_dim == 0) m.hyper.hidden_dim = rule_of_thumb_dim(n_chars);
    if (m.hyper.lambda_hidden_dim == 0)
        m.hyper.lambda_hidden_dim = rule_of_thumb_dim(n_common);

    Rng root(hyper.seed);
    Rng ra = root.child(1), rb = root.child(2), rl = root.child(3);
    m.alpha = init_branch(ra, n_chars, m.hyper.hidden_dim, m.hyper.layers, m.hyper);
    m.beta = init_branch(rb, n_chars, m.hyper.hidden_dim, m.hyper.layers, m.hyper);
    m.lambda = init_branch(rl, n_common, m.hyper.lambda_hidden_dim, m.hyper.layers, m.hyper);
    // Betas center near one, so the beta head starts there; the product
    // beta*lambda would otherwise sit in a bilinear saddle at the origin
    // where neither factor branch receives usable gradient.
    m.beta.head_b = 1.0;
    return m;
}

// ---------------------------------------------------------------------------
// Forward passes
// ---------------------------------------------------------------------------

double branch_forward(const BranchParams& branch, const Seq& window) {
    auto h = lstm_forward(branch.stack, window, {}, nullptr);
    return kernels::dot(branch.head_w.data(), h.data(), h.size()) + branch.head_b;
}

BranchOutputs predict(const SnapModel& model, const Seq& stock_window,
                      const Seq& common_window) {
    if (stock_window.empty() || common_window.empty())
        throw InputError("predict: window must cover at least one month");
    BranchOutputs out;
    if (!model.masked) out.alpha = branch_forward(model.alpha, stock_window);
    out.beta = branch_forward(model.beta, stock_window);
    out.lambda = branch_forward(model.lambda, common_window);
    out.prediction = model.masked ? out.beta * out.lambda
                                  : out.alpha + out.beta * out.lambda;
    return out;
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

double snap_loss(std::span<const LabeledPrediction> batch) {
    if (batch.empty()) throw InputError("snap_loss: empty batch");
    std::map<int, std::pair<double, std::size_t>> per_stock; // sum sq err, count
    for (const auto& s : batch) {
        const double e = s.target - s.predicted;
        auto& acc = per_stock[s.stock_id];
        acc.first += e * e;
        acc.second += 1;
    }
    double loss = 0.0;
    for (const auto& [id, acc] : per_stock)
        loss += acc.first / static_cast<double>(acc.second);
    return loss / static_cast<double>(per_stock.size());
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

double clip_global_norm(std::span<double> g, double max_norm) {
    const double norm = std::sqrt(kernels::sumsq(g.data(), g.size()));
    if (max_norm > 0.0 && norm > max_norm && norm > 0.0)
        kernels::scale(g.size(), max_norm / norm, g.data());
    return norm;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
    if (params.size() != grads.size() || state.m.size() != params.size() ||
        state.v.size() != params.size())
        throw ShapeError("adam_step: size mismatch");
    for (double g : grads)
        if (!std::isfinite(g))
            throw NumericError("adam_step: non-finite gradient after clipping (step " +
                               std::to_string(state.step + 1) + ")");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grads[i];
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grads[i] * grads[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

// ---------------------------------------------------------------------------
// Flat parameter views
// ---------------------------------------------------------------------------

void ParamRefs::add(double* p, std::size_t n) {
    blocks_.emplace_back(p, n);
    total_ += n;
}

void ParamRefs::add_branch(BranchParams& b) {
    for (auto& layer : b.stack.layers) {
        add(layer.W.data.data(), layer.W.data.size());
        add(layer.b.data(), layer.b.size());
    }
    add(b.head_w.data(), b.head_w.size());
    add(&b.head_b, 1);
}

ParamRefs ParamRefs::trainable(SnapModel& model) {
    ParamRefs r;
    if (!model.masked) r.add_branch(model.alpha);
    r.add_branch(model.beta);
    r.add_branch(model.lambda);
    return r;
}

ParamRefs ParamRefs::of_branch(BranchParams& branch) {
    ParamRefs r;
    r.add_branch(branch);
    return r;
}

std::vector<double> ParamRefs::gather() const {
    std::vector<double> flat;
    flat.reserve(total_);
    for (const auto& b : blocks_) flat.insert(flat.end(), b.begin(), b.end());
    return flat;
}

void ParamRefs::scatter(std::span<const double> flat) {
    if (flat.size() != total_) throw ShapeError("ParamRefs::scatter: size mismatch");
    std::size_t off = 0;
    for (auto& b : blocks_) {
        std::copy_n(flat.begin() + off, b.size(), b.begin());
        off += b.size();
    }
}

// ---------------------------------------------------------------------------
// Batch machinery (shared by training, gradient checks, evaluation)
// ---------------------------------------------------------------------------

namespace {

struct MonthGroup {
    int month_idx = 0;              // index into ds.months
    std::vector<std::size_t> rows;  // ascending => ascending stock order
};

std::vector<MonthGroup> group_by_month(const data::PanelDataset& ds,
                                       std::span<const std::size_t> row_ids) {
    std::map<int, MonthGroup> groups;
    for (auto r : row_ids) {
        const int mi = ds.month_index(ds.rows[r].month);
        auto& g = groups[mi];
        g.month_idx = mi;
        g.rows.push_back(r);
    }
    std::vector<MonthGroup> out;
    out.reserve(groups.size());
    for (auto& [mi, g] : groups) {
        std::sort(g.rows.begin(), g.rows.end());
        out.push_back(std::move(g));
    }
    return out;
}

// Rolling window of the stock's own observations with months in
// (t - W, t], in time order. Shorter histories yield shorter windows.
Seq stock_window(const data::PanelDataset& ds, std::size_t row_id, std::size_t W) {
    const int stock = ds.rows[row_id].stock_id;
    const data::MonthId t = ds.rows[row_id].month;
    std::size_t first = row_id;
    while (first > 0 && ds.rows[first - 1].stock_id == stock &&
           ds.rows[first - 1].month > t - static_cast<int>(W))
        --first;
    Seq seq;
    seq.reserve(row_id - first + 1);
    for (std::size_t r = first; r <= row_id; ++r) seq.push_back(ds.feat(r));
    return seq;
}

// Calendar window of common inputs ending at the given month.
Seq common_window(const data::PanelDataset& ds, int month_idx, std::size_t W) {
    const data::MonthId t = ds.months[month_idx];
    int first = month_idx;
    while (first > 0 && ds.months[first - 1] > t - static_cast<int>(W)) --first;
    Seq seq;
    seq.reserve(month_idx - first + 1);
    for (int j = first; j <= month_idx; ++j) seq.push_back(ds.common(j));
    return seq;
}

// Per-row loss weight implementing the average-of-averages objective over
// the processed row set: 1 / (n_stocks * n_months_of_stock).
void eq_weights(const data::PanelDataset& ds, std::span<const std::size_t> row_ids,
                std::map<std::size_t, double>& weight_of_row) {
    std::map<int, std::size_t> t_i;
    for (auto r : row_ids) t_i[ds.rows[r].stock_id] += 1;
    const double n = static_cast<double>(t_i.size());
    for (auto r : row_ids)
        weight_of_row[r] = 1.0 / (n * static_cast<double>(t_i[ds.rows[r].stock_id]));
}

struct BranchGradAcc {
    std::size_t offset = 0; // into the flat gradient
    const BranchParams* branch = nullptr;
};

// Adds head + stack gradients for one branch into the flat vector, laid out
// to match ParamRefs order.
void accumulate_branch(const BranchParams& bp, const LstmCache& cache,
                       std::span<const double> h_final, double dout,
                       std::size_t offset, std::vector<double>& flat) {
    const std::size_t d = bp.stack.hidden_dim();
    std::vector<double> dh(d);
    for (std::size_t j = 0; j < d; ++j) dh[j] = bp.head_w[j] * dout;
    LstmGrads lg = lstm_backward(bp.stack, cache, dh);
    std::size_t off = offset;
    for (std::size_t l = 0; l < bp.stack.layers.size(); ++l) {
        auto& gw = lg.layers[l].dW.data;
        kernels::axpy(gw.size(), 1.0, gw.data(), flat.data() + off);
        off += gw.size();
        kernels::axpy(lg.layers[l].db.size(), 1.0, lg.layers[l].db.data(),
                      flat.data() + off);
        off += lg.layers[l].db.size();
    }
    for (std::size_t j = 0; j < d; ++j) flat[off + j] += h_final[j] * dout;
    off += d;
    flat[off] += dout;
}

struct ParamLayout {
    std::size_t alpha_off = 0, beta_off = 0, lambda_off = 0, total = 0;
    bool alpha_trainable = false;
};

ParamLayout layout_of(const SnapModel& model) {
    auto branch_size = [](const BranchParams& b) {
        std::size_t n = 0;
        for (const auto& l : b.stack.layers) n += l.W.size() + l.b.size();
        return n + b.head_w.size() + 1;
    };
    ParamLayout lay;
    lay.alpha_trainable = !model.masked;
    std::size_t off = 0;
    if (lay.alpha_trainable) {
        lay.alpha_off = off;
        off += branch_size(model.alpha);
    }
    lay.beta_off = off;
    off += branch_size(model.beta);
    lay.lambda_off = off;
    off += branch_size(model.lambda);
    lay.total = off;
    return lay;
}

// Dropout plan: deterministic per (epoch, month index, stock slot, branch).
struct DropoutPlan {
    const SnapHyper* hyper = nullptr;
    Rng base;
    std::size_t epoch = 0;

    DropoutPlan(const SnapHyper& h, std::uint64_t master_seed, std::size_t e)
        : hyper(&h), base(Rng(master_seed).child(11)), epoch(e) {}

    std::vector<DropoutMask> masks(const LstmStack& stack, int month_idx,
                                   std::uint64_t slot) const {
        const std::uint64_t key = (static_cast<std::uint64_t>(epoch) << 42) ^
                                  (static_cast<std::uint64_t>(month_idx) << 21) ^ slot;
        Rng r = base.child(key);
        std::vector<DropoutMask> ms;
        ms.reserve(stack.layers.size());
        for (const auto& l : stack.layers)
            ms.push_back(DropoutMask::sample(r, l.input_dim, hyper->dropout_keep));
        return ms;
    }
};

// Forward (+ optional backward) over one month group. Returns the group's
// weighted squared-error sum; adds gradients into `grad` when non-null.
double process_month_group(const SnapModel& model, const data::PanelDataset& ds,
                           const MonthGroup& g,
                           const std::map<std::size_t, double>& weight_of_row,
                           const ParamLayout& lay, std::vector<double>* grad,
                           const DropoutPlan* dropout,
                           std::vector<PredictionRow>* pred_out) {
    const std::size_t W = model.hyper.window;
    const Seq lam_window = common_window(ds, g.month_idx, W);

    const bool want_cache = grad != nullptr;
    const bool use_dropout = dropout != nullptr && model.hyper.dropout_keep < 1.0;

    LstmCache lam_cache;
    std::vector<DropoutMask> lam_masks;
    if (use_dropout)
        lam_masks = dropout->masks(model.lambda.stack, g.month_idx, (1ULL << 20) - 1);
    auto lam_h = lstm_forward(model.lambda.stack, lam_window, lam_masks,
                              want_cache ? &lam_cache : nullptr);
    const double lam_out = kernels::dot(model.lambda.head_w.data(), lam_h.data(),
                                        lam_h.size()) + model.lambda.head_b;

    double loss_sum = 0.0;
    double d_lam_out = 0.0;

    for (std::size_t k = 0; k < g.rows.size(); ++k) {
        const std::size_t r = g.rows[k];
        const Seq sw = stock_window(ds, r, W);

        LstmCache a_cache, b_cache;
        std::vector<DropoutMask> a_masks, b_masks;
        if (use_dropout) {
            const std::uint64_t slot = static_cast<std::uint64_t>(k);
            a_masks = dropout->masks(model.alpha.stack, g.month_idx, slot * 2);
            b_masks = dropout->masks(model.beta.stack, g.month_idx, slot * 2 + 1);
        }

        double a_out = 0.0;
        std::vector<double> a_h;
        if (!model.masked) {
            a_h = lstm_forward(model.alpha.stack, sw, a_masks,
                               want_cache ? &a_cache : nullptr);
            a_out = kernels::dot(model.alpha.head_w.data(), a_h.data(), a_h.size()) +
                    model.alpha.head_b;
        }
        auto b_h = lstm_forward(model.beta.stack, sw, b_masks,
                                want_cache ? &b_cache : nullptr);
        const double b_out = kernels::dot(model.beta.head_w.data(), b_h.data(),
                                          b_h.size()) + model.beta.head_b;

        const double pred = model.masked ? b_out * lam_out : a_out + b_out * lam_out;
        const double target = ds.rows[r].excess_return;
        const double err = target - pred;
        const double w = weight_of_row.at(r);
        loss_sum += w * err * err;

        if (pred_out)
            (*pred_out)[k] = {ds.rows[r].stock_id, ds.rows[r].month, target, pred,
                              target - pred, kNaN};

        if (grad) {
            const double dpred = -2.0 * w * err;
            if (lay.alpha_trainable)
                accumulate_branch(model.alpha, a_cache, a_h, dpred, lay.alpha_off, *grad);
            accumulate_branch(model.beta, b_cache, b_h, dpred * lam_out, lay.beta_off,
                              *grad);
            d_lam_out += dpred * b_out;
        }
    }

    if (grad)
        accumulate_branch(model.lambda, lam_cache, lam_h, d_lam_out, lay.lambda_off,
                          *grad);
    return loss_sum;
}

// Stripe-parallel batch pass; reduction in stripe order keeps results
// identical for any thread count.
double process_rows(const SnapModel& model, const data::PanelDataset& ds,
                    std::span<const std::size_t> row_ids, std::vector<double>* grad,
                    const DropoutPlan* dropout, int threads) {
    if (row_ids.empty()) throw InputError("snap: empty row set");
    auto groups = group_by_month(ds, row_ids);
    std::map<std::size_t, double> weights;
    eq_weights(ds, row_ids, weights);
    const ParamLayout lay = layout_of(model);

    const std::size_t n_stripes = std::min<std::size_t>(kGradStripes, groups.size());
    std::vector<double> stripe_loss(n_stripes, 0.0);
    std::vector<std::vector<double>> stripe_grad(
        grad ? n_stripes : 0, std::vector<double>(grad ? lay.total : 0, 0.0));

    run_stripes(n_stripes, threads, [&](std::size_t s) {
        for (std::size_t gi = s; gi < groups.size(); gi += n_stripes)
            stripe_loss[s] += process_month_group(model, ds, groups[gi], weights, lay,
                                                  grad ? &stripe_grad[s] : nullptr,
                                                  dropout, nullptr);
    });

    double loss = 0.0;
    for (std::size_t s = 0; s < n_stripes; ++s) loss += stripe_loss[s];
    if (grad) {
        grad->assign(lay.total, 0.0);
        for (std::size_t s = 0; s < n_stripes; ++s)
            kernels::axpy(lay.total, 1.0, stripe_grad[s].data(), grad->data());
    }
    if (!std::isfinite(loss)) throw NumericError("snap: non-finite loss");
    return loss;
}

} // namespace

double snap_loss(const SnapModel& model, const data::PanelDataset& ds,
                 std::span<const std::size_t> row_ids) {
    return process_rows(model, ds, row_ids, nullptr, nullptr, model.hyper.threads);
}

double loss_and_gradient(SnapModel& model, const data::PanelDataset& ds,
                         std::span<const std::size_t> row_ids, std::vector<double>& grad) {
    return process_rows(model, ds, row_ids, &grad, nullptr, model.hyper.threads);
}

// ---------------------------------------------------------------------------
// Evaluation panels
// ---------------------------------------------------------------------------

PredictionPanel evaluate_panel(const SnapModel& model, const data::PanelDataset& ds,
                               data::Split split, int threads) {
    auto row_ids = ds.split_rows(split);
    if (row_ids.empty())
        throw InputError(std::string("evaluate_panel: empty split ") +
                         data::split_name(split));
    auto groups = group_by_month(ds, row_ids);
    const ParamLayout lay = layout_of(model);

    std::map<std::size_t, double> weights;
    for (auto r : row_ids) weights[r] = 0.0; // unused in prediction-only mode

    std::vector<std::vector<PredictionRow>> per_group(groups.size());
    for (std::size_t gi = 0; gi < groups.size(); ++gi)
        per_group[gi].resize(groups[gi].rows.size());

    const std::size_t n_stripes = std::min<std::size_t>(kGradStripes, groups.size());
    run_stripes(n_stripes, threads, [&](std::size_t s) {
        for (std::size_t gi = s; gi < groups.size(); gi += n_stripes)
            process_month_group(model, ds, groups[gi], weights, lay, nullptr, nullptr,
                                &per_group[gi]);
    });

    PredictionPanel panel;
    panel.rows.reserve(row_ids.size());
    for (auto& g : per_group)
        panel.rows.insert(panel.rows.end(), g.begin(), g.end());
    std::sort(panel.rows.begin(), panel.rows.end(), [](const auto& a, const auto& b) {
        if (a.stock_id != b.stock_id) return a.stock_id < b.stock_id;
        return a.month < b.month;
    });
    return panel;
}

std::vector<double> PredictionPanel::residuals() const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.residual);
    return out;
}

std::vector<double> PredictionPanel::alphas() const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.alpha_hat);
    return out;
}

PredictionPanel estimate_alpha(const PredictionPanel& unmasked,
                               const PredictionPanel& masked) {
    if (unmasked.rows.size() != masked.rows.size())
        throw AlignmentError("estimate_alpha: panels differ in size");
    PredictionPanel out = unmasked;
    for (std::size_t i = 0; i < out.rows.size(); ++i) {
        const auto& u = unmasked.rows[i];
        const auto& m = masked.rows[i];
        if (u.stock_id != m.stock_id || u.month != m.month)
            throw AlignmentError("estimate_alpha: key mismatch at row " +
                                 std::to_string(i));
        out.rows[i].alpha_hat = m.residual - u.residual;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

TrainResult train_snap(const data::PanelDataset& ds, const SnapHyper& hyper, bool masked) {
    hyper.validate();
    if (!ds.preprocessed)
        throw InputError("train_snap: dataset must be preprocessed first");

    SnapModel model = init_model(hyper, ds.n_chars, ds.n_chars + ds.n_macro, masked);

    auto train_rows = ds.split_rows(data::Split::train);
    auto val_rows = ds.split_rows(data::Split::validate);
    if (train_rows.empty()) throw InputError("train_snap: empty training split");
    if (val_rows.empty()) throw InputError("train_snap: empty validation split");

    // Distinct training months, each with its sample rows.
    std::vector<int> train_months;
    for (std::size_t mi = 0; mi < ds.months.size(); ++mi)
        if (ds.split_of(ds.months[mi]) == data::Split::train &&
            !ds.month_rows[mi].empty())
            train_months.push_back(static_cast<int>(mi));

    ParamRefs refs = ParamRefs::trainable(model);
    std::vector<double> flat_params = refs.gather();
    AdamState adam(refs.total());
    std::vector<double> grad;

    Rng root(hyper.seed);
    Rng shuffle_base = root.child(10);

    TrainResult result;
    std::vector<double> best_params = flat_params;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t bad_epochs = 0;

    for (std::size_t epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
        std::vector<int> order = train_months;
        Rng shuffle_rng = shuffle_base.child(epoch);
        shuffle(shuffle_rng, order);

        DropoutPlan dropout(model.hyper, hyper.seed, epoch);

        double epoch_loss = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += hyper.batch_months) {
            const std::size_t stop = std::min(order.size(), start + hyper.batch_months);
            std::vector<std::size_t> batch_rows;
            for (std::size_t q = start; q < stop; ++q)
                for (auto r : ds.month_rows[order[q]]) batch_rows.push_back(r);

            const double batch_loss = process_rows(
                model, ds, batch_rows, &grad,
                model.hyper.dropout_keep < 1.0 ? &dropout : nullptr, hyper.threads);
            clip_global_norm(grad, hyper.grad_clip);
            adam_step(flat_params, grad, adam, hyper.learning_rate, hyper.adam_beta1,
                      hyper.adam_beta2, hyper.adam_eps);
            refs.scatter(flat_params);
            epoch_loss += batch_loss;
            ++n_batches;
        }

        const double train_loss = epoch_loss / static_cast<double>(n_batches);
        const double val_loss = snap_loss(model, ds, val_rows);
        result.log.push_back({epoch, train_loss, val_loss, hyper.learning_rate});

        if (val_loss < best_val) {
            best_val = val_loss;
            best_params = flat_params;
            result.best_epoch = epoch;
            bad_epochs = 0;
        } else {
            ++bad_epochs;
            if (bad_epochs > hyper.patience) break;
        }
    }

    refs.scatter(best_params);
    result.model = std::move(model);
    result.best_val_loss = best_val;
    return result;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

nlohmann::json branch_to_json(const BranchParams& b) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : b.stack.layers) {
        layers.push_back({{"input_dim", l.input_dim},
                          {"hidden_dim", l.hidden_dim},
                          {"W", l.W.data},
                          {"b", l.b}});
    }
    return {{"layers", layers}, {"head_w", b.head_w}, {"head_b", b.head_b}};
}

BranchParams branch_from_json(const nlohmann::json& j, const LstmOptions& opts) {
    BranchParams b;
    b.stack.opts = opts;
    for (const auto& lj : j.at("layers")) {
        LstmLayerParams l;
        l.input_dim = lj.at("input_dim").get<std::size_t>();
        l.hidden_dim = lj.at("hidden_dim").get<std::size_t>();
        l.W = Matrix(l.input_dim + l.hidden_dim, 4 * l.hidden_dim);
        l.W.data = lj.at("W").get<std::vector<double>>();
        if (l.W.data.size() != l.W.rows * l.W.cols)
            throw ParseError("checkpoint: W size mismatch");
        l.b = lj.at("b").get<std::vector<double>>();
        if (l.b.size() != 4 * l.hidden_dim) throw ParseError("checkpoint: b size mismatch");
        if (!l.W.all_finite()) throw NumericError("checkpoint: non-finite weights");
        b.stack.layers.push_back(std::move(l));
    }
    b.head_w = j.at("head_w").get<std::vector<double>>();
    b.head_b = j.at("head_b").get<double>();
    return b;
}

nlohmann::json hyper_to_json(const SnapHyper& h) {
    return {{"hidden_dim", h.hidden_dim},
            {"lambda_hidden_dim", h.lambda_hidden_dim},
            {"layers", h.layers},
            {"window", h.window},
            {"dropout_keep", h.dropout_keep},
            {"learning_rate", h.learning_rate},
            {"adam_beta1", h.adam_beta1},
            {"adam_beta2", h.adam_beta2},
            {"adam_eps", h.adam_eps},
            {"batch_months", h.batch_months},
            {"max_epochs", h.max_epochs},
            {"patience", h.patience},
            {"grad_clip", h.grad_clip},
            {"seed", h.seed},
            {"gate_act", h.gate_act == GateActivation::relu ? "relu" : "sigmoid"},
            {"gate_cap", h.gate_cap},
            {"forget_bias", h.forget_bias}};
}

SnapHyper hyper_from_json(const nlohmann::json& j) {
    SnapHyper h;
    h.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    h.lambda_hidden_dim = j.at("lambda_hidden_dim").get<std::size_t>();
    h.layers = j.at("layers").get<std::size_t>();
    h.window = j.at("window").get<std::size_t>();
    h.dropout_keep = j.at("dropout_keep").get<double>();
    h.learning_rate = j.at("learning_rate").get<double>();
    h.adam_beta1 = j.at("adam_beta1").get<double>();
    h.adam_beta2 = j.at("adam_beta2").get<double>();
    h.adam_eps = j.at("adam_eps").get<double>();
    h.batch_months = j.at("batch_months").get<std::size_t>();
    h.max_epochs = j.at("max_epochs").get<std::size_t>();
    h.patience = j.at("patience").get<std::size_t>();
    h.grad_clip = j.at("grad_clip").get<double>();
    h.seed = j.at("seed").get<std::uint64_t>();
    h.gate_act = j.at("gate_act").get<std::string>() == "sigmoid" ? GateActivation::sigmoid
                                                                  : GateActivation::relu;
    h.gate_cap = j.at("gate_cap").get<double>();
    h.forget_bias = j.at("forget_bias").get<double>();
    return h;
}

} // namespace

void save_checkpoint(const SnapModel& model, const std::string& path) {
    nlohmann::json j;
    j["format"] = "snap-checkpoint";
    j["version"] = 1;
    j["masked"] = model.masked;
    j["n_chars"] = model.n_chars;
    j["n_common"] = model.n_common;
    j["hyper"] = hyper_to_json(model.hyper);
    j["seed_lineage"] = {{"master", model.hyper.seed},
                         {"alpha_stream", 1},
                         {"beta_stream", 2},
                         {"lambda_stream", 3}};
    j["branches"] = {{"alpha", branch_to_json(model.alpha)},
                     {"beta", branch_to_json(model.beta)},
                     {"lambda", branch_to_json(model.lambda)}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << j.dump(1, '\t') << '\n';
}

SnapModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    if (j.value("format", "") != "snap-checkpoint")
        throw ParseError(path + ": not a snap checkpoint");
    if (j.at("version").get<int>() != 1)
        throw ParseError(path + ": unsupported checkpoint version");
    SnapModel m;
    m.masked = j.at("masked").get<bool>();
    m.n_chars = j.at("n_chars").get<std::size_t>();
    m.n_common = j.at("n_common").get<std::size_t>();
    m.hyper = hyper_from_json(j.at("hyper"));
    LstmOptions opts{m.hyper.gate_act, m.hyper.gate_cap};
    m.alpha = branch_from_json(j.at("branches").at("alpha"), opts);
    m.beta = branch_from_json(j.at("branches").at("beta"), opts);
    m.lambda = branch_from_json(j.at("branches").at("lambda"), opts);
    return m;
}

void save_train_log(const TrainResult& result, std::uint64_t seed, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& e : result.log)
        rows.push_back({csv::fmt(static_cast<long long>(e.epoch)), csv::fmt(e.train_loss),
                        csv::fmt(e.val_loss), csv::fmt(e.lr),
                        std::to_string(seed)});
    csv::write_file(path, {"epoch", "train_loss", "val_loss", "lr", "seed"}, rows);
}

// Prediction panel files (consumed by the test-alpha and cluster commands).

void save_prediction_panel(const PredictionPanel& panel, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(panel.rows.size());
    for (const auto& r : panel.rows)
        rows.push_back({csv::fmt(static_cast<long long>(r.stock_id)),
                        data::format_month(r.month), csv::fmt(r.realized),
                        csv::fmt(r.predicted), csv::fmt(r.residual),
                        csv::fmt(r.alpha_hat)});
    csv::write_file(path,
                    {"stock_id", "month", "realized", "predicted", "residual", "alpha_hat"},
                    rows);
}

PredictionPanel load_prediction_panel(const std::string& path) {
    auto t = csv::read_file(path);
    const std::vector<std::string> want = {"stock_id", "month",    "realized",
                                           "predicted", "residual", "alpha_hat"};
    if (t.header != want) throw ParseError(path + ": bad prediction panel header");
    PredictionPanel p;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& f = t.rows[i];
        const std::string ctx = path + ":" + std::to_string(i + 2);
        PredictionRow r;
        r.stock_id = static_cast<int>(csv::parse_int(f[0], ctx));
        r.month = data::parse_month(f[1]);
        r.realized = csv::parse_double(f[2], ctx);
        r.predicted = csv::parse_double(f[3], ctx);
        r.residual = csv::parse_double(f[4], ctx);
        r.alpha_hat = csv::parse_double(f[5], ctx);
        p.rows.push_back(r);
    }
    return p;
}

} // namespace snap
