#include <algorithm>
#include <cmath>
#include <random>

#include "uqbot/error.hpp"
#include "uqbot/kernels.hpp"
#include "uqbot/model.hpp"

namespace uqbot {
namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

DropoutMasks DropoutMasks::draw(const ArchConfig& arch, Rng& rng) {
  DropoutMasks m;
  m.lstm_input.resize(arch.lstm_steps() * arch.lstm_input_size());
  m.lstm_output.resize(arch.hidden_size);
  const double keep_scale = 1.0 / (1.0 - arch.dropout_rate);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& v : m.lstm_input) v = u(rng) < arch.dropout_rate ? 0.0 : keep_scale;
  for (double& v : m.lstm_output) v = u(rng) < arch.dropout_rate ? 0.0 : keep_scale;
  return m;
}

struct Evaluator::Impl {
  explicit Impl(const ArchConfig& a)
      : arch(a),
        layout(a),
        n_in(a.n_features),
        steps(a.lstm_steps()),
        in(a.lstm_input_size()),
        hid(a.hidden_size),
        emb_dim(a.embed_dim),
        cnn(a.kind == ArchKind::cnn_lstm),
        filters(cnn ? a.conv_filters : 0),
        ksize(cnn ? a.conv_kernel : 0),
        pad(cnn ? (a.conv_kernel - 1) / 2 : 0) {
    off_ew = layout.find("embed.weight").offset;
    off_eb = layout.find("embed.bias").offset;
    if (cnn) {
      off_cw = layout.find("conv.weight").offset;
      off_cb = layout.find("conv.bias").offset;
    }
    off_wih = layout.find("lstm.weight_ih").offset;
    off_whh = layout.find("lstm.weight_hh").offset;
    off_lb = layout.find("lstm.bias").offset;
    off_dw = layout.find("dense.weight").offset;
    off_db = layout.find("dense.bias").offset;

    emb.resize(n_in * emb_dim);
    if (cnn) {
      patch.resize(n_in * emb_dim * ksize);
      conv_pre.resize(n_in * filters);
      conv_act.resize(n_in * filters);
      pool_arg.resize(steps * filters);
      dact.resize(n_in * filters);
      dpre.resize(filters);
      dpatch.resize(emb_dim * ksize);
    }
    seq.resize(steps * in);
    u.resize(steps * in);
    gates.resize(steps * 4 * hid);
    cell.resize((steps + 1) * hid);
    hidden.resize((steps + 1) * hid);
    tanh_c.resize(steps * hid);
    hd.resize(hid);
    dz.resize(4 * hid);
    dh.resize(hid);
    dh_prev.resize(hid);
    dc.resize(hid);
    du.resize(steps * in);
    de.resize(n_in * emb_dim);
  }

  std::span<const double> w(const ModelParams& p, std::size_t off, std::size_t n) const {
    return p.values().subspan(off, n);
  }

  void check(const ModelParams& p, std::span<const double> x) const {
    if (x.size() != n_in) {
      throw Error(ErrorCode::FeatureLengthMismatch, "model expects " + std::to_string(n_in) +
                                                        " features, got " +
                                                        std::to_string(x.size()));
    }
    if (!(p.arch() == arch)) {
      throw Error(ErrorCode::InvalidArch, "parameters built for a different architecture");
    }
  }

  void run_forward(const ModelParams& p, std::span<const double> x, const DropoutMasks* masks) {
    check(p, x);
    const double* W = p.values().data();
    for (std::size_t t = 0; t < n_in; ++t) {
      for (std::size_t j = 0; j < emb_dim; ++j) {
        emb[t * emb_dim + j] = W[off_ew + j] * x[t] + W[off_eb + j];
      }
    }

    if (cnn) {
      const std::size_t pk = emb_dim * ksize;
      std::fill(patch.begin(), patch.end(), 0.0);
      for (std::size_t t = 0; t < n_in; ++t) {
        double* pt = patch.data() + t * pk;
        for (std::size_t j = 0; j < emb_dim; ++j) {
          for (std::size_t k = 0; k < ksize; ++k) {
            const std::ptrdiff_t src = std::ptrdiff_t(t + k) - std::ptrdiff_t(pad);
            if (src >= 0 && src < std::ptrdiff_t(n_in)) pt[j * ksize + k] = emb[src * emb_dim + j];
          }
        }
        std::span<double> pre(conv_pre.data() + t * filters, filters);
        std::copy_n(W + off_cb, filters, pre.begin());
        kernels::gemv(w(p, off_cw, filters * pk), filters, pk, {pt, pk}, pre);
        for (std::size_t c = 0; c < filters; ++c) {
          conv_act[t * filters + c] = std::max(0.0, pre[c]);
        }
      }
      const std::size_t pool = arch.pool_size;
      for (std::size_t s = 0; s < steps; ++s) {
        for (std::size_t c = 0; c < filters; ++c) {
          std::size_t best = s * pool;
          for (std::size_t t = s * pool + 1; t < (s + 1) * pool; ++t) {
            if (conv_act[t * filters + c] > conv_act[best * filters + c]) best = t;
          }
          pool_arg[s * filters + c] = best;
          seq[s * filters + c] = conv_act[best * filters + c];
        }
      }
    } else {
      std::copy(emb.begin(), emb.end(), seq.begin());
    }

    if (masks) {
      for (std::size_t k = 0; k < u.size(); ++k) u[k] = seq[k] * masks->lstm_input[k];
    } else {
      std::copy(seq.begin(), seq.end(), u.begin());
    }

    std::fill_n(cell.begin(), hid, 0.0);
    std::fill_n(hidden.begin(), hid, 0.0);
    const auto wih = w(p, off_wih, 4 * hid * in);
    const auto whh = w(p, off_whh, 4 * hid * hid);
    for (std::size_t s = 0; s < steps; ++s) {
      std::span<double> z(gates.data() + s * 4 * hid, 4 * hid);
      std::copy_n(W + off_lb, 4 * hid, z.begin());
      kernels::gemv(wih, 4 * hid, in, {u.data() + s * in, in}, z);
      kernels::gemv(whh, 4 * hid, hid, {hidden.data() + s * hid, hid}, z);
      const double* c_prev = cell.data() + s * hid;
      double* c_next = cell.data() + (s + 1) * hid;
      double* h_next = hidden.data() + (s + 1) * hid;
      for (std::size_t k = 0; k < hid; ++k) {
        const double ig = sigmoid(z[k]);
        const double fg = sigmoid(z[hid + k]);
        const double gg = std::tanh(z[2 * hid + k]);
        const double og = sigmoid(z[3 * hid + k]);
        z[k] = ig;
        z[hid + k] = fg;
        z[2 * hid + k] = gg;
        z[3 * hid + k] = og;
        c_next[k] = fg * c_prev[k] + ig * gg;
        tanh_c[s * hid + k] = std::tanh(c_next[k]);
        h_next[k] = og * tanh_c[s * hid + k];
      }
    }

    const double* h_last = hidden.data() + steps * hid;
    for (std::size_t k = 0; k < hid; ++k) {
      hd[k] = masks ? h_last[k] * masks->lstm_output[k] : h_last[k];
    }
    logits[0] = W[off_db];
    logits[1] = W[off_db + 1];
    kernels::gemv(w(p, off_dw, 2 * hid), 2, hid, hd, logits);
    const double m = std::max(logits[0], logits[1]);
    const double e0 = std::exp(logits[0] - m);
    const double e1 = std::exp(logits[1] - m);
    probs = {e0 / (e0 + e1), e1 / (e0 + e1)};
  }

  double run_backward(const ModelParams& p, std::span<const double> x, int y, Gradient& g,
                      double scale, const DropoutMasks* masks) {
    const double py = probs[static_cast<std::size_t>(y)];
    const double loss = -std::log(std::max(py, kProbFloor));
    if (py < kProbFloor) return loss;  // clamped region: the loss is flat

    double* G = g.values().data();
    const auto wih = w(p, off_wih, 4 * hid * in);
    const auto whh = w(p, off_whh, 4 * hid * hid);

    std::array<double, 2> dlog{scale * (probs[0] - (y == 0 ? 1.0 : 0.0)),
                               scale * (probs[1] - (y == 1 ? 1.0 : 0.0))};
    G[off_db] += dlog[0];
    G[off_db + 1] += dlog[1];
    kernels::ger(1.0, dlog, hd, {G + off_dw, 2 * hid});
    std::fill(dh.begin(), dh.end(), 0.0);
    kernels::gemv_t(w(p, off_dw, 2 * hid), 2, hid, dlog, dh);
    if (masks) {
      for (std::size_t k = 0; k < hid; ++k) dh[k] *= masks->lstm_output[k];
    }

    std::fill(dc.begin(), dc.end(), 0.0);
    for (std::size_t s = steps; s-- > 0;) {
      const double* gt = gates.data() + s * 4 * hid;
      const double* c_prev = cell.data() + s * hid;
      for (std::size_t k = 0; k < hid; ++k) {
        const double ig = gt[k], fg = gt[hid + k], gg = gt[2 * hid + k], og = gt[3 * hid + k];
        const double tc = tanh_c[s * hid + k];
        const double dct = dc[k] + dh[k] * og * (1.0 - tc * tc);
        dz[k] = dct * gg * ig * (1.0 - ig);
        dz[hid + k] = dct * c_prev[k] * fg * (1.0 - fg);
        dz[2 * hid + k] = dct * ig * (1.0 - gg * gg);
        dz[3 * hid + k] = dh[k] * tc * og * (1.0 - og);
        dc[k] = dct * fg;
      }
      for (std::size_t k = 0; k < 4 * hid; ++k) G[off_lb + k] += dz[k];
      std::span<const double> u_s(u.data() + s * in, in);
      std::span<const double> h_s(hidden.data() + s * hid, hid);
      kernels::ger(1.0, dz, u_s, {G + off_wih, 4 * hid * in});
      kernels::ger(1.0, dz, h_s, {G + off_whh, 4 * hid * hid});
      std::span<double> du_s(du.data() + s * in, in);
      std::fill(du_s.begin(), du_s.end(), 0.0);
      kernels::gemv_t(wih, 4 * hid, in, dz, du_s);
      std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
      kernels::gemv_t(whh, 4 * hid, hid, dz, dh_prev);
      std::swap(dh, dh_prev);
    }
    if (masks) {
      for (std::size_t k = 0; k < du.size(); ++k) du[k] *= masks->lstm_input[k];
    }

    if (cnn) {
      const std::size_t pk = emb_dim * ksize;
      std::fill(dact.begin(), dact.end(), 0.0);
      for (std::size_t s = 0; s < steps; ++s) {
        for (std::size_t c = 0; c < filters; ++c) {
          dact[pool_arg[s * filters + c] * filters + c] += du[s * filters + c];
        }
      }
      std::fill(de.begin(), de.end(), 0.0);
      const auto cw = w(p, off_cw, filters * pk);
      for (std::size_t t = 0; t < n_in; ++t) {
        bool any = false;
        for (std::size_t c = 0; c < filters; ++c) {
          dpre[c] = conv_pre[t * filters + c] > 0.0 ? dact[t * filters + c] : 0.0;
          any = any || dpre[c] != 0.0;
        }
        if (!any) continue;
        for (std::size_t c = 0; c < filters; ++c) G[off_cb + c] += dpre[c];
        std::span<const double> pt(patch.data() + t * pk, pk);
        kernels::ger(1.0, dpre, pt, {G + off_cw, filters * pk});
        std::fill(dpatch.begin(), dpatch.end(), 0.0);
        kernels::gemv_t(cw, filters, pk, dpre, dpatch);
        for (std::size_t j = 0; j < emb_dim; ++j) {
          for (std::size_t k = 0; k < ksize; ++k) {
            const std::ptrdiff_t src = std::ptrdiff_t(t + k) - std::ptrdiff_t(pad);
            if (src >= 0 && src < std::ptrdiff_t(n_in)) {
              de[src * emb_dim + j] += dpatch[j * ksize + k];
            }
          }
        }
      }
    } else {
      std::copy(du.begin(), du.end(), de.begin());
    }

    for (std::size_t t = 0; t < n_in; ++t) {
      for (std::size_t j = 0; j < emb_dim; ++j) {
        G[off_ew + j] += de[t * emb_dim + j] * x[t];
        G[off_eb + j] += de[t * emb_dim + j];
      }
    }
    return loss;
  }

  ArchConfig arch;
  ParamLayout layout;
  std::size_t n_in, steps, in, hid, emb_dim;
  bool cnn;
  std::size_t filters, ksize, pad;
  std::size_t off_ew = 0, off_eb = 0, off_cw = 0, off_cb = 0, off_wih = 0, off_whh = 0,
              off_lb = 0, off_dw = 0, off_db = 0;

  std::vector<double> emb, patch, conv_pre, conv_act, seq, u, gates, cell, hidden, tanh_c, hd;
  std::vector<std::size_t> pool_arg;
  std::array<double, 2> logits{}, probs{};
  std::vector<double> dz, dh, dh_prev, dc, du, de, dact, dpre, dpatch;
};

Evaluator::Evaluator(const ArchConfig& arch) : impl_(std::make_unique<Impl>(arch)) {}
Evaluator::~Evaluator() = default;
Evaluator::Evaluator(Evaluator&&) noexcept = default;
Evaluator& Evaluator::operator=(Evaluator&&) noexcept = default;

const ArchConfig& Evaluator::arch() const noexcept { return impl_->arch; }

PredictionDist Evaluator::forward(const ModelParams& p, std::span<const double> x,
                                  const DropoutMasks* masks) {
  impl_->run_forward(p, x, masks);
  return PredictionDist{impl_->probs};
}

double Evaluator::accumulate_gradient(const ModelParams& p, std::span<const double> x, int y,
                                      Gradient& grad, double scale, const DropoutMasks* masks) {
  if (y != 0 && y != 1) throw Error(ErrorCode::NonBinaryLabel, "label " + std::to_string(y));
  impl_->run_forward(p, x, masks);
  return impl_->run_backward(p, x, y, grad, scale, masks);
}

PredictionDist forward(const ModelParams& p, std::span<const double> x, Mode mode, Rng* rng) {
  Evaluator ev(p.arch());
  if (mode == Mode::train) {
    if (!rng) throw Error(ErrorCode::InvalidSpec, "train-mode forward needs a random stream");
    const DropoutMasks masks = DropoutMasks::draw(p.arch(), *rng);
    return ev.forward(p, x, &masks);
  }
  return ev.forward(p, x);
}

double loss(const ModelParams& p, std::span<const double> x, int y) {
  if (y != 0 && y != 1) throw Error(ErrorCode::NonBinaryLabel, "label " + std::to_string(y));
  Evaluator ev(p.arch());
  const PredictionDist d = ev.forward(p, x);
  return -std::log(std::max(d.probs[static_cast<std::size_t>(y)], kProbFloor));
}

Gradient grad(const ModelParams& p, std::span<const double> x, int y) {
  Evaluator ev(p.arch());
  Gradient g(p.arch());
  ev.accumulate_gradient(p, x, y, g);
  return g;
}

Gradient mean_grad(const ModelParams& p, const Dataset& d, std::span<const std::size_t> rows) {
  Evaluator ev(p.arch());
  Gradient g(p.arch());
  if (rows.empty()) return g;
  const double scale = 1.0 / double(rows.size());
  for (std::size_t i : rows) {
    if (i >= d.size()) throw Error(ErrorCode::BadIndex, "row " + std::to_string(i));
    ev.accumulate_gradient(p, d.row(i), d.label(i), g, scale);
  }
  return g;
}

std::vector<PredictionDist> predict_batch(const ModelParams& p, const Dataset& d) {
  std::vector<PredictionDist> out;
  out.reserve(d.size());
  if (d.empty()) return out;
  Evaluator ev(p.arch());
  for (std::size_t i = 0; i < d.size(); ++i) out.push_back(ev.forward(p, d.row(i)));
  return out;
}

std::vector<int> predict_labels(const ModelParams& p, const Dataset& d) {
  std::vector<int> out;
  out.reserve(d.size());
  for (const auto& pd : predict_batch(p, d)) out.push_back(pd.argmax());
  return out;
}

double accuracy(const ModelParams& p, const Dataset& d) {
  if (d.empty()) return 0.0;
  const auto preds = predict_labels(p, d);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < d.size(); ++i) ok += preds[i] == d.label(i) ? 1 : 0;
  return double(ok) / double(d.size());
}

}  // namespace uqbot
