#include "crs/head.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "crs/errors.hpp"
#include "crs/strings.hpp"

namespace crs {

namespace {

template <typename Real>
Dense<Real> dense(std::size_t in, std::size_t out) {
  return Dense<Real>{in, out, std::vector<Real>(in * out, Real(0)), std::vector<Real>(out, Real(0))};
}

template <typename Real>
BatchNorm<Real> batch_norm(std::size_t n) {
  return BatchNorm<Real>{std::vector<Real>(n, Real(1)), std::vector<Real>(n, Real(0)), std::vector<Real>(n, Real(0)),
                         std::vector<Real>(n, Real(1))};
}

template <typename Real>
void init_dense(Dense<Real>& d, Rng& rng) {
  if (d.in == 0) return;
  const double bound = 1.0 / std::sqrt(static_cast<double>(d.in));
  for (auto& w : d.weight) w = static_cast<Real>(rng.uniform(-bound, bound));
  for (auto& b : d.bias) b = static_cast<Real>(rng.uniform(-bound, bound));
}

// out(B, d.out) = in(B, d.in) * W^T + b
template <typename Real>
void affine(const Dense<Real>& d, const std::vector<Real>& in, std::size_t batch, std::vector<Real>& out) {
  out.assign(batch * d.out, Real(0));
  for (std::size_t b = 0; b < batch; ++b) {
    const Real* x = &in[b * d.in];
    for (std::size_t o = 0; o < d.out; ++o) {
      const Real* w = &d.weight[o * d.in];
      Real acc = d.bias[o];
      for (std::size_t i = 0; i < d.in; ++i) acc += w[i] * x[i];
      out[b * d.out + o] = acc;
    }
  }
}

// Accumulates dW, db for `d` and returns d(loss)/d(in).
template <typename Real>
std::vector<Real> affine_backward(const Dense<Real>& d, const std::vector<Real>& in, const std::vector<Real>& dout,
                                  std::size_t batch, Dense<Real>& grad) {
  std::vector<Real> din(batch * d.in, Real(0));
  for (std::size_t b = 0; b < batch; ++b) {
    const Real* x = &in[b * d.in];
    Real* dx = &din[b * d.in];
    for (std::size_t o = 0; o < d.out; ++o) {
      const Real g = dout[b * d.out + o];
      if (g == Real(0)) continue;
      grad.bias[o] += g;
      Real* dw = &grad.weight[o * d.in];
      const Real* w = &d.weight[o * d.in];
      for (std::size_t i = 0; i < d.in; ++i) {
        dw[i] += g * x[i];
        dx[i] += g * w[i];
      }
    }
  }
  return din;
}

template <typename Real>
void batch_norm_forward(const BatchNorm<Real>& bn, const std::vector<Real>& pre, std::size_t batch, std::size_t width,
                        Mode mode, double eps, HeadActivations<Real>& acts, std::vector<Real>& xhat,
                        std::vector<Real>& inv_std, std::vector<Real>& mean_out, std::vector<Real>& var_out,
                        std::vector<Real>& y) {
  xhat.assign(batch * width, Real(0));
  inv_std.assign(width, Real(0));
  mean_out.assign(width, Real(0));
  var_out.assign(width, Real(0));
  y.assign(batch * width, Real(0));
  (void)acts;
  for (std::size_t j = 0; j < width; ++j) {
    Real mean, var;
    if (mode == Mode::kTrain) {
      Real sum = 0;
      for (std::size_t b = 0; b < batch; ++b) sum += pre[b * width + j];
      mean = sum / static_cast<Real>(batch);
      Real ss = 0;
      for (std::size_t b = 0; b < batch; ++b) {
        const Real dv = pre[b * width + j] - mean;
        ss += dv * dv;
      }
      var = ss / static_cast<Real>(batch);
    } else {
      mean = bn.running_mean[j];
      var = bn.running_var[j];
    }
    mean_out[j] = mean;
    var_out[j] = var;
    inv_std[j] = Real(1) / std::sqrt(var + static_cast<Real>(eps));
    for (std::size_t b = 0; b < batch; ++b) {
      const Real xh = (pre[b * width + j] - mean) * inv_std[j];
      xhat[b * width + j] = xh;
      y[b * width + j] = bn.gamma[j] * xh + bn.beta[j];
    }
  }
}

template <typename Real>
std::vector<Real> batch_norm_backward(const BatchNorm<Real>& bn, const std::vector<Real>& xhat,
                                      const std::vector<Real>& inv_std, const std::vector<Real>& dy,
                                      std::size_t batch, std::size_t width, Mode mode, BatchNorm<Real>& grad) {
  std::vector<Real> dpre(batch * width, Real(0));
  const auto n = static_cast<Real>(batch);
  for (std::size_t j = 0; j < width; ++j) {
    Real sum_dy = 0, sum_dy_xhat = 0;
    for (std::size_t b = 0; b < batch; ++b) {
      sum_dy += dy[b * width + j];
      sum_dy_xhat += dy[b * width + j] * xhat[b * width + j];
    }
    grad.beta[j] += sum_dy;
    grad.gamma[j] += sum_dy_xhat;
    const Real g = bn.gamma[j];
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t k = b * width + j;
      if (mode == Mode::kTrain) {
        // dxhat = g * dy; sums over the batch scale by g as well.
        dpre[k] = g * inv_std[j] / n * (n * dy[k] - sum_dy - xhat[k] * sum_dy_xhat);
      } else {
        dpre[k] = g * inv_std[j] * dy[k];
      }
    }
  }
  return dpre;
}

template <typename Real>
void check_finite(const std::vector<Real>& v, const char* what) {
  for (Real x : v)
    if (!std::isfinite(static_cast<double>(x))) throw DataError(std::string("non-finite intermediate in ") + what);
}

template <typename Real>
Real sigmoid(Real z) {
  if (z >= 0) return Real(1) / (Real(1) + std::exp(-z));
  const Real e = std::exp(z);
  return e / (Real(1) + e);
}

template <typename Real>
std::vector<float> to_float(const std::vector<Real>& v) {
  return std::vector<float>(v.begin(), v.end());
}

using Dims = std::vector<std::uint32_t>;
std::uint32_t u32(std::size_t v) { return static_cast<std::uint32_t>(v); }

template <typename Real>
std::vector<Real> load(const TensorArchive& ar, const std::string& name, const Dims& dims) {
  const Tensor& t = ar.get(name, dims);
  for (float v : t.data)
    if (!std::isfinite(v)) throw DataError("non-finite parameter in " + name);
  return std::vector<Real>(t.data.begin(), t.data.end());
}

}  // namespace

template <typename Real>
HeadParams<Real> HeadParams<Real>::zeros(const HeadShape& s) {
  HeadParams p;
  p.shape = s;
  p.clinical = dense<Real>(s.clinical_dim, s.clinical_dim);
  p.fc1 = dense<Real>(s.fused_dim(), s.hidden1);
  p.fc2 = dense<Real>(s.hidden1, s.hidden2);
  p.fc3 = dense<Real>(s.hidden2, 1);
  p.bn1 = batch_norm<Real>(s.hidden1);
  p.bn2 = batch_norm<Real>(s.hidden2);
  return p;
}

template <typename Real>
HeadParams<Real> HeadParams<Real>::initialize(const HeadShape& s, std::uint64_t seed) {
  HeadParams p = zeros(s);
  Rng rng = Rng::derive(seed, stream::kHeadInit, 0);
  init_dense(p.clinical, rng);
  init_dense(p.fc1, rng);
  init_dense(p.fc2, rng);
  init_dense(p.fc3, rng);
  return p;
}

template <typename Real>
TensorArchive HeadParams<Real>::to_archive() const {
  const auto& s = shape;
  TensorArchive ar;
  ar.put("clinical.weight", {u32(s.clinical_dim), u32(s.clinical_dim)}, to_float(clinical.weight));
  ar.put("clinical.bias", {u32(s.clinical_dim)}, to_float(clinical.bias));
  ar.put("fc1.weight", {u32(s.hidden1), u32(s.fused_dim())}, to_float(fc1.weight));
  ar.put("fc1.bias", {u32(s.hidden1)}, to_float(fc1.bias));
  ar.put("fc2.weight", {u32(s.hidden2), u32(s.hidden1)}, to_float(fc2.weight));
  ar.put("fc2.bias", {u32(s.hidden2)}, to_float(fc2.bias));
  ar.put("fc3.weight", {1, u32(s.hidden2)}, to_float(fc3.weight));
  ar.put("fc3.bias", {1}, to_float(fc3.bias));
  for (auto [bn, name, width] : {std::tuple{&bn1, "bn1", s.hidden1}, std::tuple{&bn2, "bn2", s.hidden2}}) {
    const std::string n = name;
    ar.put(n + ".weight", {u32(width)}, to_float(bn->gamma));
    ar.put(n + ".bias", {u32(width)}, to_float(bn->beta));
    ar.put(n + ".running_mean", {u32(width)}, to_float(bn->running_mean));
    ar.put(n + ".running_var", {u32(width)}, to_float(bn->running_var));
  }
  return ar;
}

template <typename Real>
HeadParams<Real> HeadParams<Real>::from_archive(const TensorArchive& ar, const HeadShape& s) {
  HeadParams p = zeros(s);
  p.clinical.weight = load<Real>(ar, "clinical.weight", {u32(s.clinical_dim), u32(s.clinical_dim)});
  p.clinical.bias = load<Real>(ar, "clinical.bias", {u32(s.clinical_dim)});
  p.fc1.weight = load<Real>(ar, "fc1.weight", {u32(s.hidden1), u32(s.fused_dim())});
  p.fc1.bias = load<Real>(ar, "fc1.bias", {u32(s.hidden1)});
  p.fc2.weight = load<Real>(ar, "fc2.weight", {u32(s.hidden2), u32(s.hidden1)});
  p.fc2.bias = load<Real>(ar, "fc2.bias", {u32(s.hidden2)});
  p.fc3.weight = load<Real>(ar, "fc3.weight", {1, u32(s.hidden2)});
  p.fc3.bias = load<Real>(ar, "fc3.bias", {1});
  for (auto [bn, name, width] : {std::tuple{&p.bn1, "bn1", s.hidden1}, std::tuple{&p.bn2, "bn2", s.hidden2}}) {
    const std::string n = name;
    bn->gamma = load<Real>(ar, n + ".weight", {u32(width)});
    bn->beta = load<Real>(ar, n + ".bias", {u32(width)});
    bn->running_mean = load<Real>(ar, n + ".running_mean", {u32(width)});
    bn->running_var = load<Real>(ar, n + ".running_var", {u32(width)});
    for (Real v : bn->running_var)
      if (!(v > Real(0))) throw DataError("batch-norm running variance must be > 0 in " + n);
  }
  return p;
}

template <typename Real>
template <typename Other>
HeadParams<Other> HeadParams<Real>::cast() const {
  auto conv = [](const std::vector<Real>& v) { return std::vector<Other>(v.begin(), v.end()); };
  auto conv_dense = [&](const Dense<Real>& d) { return Dense<Other>{d.in, d.out, conv(d.weight), conv(d.bias)}; };
  auto conv_bn = [&](const BatchNorm<Real>& b) {
    return BatchNorm<Other>{conv(b.gamma), conv(b.beta), conv(b.running_mean), conv(b.running_var)};
  };
  HeadParams<Other> out;
  out.shape = shape;
  out.clinical = conv_dense(clinical);
  out.fc1 = conv_dense(fc1);
  out.fc2 = conv_dense(fc2);
  out.fc3 = conv_dense(fc3);
  out.bn1 = conv_bn(bn1);
  out.bn2 = conv_bn(bn2);
  return out;
}

template <typename Real>
DropoutMasks<Real> sample_dropout(const HeadShape& shape, std::size_t batch, Rng& rng) {
  DropoutMasks<Real> m;
  const Real keep_scale = Real(1) / static_cast<Real>(1.0 - shape.dropout);
  auto fill = [&](std::vector<Real>& v, std::size_t n) {
    v.resize(n);
    for (auto& x : v) x = rng.uniform() < shape.dropout ? Real(0) : keep_scale;
  };
  fill(m.hidden1, batch * shape.hidden1);
  fill(m.hidden2, batch * shape.hidden2);
  return m;
}

template <typename Real>
HeadActivations<Real> head_forward(const HeadParams<Real>& p, const HeadInput<Real>& in, Mode mode,
                                   const DropoutMasks<Real>* masks) {
  const HeadShape& s = p.shape;
  const std::size_t B = in.batch;
  if (in.image.size() != B * s.image_dim || in.clinical.size() != B * s.clinical_dim)
    throw DataError("head input dimensions do not match the head shape");
  if (mode == Mode::kTrain && B < 2) throw DataError("train-mode batch normalization needs a batch of at least 2");

  HeadActivations<Real> a;
  a.mode = mode;
  a.batch = B;

  affine(p.clinical, in.clinical, B, a.clin_pre);
  a.fused.resize(B * s.fused_dim());
  for (std::size_t b = 0; b < B; ++b) {
    std::copy_n(&in.image[b * s.image_dim], s.image_dim, &a.fused[b * s.fused_dim()]);
    for (std::size_t i = 0; i < s.clinical_dim; ++i)
      a.fused[b * s.fused_dim() + s.image_dim + i] = std::max(Real(0), a.clin_pre[b * s.clinical_dim + i]);
  }

  auto hidden = [&](const Dense<Real>& fc, const BatchNorm<Real>& bn, const std::vector<Real>& input,
                    std::size_t width, const std::vector<Real>* mask, std::vector<Real>& pre, std::vector<Real>& xhat,
                    std::vector<Real>& inv_std, std::vector<Real>& mean, std::vector<Real>& var,
                    std::vector<Real>& relu, std::vector<Real>& drop) {
    affine(fc, input, B, pre);
    std::vector<Real> y;
    batch_norm_forward(bn, pre, B, width, mode, s.bn_eps, a, xhat, inv_std, mean, var, y);
    relu.resize(y.size());
    drop.resize(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) {
      relu[k] = std::max(Real(0), y[k]);
      drop[k] = (mode == Mode::kTrain && mask) ? relu[k] * (*mask)[k] : relu[k];
    }
  };
  const bool use_mask = mode == Mode::kTrain && masks != nullptr;
  hidden(p.fc1, p.bn1, a.fused, s.hidden1, use_mask ? &masks->hidden1 : nullptr, a.pre1, a.xhat1, a.inv_std1,
         a.batch_mean1, a.batch_var1, a.relu1, a.drop1);
  hidden(p.fc2, p.bn2, a.drop1, s.hidden2, use_mask ? &masks->hidden2 : nullptr, a.pre2, a.xhat2, a.inv_std2,
         a.batch_mean2, a.batch_var2, a.relu2, a.drop2);

  affine(p.fc3, a.drop2, B, a.logits);
  check_finite(a.logits, "head logits");
  a.probs.resize(B);
  for (std::size_t b = 0; b < B; ++b) a.probs[b] = sigmoid(a.logits[b]);
  return a;
}

template <typename Real>
HeadParams<Real> head_backward(const HeadParams<Real>& p, const HeadInput<Real>& in, const HeadActivations<Real>& a,
                               const DropoutMasks<Real>* masks, std::span<const Real> dlogits) {
  const HeadShape& s = p.shape;
  const std::size_t B = a.batch;
  if (dlogits.size() != B) throw DataError("gradient batch size mismatch");
  HeadParams<Real> g = HeadParams<Real>::zeros(s);
  std::fill(g.bn1.gamma.begin(), g.bn1.gamma.end(), Real(0));
  std::fill(g.bn2.gamma.begin(), g.bn2.gamma.end(), Real(0));
  std::fill(g.bn1.running_var.begin(), g.bn1.running_var.end(), Real(0));
  std::fill(g.bn2.running_var.begin(), g.bn2.running_var.end(), Real(0));

  const bool use_mask = a.mode == Mode::kTrain && masks != nullptr;
  std::vector<Real> dout(dlogits.begin(), dlogits.end());

  std::vector<Real> ddrop2 = affine_backward(p.fc3, a.drop2, dout, B, g.fc3);
  auto hidden_back = [&](std::vector<Real> ddrop, const std::vector<Real>* mask, const std::vector<Real>& relu,
                         const BatchNorm<Real>& bn, const std::vector<Real>& xhat, const std::vector<Real>& inv_std,
                         std::size_t width, BatchNorm<Real>& gbn) {
    for (std::size_t k = 0; k < ddrop.size(); ++k) {
      if (mask) ddrop[k] *= (*mask)[k];
      if (!(relu[k] > Real(0))) ddrop[k] = 0;
    }
    return batch_norm_backward(bn, xhat, inv_std, ddrop, B, width, a.mode, gbn);
  };
  std::vector<Real> dpre2 =
      hidden_back(ddrop2, use_mask ? &masks->hidden2 : nullptr, a.relu2, p.bn2, a.xhat2, a.inv_std2, s.hidden2, g.bn2);
  std::vector<Real> ddrop1 = affine_backward(p.fc2, a.drop1, dpre2, B, g.fc2);
  std::vector<Real> dpre1 =
      hidden_back(ddrop1, use_mask ? &masks->hidden1 : nullptr, a.relu1, p.bn1, a.xhat1, a.inv_std1, s.hidden1, g.bn1);
  std::vector<Real> dfused = affine_backward(p.fc1, a.fused, dpre1, B, g.fc1);

  std::vector<Real> dclin(B * s.clinical_dim, Real(0));
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i = 0; i < s.clinical_dim; ++i) {
      const std::size_t k = b * s.clinical_dim + i;
      dclin[k] = a.clin_pre[k] > Real(0) ? dfused[b * s.fused_dim() + s.image_dim + i] : Real(0);
    }
  affine_backward(p.clinical, in.clinical, dclin, B, g.clinical);

  g.for_each_trainable([](const char* name, std::vector<Real>& t) { check_finite(t, name); });
  return g;
}

template <typename Real>
void update_running_stats(HeadParams<Real>& p, const HeadActivations<Real>& a) {
  if (a.mode != Mode::kTrain) return;
  const auto m = static_cast<Real>(p.shape.bn_momentum);
  const auto n = static_cast<Real>(a.batch);
  auto update = [&](BatchNorm<Real>& bn, const std::vector<Real>& mean, const std::vector<Real>& var) {
    for (std::size_t j = 0; j < mean.size(); ++j) {
      bn.running_mean[j] = (Real(1) - m) * bn.running_mean[j] + m * mean[j];
      bn.running_var[j] = (Real(1) - m) * bn.running_var[j] + m * var[j] * n / (n - Real(1));
    }
  };
  update(p.bn1, a.batch_mean1, a.batch_var1);
  update(p.bn2, a.batch_mean2, a.batch_var2);
}

template <typename Real>
HeadInput<Real> make_head_input(std::span<const Embedding> images, std::span<const std::vector<double>> clinical) {
  if (images.size() != clinical.size()) throw DataError("image and clinical batch sizes differ");
  HeadInput<Real> in;
  in.batch = images.size();
  in.image.reserve(images.size() * kEmbedDim);
  for (const auto& e : images) in.image.insert(in.image.end(), e.begin(), e.end());
  const std::size_t n = clinical.empty() ? 0 : clinical.front().size();
  for (const auto& c : clinical) {
    if (c.size() != n) throw DataError("ragged clinical batch");
    for (double v : c) in.clinical.push_back(static_cast<Real>(v));
  }
  return in;
}

#define CRS_INSTANTIATE_HEAD(R)                                                                                     \
  template struct HeadParams<R>;                                                                                  \
  template DropoutMasks<R> sample_dropout<R>(const HeadShape&, std::size_t, Rng&);                                \
  template HeadActivations<R> head_forward<R>(const HeadParams<R>&, const HeadInput<R>&, Mode,                    \
                                              const DropoutMasks<R>*);                                            \
  template HeadParams<R> head_backward<R>(const HeadParams<R>&, const HeadInput<R>&, const HeadActivations<R>&,   \
                                          const DropoutMasks<R>*, std::span<const R>);                            \
  template void update_running_stats<R>(HeadParams<R>&, const HeadActivations<R>&);                               \
  template HeadInput<R> make_head_input<R>(std::span<const Embedding>, std::span<const std::vector<double>>);

CRS_INSTANTIATE_HEAD(float)
CRS_INSTANTIATE_HEAD(double)
template HeadParams<double> HeadParams<float>::cast<double>() const;
template HeadParams<float> HeadParams<double>::cast<float>() const;
template HeadParams<float> HeadParams<float>::cast<float>() const;
template HeadParams<double> HeadParams<double>::cast<double>() const;

double fuse_and_score(const Embedding& image, const std::vector<double>& clinical_z, const HeadParams<float>& params) {
  const std::vector<double> clin[1] = {clinical_z};
  const Embedding img[1] = {image};
  const auto in = make_head_input<float>(img, clin);
  return head_forward(params, in, Mode::kEval).probs[0];
}

int decide(double probability, double threshold) { return probability >= threshold ? 1 : 0; }

std::vector<double> encode_clinical(const ClinicalRecord& record, const ClinicalStats& stats,
                                    const HeadParams<float>& params) {
  const std::vector<double> z = stats.standardize(record);
  const std::size_t n = params.shape.clinical_dim;
  if (z.size() != n) throw DataError("clinical statistics do not match the head's clinical dimension");
  std::vector<double> out(n);
  for (std::size_t o = 0; o < n; ++o) {
    double acc = params.clinical.bias[o];
    for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(params.clinical.weight[o * n + i]) * z[i];
    out[o] = std::max(0.0, acc);
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt,
                     const std::vector<std::pair<std::string, std::string>>& provenance) {
  std::filesystem::create_directories(dir);
  ckpt.params.to_archive().save(dir / "head.tarc");
  const HeadShape& s = ckpt.params.shape;
  std::ofstream m(dir / "head.manifest", std::ios::trunc);
  if (!m) throw DataError("cannot write checkpoint manifest in " + dir.string());
  for (const auto& [k, v] : provenance) m << "# " << k << '=' << v << '\n';
  std::vector<std::string> names, means, devs;
  for (std::size_t i = 0; i < ckpt.stats.size(); ++i) {
    names.push_back(to_string(ckpt.stats.features[i]));
    means.push_back(format_double(ckpt.stats.mean[i]));
    devs.push_back(format_double(ckpt.stats.deviation[i]));
  }
  m << "image_dim=" << s.image_dim << '\n'
    << "clinical_dim=" << s.clinical_dim << '\n'
    << "hidden=" << s.hidden1 << ',' << s.hidden2 << '\n'
    << "dropout=" << format_double(s.dropout) << '\n'
    << "bn_momentum=" << format_double(s.bn_momentum) << '\n'
    << "bn_eps=" << format_double(s.bn_eps) << '\n'
    << "clinical_features=" << join(names, ",") << '\n'
    << "ca125_scale=" << to_string(ckpt.stats.ca125_scale) << '\n'
    << "clinical_mean=" << join(means, ",") << '\n'
    << "clinical_deviation=" << join(devs, ",") << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream m(dir / "head.manifest");
  if (!m) throw DataError("checkpoint manifest not found in " + dir.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(m, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("malformed checkpoint manifest line: " + line);
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  auto need = [&](const std::string& k) -> const std::string& {
    const auto it = kv.find(k);
    if (it == kv.end()) throw DataError("checkpoint manifest lacks " + k);
    return it->second;
  };
  HeadShape s;
  s.image_dim = static_cast<std::size_t>(parse_int(need("image_dim"), "image_dim"));
  s.clinical_dim = static_cast<std::size_t>(parse_int(need("clinical_dim"), "clinical_dim"));
  const auto hidden = split(need("hidden"), ',');
  if (hidden.size() != 2) throw DataError("checkpoint manifest: hidden needs two widths");
  s.hidden1 = static_cast<std::size_t>(parse_int(hidden[0], "hidden"));
  s.hidden2 = static_cast<std::size_t>(parse_int(hidden[1], "hidden"));
  s.dropout = parse_double(need("dropout"), "dropout");
  s.bn_momentum = parse_double(need("bn_momentum"), "bn_momentum");
  s.bn_eps = parse_double(need("bn_eps"), "bn_eps");

  Checkpoint c;
  if (s.clinical_dim > 0) {
    for (const auto& f : split(need("clinical_features"), ',')) c.stats.features.push_back(parse_clinical_feature(f));
    for (const auto& v : split(need("clinical_mean"), ',')) c.stats.mean.push_back(parse_double(v, "clinical_mean"));
    for (const auto& v : split(need("clinical_deviation"), ','))
      c.stats.deviation.push_back(parse_double(v, "clinical_deviation"));
    if (const auto it = kv.find("ca125_scale"); it != kv.end()) c.stats.ca125_scale = parse_ca125_scale(it->second);
  }
  if (c.stats.features.size() != s.clinical_dim || c.stats.mean.size() != s.clinical_dim ||
      c.stats.deviation.size() != s.clinical_dim)
    throw DataError("checkpoint manifest: clinical statistics do not match clinical_dim");
  c.params = HeadParams<float>::from_archive(TensorArchive::load(dir / "head.tarc"), s);
  return c;
}

}  // namespace crs
