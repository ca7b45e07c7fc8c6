#include "vlfly/model.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>

#include "vlfly/error.hpp"
#include "vlfly/rng.hpp"

namespace vlfly {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void ModelConfig::validate() const {
  if (rays < 1 || goal_channels < 0 || context < 0 || horizon < 1 || d_model < 1 || layers < 0 ||
      ff_hidden < 1 || enc_hidden < 1 || head_hidden < 1 || !(d_max > 0.0)) {
    throw Error(ErrorCode::ShapeMismatch, "invalid planner model configuration");
  }
}

// ---------------------------------------------------------------------------
// parameter bookkeeping

PlannerParams PlannerParams::zeros(const ModelConfig& c) {
  c.validate();
  PlannerParams p;
  p.config = c;
  const int in = c.frame_features();
  const int d = c.d_model;
  p.psi_w1 = MatrixXd::Zero(c.enc_hidden, in);
  p.psi_b1 = VectorXd::Zero(c.enc_hidden);
  p.psi_w2 = MatrixXd::Zero(d, c.enc_hidden);
  p.psi_b2 = VectorXd::Zero(d);
  p.phi_w1 = MatrixXd::Zero(c.enc_hidden, 2 * in);
  p.phi_b1 = VectorXd::Zero(c.enc_hidden);
  p.phi_w2 = MatrixXd::Zero(d, c.enc_hidden);
  p.phi_b2 = VectorXd::Zero(d);
  p.pos = MatrixXd::Zero(c.tokens(), d);
  p.blocks.resize(static_cast<std::size_t>(c.layers));
  for (auto& b : p.blocks) {
    b.wq = b.wk = b.wv = b.wo = MatrixXd::Zero(d, d);
    b.ln1_g = b.ln1_b = b.ln2_g = b.ln2_b = VectorXd::Zero(d);
    b.ff_w1 = MatrixXd::Zero(d, c.ff_hidden);
    b.ff_b1 = VectorXd::Zero(c.ff_hidden);
    b.ff_w2 = MatrixXd::Zero(c.ff_hidden, d);
    b.ff_b2 = VectorXd::Zero(d);
  }
  p.head_w1 = MatrixXd::Zero(c.head_hidden, d);
  p.head_b1 = VectorXd::Zero(c.head_hidden);
  p.head_w2 = MatrixXd::Zero(c.outputs(), c.head_hidden);
  p.head_b2 = VectorXd::Zero(c.outputs());
  return p;
}

namespace {

void fill_uniform(MatrixXd& m, double bound, Rng& rng) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-bound, bound);
  }
}

}  // namespace

PlannerParams PlannerParams::random(const ModelConfig& c, Rng& rng) {
  PlannerParams p = zeros(c);
  auto init = [&](MatrixXd& m, Eigen::Index fan_in) {
    fill_uniform(m, 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
  };
  init(p.psi_w1, p.psi_w1.cols());
  init(p.psi_w2, p.psi_w2.cols());
  init(p.phi_w1, p.phi_w1.cols());
  init(p.phi_w2, p.phi_w2.cols());
  init(p.pos, p.pos.cols());
  for (auto& b : p.blocks) {
    for (MatrixXd* w : {&b.wq, &b.wk, &b.wv, &b.wo, &b.ff_w1, &b.ff_w2}) init(*w, w->rows());
    b.ln1_g.setOnes();
    b.ln2_g.setOnes();
  }
  init(p.head_w1, p.head_w1.cols());
  init(p.head_w2, p.head_w2.cols());
  return p;
}

namespace {

template <typename Params, typename Fn>
void visit(Params& p, Fn&& fn) {
  auto mat = [&](const char* name, auto& m) { fn(std::string(name), m.data(), m.rows(), m.cols()); };
  mat("psi_w1", p.psi_w1);
  mat("psi_b1", p.psi_b1);
  mat("psi_w2", p.psi_w2);
  mat("psi_b2", p.psi_b2);
  mat("phi_w1", p.phi_w1);
  mat("phi_b1", p.phi_b1);
  mat("phi_w2", p.phi_w2);
  mat("phi_b2", p.phi_b2);
  mat("pos", p.pos);
  for (std::size_t l = 0; l < p.blocks.size(); ++l) {
    auto& b = p.blocks[l];
    const std::string pre = "block" + std::to_string(l) + ".";
    auto named = [&](const char* name, auto& m) {
      fn(pre + name, m.data(), m.rows(), m.cols());
    };
    named("wq", b.wq);
    named("wk", b.wk);
    named("wv", b.wv);
    named("wo", b.wo);
    named("ln1_g", b.ln1_g);
    named("ln1_b", b.ln1_b);
    named("ff_w1", b.ff_w1);
    named("ff_b1", b.ff_b1);
    named("ff_w2", b.ff_w2);
    named("ff_b2", b.ff_b2);
    named("ln2_g", b.ln2_g);
    named("ln2_b", b.ln2_b);
  }
  mat("head_w1", p.head_w1);
  mat("head_b1", p.head_b1);
  mat("head_w2", p.head_w2);
  mat("head_b2", p.head_b2);
}

}  // namespace

void PlannerParams::for_each(const Visitor& fn) {
  visit(*this, [&](const std::string& name, double* data, Eigen::Index r, Eigen::Index c) {
    fn(name, Eigen::Map<MatrixXd>(data, r, c));
  });
}

void PlannerParams::for_each(const ConstVisitor& fn) const {
  visit(*this, [&](const std::string& name, const double* data, Eigen::Index r, Eigen::Index c) {
    fn(name, Eigen::Map<const MatrixXd>(data, r, c));
  });
}

std::size_t PlannerParams::parameter_count() const {
  std::size_t n = 0;
  for_each([&](const std::string&, Eigen::Map<const MatrixXd> m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

bool PlannerParams::all_finite() const {
  bool ok = true;
  for_each([&](const std::string&, Eigen::Map<const MatrixXd> m) { ok = ok && m.allFinite(); });
  return ok;
}

// ---------------------------------------------------------------------------
// inputs

VectorXd encode_frame(const EgoObservation& obs, const ModelConfig& cfg) {
  if (static_cast<int>(obs.rays.size()) != cfg.rays) {
    throw Error(ErrorCode::ShapeMismatch, "observation has " + std::to_string(obs.rays.size()) +
                                              " rays, model expects " + std::to_string(cfg.rays));
  }
  const int ch = cfg.channels();
  VectorXd x = VectorXd::Zero(cfg.frame_features());
  for (int i = 0; i < cfg.rays; ++i) {
    const RayHit& r = obs.rays[static_cast<std::size_t>(i)];
    x(i * ch) = r.depth / cfg.d_max;
    if (r.semantic == kSemanticObstacle) {
      x(i * ch + 1) = 1.0;
    } else if (r.semantic >= 1 && r.semantic <= cfg.goal_channels) {
      x(i * ch + 1 + r.semantic) = 1.0;
    }
  }
  return x;
}

PlannerInput prepare_input(const ObsContext& context, const EgoObservation& goal_obs,
                           const ModelConfig& cfg) {
  if (static_cast<int>(context.frames.size()) != cfg.context + 1) {
    throw Error(ErrorCode::ShapeMismatch, "context has " + std::to_string(context.frames.size()) +
                                              " frames, model expects " +
                                              std::to_string(cfg.context + 1));
  }
  PlannerInput in;
  in.frames.resize(cfg.frame_features(), cfg.context + 1);
  for (int k = 0; k <= cfg.context; ++k) {
    in.frames.col(k) = encode_frame(context.frames[static_cast<std::size_t>(k)], cfg);
  }
  in.goal = encode_frame(goal_obs, cfg);
  return in;
}

// ---------------------------------------------------------------------------
// forward / backward

namespace {

constexpr double kLnEps = 1e-5;

double softplus(double x) { return x > 20.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct LayerNormCache {
  MatrixXd xhat;        ///< T x D
  VectorXd inv_std;     ///< per row
};

MatrixXd layer_norm(const MatrixXd& x, const VectorXd& g, const VectorXd& b, LayerNormCache& cache) {
  const Eigen::Index t = x.rows();
  const double d = static_cast<double>(x.cols());
  cache.xhat.resize(x.rows(), x.cols());
  cache.inv_std.resize(t);
  MatrixXd y(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < t; ++i) {
    const double mu = x.row(i).mean();
    const double var = (x.row(i).array() - mu).square().sum() / d;
    const double inv = 1.0 / std::sqrt(var + kLnEps);
    cache.inv_std(i) = inv;
    cache.xhat.row(i) = (x.row(i).array() - mu) * inv;
    y.row(i) = cache.xhat.row(i).array() * g.transpose().array() + b.transpose().array();
  }
  return y;
}

MatrixXd layer_norm_backward(const MatrixXd& dy, const VectorXd& g, const LayerNormCache& cache,
                             VectorXd& dg, VectorXd& db) {
  const double d = static_cast<double>(dy.cols());
  MatrixXd dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    dg += (dy.row(i).array() * cache.xhat.row(i).array()).matrix().transpose();
    db += dy.row(i).transpose();
    const Eigen::ArrayXd dxhat = dy.row(i).transpose().array() * g.array();
    const Eigen::ArrayXd xhat = cache.xhat.row(i).transpose().array();
    const double mean_dxhat = dxhat.sum() / d;
    const double mean_dxhat_xhat = (dxhat * xhat).sum() / d;
    dx.row(i) = (cache.inv_std(i) * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat)).matrix().transpose();
  }
  return dx;
}

struct BlockCache {
  MatrixXd z_in, q, k, v, attn, ctx;
  LayerNormCache ln1;
  MatrixXd z1, hf;
  LayerNormCache ln2;
};

struct ForwardCache {
  MatrixXd psi_h;  ///< enc_hidden x (P+1)
  MatrixXd psi_out;
  VectorXd phi_in, phi_h;
  std::vector<BlockCache> blocks;
  MatrixXd z_out;
  VectorXd pooled, head_h, out;
};

MatrixXd block_forward(const MatrixXd& z, const BlockParams& bp, BlockCache& c) {
  const Eigen::Index t = z.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(z.cols()));
  c.z_in = z;
  c.q = z * bp.wq;
  c.k = z * bp.wk;
  c.v = z * bp.wv;
  MatrixXd s = (c.q * c.k.transpose()) * scale;
  c.attn = MatrixXd::Zero(t, t);
  for (Eigen::Index i = 0; i < t; ++i) {  // causal: token i attends to j <= i
    const double m = s.row(i).head(i + 1).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index j = 0; j <= i; ++j) {
      c.attn(i, j) = std::exp(s(i, j) - m);
      sum += c.attn(i, j);
    }
    c.attn.row(i).head(i + 1) /= sum;
  }
  c.ctx = c.attn * c.v;
  const MatrixXd r1 = z + c.ctx * bp.wo;
  c.z1 = layer_norm(r1, bp.ln1_g, bp.ln1_b, c.ln1);
  c.hf = ((c.z1 * bp.ff_w1).rowwise() + bp.ff_b1.transpose()).array().tanh().matrix();
  const MatrixXd r2 = c.z1 + ((c.hf * bp.ff_w2).rowwise() + bp.ff_b2.transpose());
  return layer_norm(r2, bp.ln2_g, bp.ln2_b, c.ln2);
}

MatrixXd block_backward(const MatrixXd& dz_out, const BlockParams& bp, const BlockCache& c,
                        BlockParams& g) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(dz_out.cols()));
  const MatrixXd dr2 = layer_norm_backward(dz_out, bp.ln2_g, c.ln2, g.ln2_g, g.ln2_b);
  // feed-forward branch
  g.ff_w2 += c.hf.transpose() * dr2;
  g.ff_b2 += dr2.colwise().sum().transpose();
  const MatrixXd dhf = (dr2 * bp.ff_w2.transpose()).array() * (1.0 - c.hf.array().square());
  g.ff_w1 += c.z1.transpose() * dhf;
  g.ff_b1 += dhf.colwise().sum().transpose();
  const MatrixXd dz1 = dr2 + dhf * bp.ff_w1.transpose();
  const MatrixXd dr1 = layer_norm_backward(dz1, bp.ln1_g, c.ln1, g.ln1_g, g.ln1_b);
  // attention branch
  g.wo += c.ctx.transpose() * dr1;
  const MatrixXd dctx = dr1 * bp.wo.transpose();
  const MatrixXd dattn = dctx * c.v.transpose();
  const MatrixXd dv = c.attn.transpose() * dctx;
  MatrixXd ds = MatrixXd::Zero(c.attn.rows(), c.attn.cols());
  for (Eigen::Index i = 0; i < ds.rows(); ++i) {
    const double inner = c.attn.row(i).dot(dattn.row(i));
    ds.row(i) = c.attn.row(i).array() * (dattn.row(i).array() - inner);
  }
  ds *= scale;
  const MatrixXd dq = ds * c.k;
  const MatrixXd dk = ds.transpose() * c.q;
  g.wq += c.z_in.transpose() * dq;
  g.wk += c.z_in.transpose() * dk;
  g.wv += c.z_in.transpose() * dv;
  return dr1 + dq * bp.wq.transpose() + dk * bp.wk.transpose() + dv * bp.wv.transpose();
}

void check_input(const PlannerInput& in, const ModelConfig& c) {
  if (in.frames.rows() != c.frame_features() || in.frames.cols() != c.context + 1 ||
      in.goal.size() != c.frame_features()) {
    throw Error(ErrorCode::ShapeMismatch, "planner input does not match model shape");
  }
}

VectorXd forward_raw(const PlannerInput& in, const PlannerParams& p, ForwardCache& c) {
  const ModelConfig& cfg = p.config;
  check_input(in, cfg);
  const int frames = cfg.context + 1;

  c.psi_h = ((p.psi_w1 * in.frames).colwise() + p.psi_b1).array().tanh().matrix();
  c.psi_out = (p.psi_w2 * c.psi_h).colwise() + p.psi_b2;

  c.phi_in.resize(2 * cfg.frame_features());
  c.phi_in << in.frames.col(frames - 1), in.goal;
  c.phi_h = (p.phi_w1 * c.phi_in + p.phi_b1).array().tanh().matrix();
  const VectorXd fused = p.phi_w2 * c.phi_h + p.phi_b2;

  MatrixXd z(cfg.tokens(), cfg.d_model);
  z.topRows(frames) = c.psi_out.transpose();
  z.row(frames) = fused.transpose();
  z += p.pos;

  c.blocks.resize(p.blocks.size());
  for (std::size_t l = 0; l < p.blocks.size(); ++l) z = block_forward(z, p.blocks[l], c.blocks[l]);
  c.z_out = z;

  c.pooled = z.colwise().mean().transpose();
  c.head_h = (p.head_w1 * c.pooled + p.head_b1).array().tanh().matrix();
  c.out = p.head_w2 * c.head_h + p.head_b2;
  return c.out;
}

WaypointPlan decode_output(const VectorXd& out, int horizon) {
  WaypointPlan plan;
  plan.temporal_distance = softplus(out(0));
  plan.waypoints.reserve(static_cast<std::size_t>(horizon));
  for (int i = 0; i < horizon; ++i) {
    plan.waypoints.push_back({std::tanh(out(1 + 2 * i)), std::tanh(out(2 + 2 * i))});
  }
  return plan;
}

/// Accumulates d(loss)/d(params) for one sample, given d(loss)/d(raw outputs).
void backward(const PlannerInput& in, const PlannerParams& p, const ForwardCache& c,
              const VectorXd& dout, PlannerGradients& g) {
  const ModelConfig& cfg = p.config;
  const int frames = cfg.context + 1;

  g.head_w2 += dout * c.head_h.transpose();
  g.head_b2 += dout;
  const VectorXd dhh = (p.head_w2.transpose() * dout).array() * (1.0 - c.head_h.array().square());
  g.head_w1 += dhh * c.pooled.transpose();
  g.head_b1 += dhh;
  const VectorXd dpooled = p.head_w1.transpose() * dhh;

  MatrixXd dz = (dpooled / static_cast<double>(cfg.tokens())).transpose().replicate(cfg.tokens(), 1);
  for (std::size_t l = p.blocks.size(); l-- > 0;) {
    dz = block_backward(dz, p.blocks[l], c.blocks[l], g.blocks[l]);
  }
  g.pos += dz;

  const VectorXd dfused = dz.row(frames).transpose();
  g.phi_w2 += dfused * c.phi_h.transpose();
  g.phi_b2 += dfused;
  const VectorXd dphi_h = (p.phi_w2.transpose() * dfused).array() * (1.0 - c.phi_h.array().square());
  g.phi_w1 += dphi_h * c.phi_in.transpose();
  g.phi_b1 += dphi_h;

  const MatrixXd dpsi_out = dz.topRows(frames).transpose();  // D x frames
  g.psi_w2 += dpsi_out * c.psi_h.transpose();
  g.psi_b2 += dpsi_out.rowwise().sum();
  const MatrixXd dpsi_h = (p.psi_w2.transpose() * dpsi_out).array() * (1.0 - c.psi_h.array().square());
  g.psi_w1 += dpsi_h * in.frames.transpose();
  g.psi_b1 += dpsi_h.rowwise().sum();
}

}  // namespace

WaypointPlan planner_forward(const PlannerInput& input, const PlannerParams& params) {
  ForwardCache cache;
  return decode_output(forward_raw(input, params, cache), params.config.horizon);
}

WaypointPlan planner_forward(const ObsContext& context, const EgoObservation& goal_obs,
                             const PlannerParams& params) {
  return planner_forward(prepare_input(context, goal_obs, params.config), params);
}

double waypoint_mse(const WaypointPlan& pred, const WaypointPlan& target) {
  if (pred.waypoints.size() != target.waypoints.size() || pred.waypoints.empty()) {
    throw Error(ErrorCode::ShapeMismatch, "plans differ in horizon");
  }
  double se = 0.0;
  for (std::size_t i = 0; i < pred.waypoints.size(); ++i) {
    const Vec2 d = pred.waypoints[i] - target.waypoints[i];
    se += d.x * d.x + d.y * d.y;
  }
  return se / static_cast<double>(2 * pred.waypoints.size());
}

double planner_loss(const WaypointPlan& pred, const WaypointPlan& target, const LossWeights& w) {
  const double dd = (pred.temporal_distance - target.temporal_distance) / w.d_norm;
  return waypoint_mse(pred, target) + w.lambda_d * dd * dd;
}

double planner_gradients(const PlannerParams& params, const std::vector<const TrainingExample*>& batch,
                         const LossWeights& w, PlannerGradients& grads,
                         std::vector<double>* per_sample) {
  if (batch.empty()) throw Error(ErrorCode::InvalidArgument, "empty batch");
  const ModelConfig& cfg = params.config;
  grads = PlannerParams::zeros(cfg);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const double inv_2h = 1.0 / static_cast<double>(2 * cfg.horizon);
  double total = 0.0;
  ForwardCache cache;
  VectorXd dout(cfg.outputs());
  for (const TrainingExample* ex : batch) {
    if (static_cast<int>(ex->target.waypoints.size()) != cfg.horizon) {
      throw Error(ErrorCode::ShapeMismatch, "target horizon does not match model");
    }
    const VectorXd out = forward_raw(ex->input, params, cache);
    const WaypointPlan pred = decode_output(out, cfg.horizon);
    const double loss = planner_loss(pred, ex->target, w);
    total += loss;
    if (per_sample) per_sample->push_back(loss);

    const double dd = (pred.temporal_distance - ex->target.temporal_distance) / w.d_norm;
    dout(0) = inv_b * 2.0 * w.lambda_d * dd / w.d_norm * sigmoid(out(0));
    for (int i = 0; i < cfg.horizon; ++i) {
      const auto& pw = pred.waypoints[static_cast<std::size_t>(i)];
      const auto& tw = ex->target.waypoints[static_cast<std::size_t>(i)];
      dout(1 + 2 * i) = inv_b * 2.0 * inv_2h * (pw.x - tw.x) * (1.0 - pw.x * pw.x);
      dout(2 + 2 * i) = inv_b * 2.0 * inv_2h * (pw.y - tw.y) * (1.0 - pw.y * pw.y);
    }
    backward(ex->input, params, cache, dout, grads);
  }
  return total * inv_b;
}

double batch_loss(const PlannerParams& params, const std::vector<const TrainingExample*>& batch,
                  const LossWeights& w) {
  if (batch.empty()) throw Error(ErrorCode::InvalidArgument, "empty batch");
  double total = 0.0;
  for (const TrainingExample* ex : batch) {
    total += planner_loss(planner_forward(ex->input, params), ex->target, w);
  }
  return total / static_cast<double>(batch.size());
}

// ---------------------------------------------------------------------------
// params file

namespace {

constexpr char kParamsMagic[4] = {'V', 'L', 'F', 'P'};
constexpr std::uint32_t kParamsVersion = 1;

template <typename T>
void put_le(std::vector<char>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

class ByteReader {
 public:
  explicit ByteReader(const std::vector<char>& b) : b_(b) {}
  template <typename T>
  T get() {
    if (b_.size() - pos_ < sizeof(T)) throw Error(ErrorCode::TruncatedFile, "params file truncated");
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<T>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i));
    }
    pos_ += sizeof(T);
    return v;
  }
  std::string str(std::size_t n) {
    if (b_.size() - pos_ < n) throw Error(ErrorCode::TruncatedFile, "params file truncated");
    std::string s(b_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == b_.size(); }

 private:
  const std::vector<char>& b_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_params(const PlannerParams& params, const std::filesystem::path& path) {
  const ModelConfig& c = params.config;
  std::vector<char> out(std::begin(kParamsMagic), std::end(kParamsMagic));
  put_le(out, kParamsVersion);
  for (int v : {c.rays, c.goal_channels, c.context, c.horizon, c.d_model, c.layers, c.ff_hidden,
                c.enc_hidden, c.head_hidden}) {
    put_le(out, static_cast<std::uint32_t>(v));
  }
  put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(c.d_max)));

  std::uint32_t count = 0;
  params.for_each([&](const std::string&, Eigen::Map<const MatrixXd>) { ++count; });
  put_le(out, count);
  params.for_each([&](const std::string& name, Eigen::Map<const MatrixXd> m) {
    put_le(out, static_cast<std::uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_le(out, static_cast<std::uint32_t>(m.rows()));
    put_le(out, static_cast<std::uint32_t>(m.cols()));
  });
  params.for_each([&](const std::string&, Eigen::Map<const MatrixXd> m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(m(i, j))));
      }
    }
  });

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoError, "cannot write params " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

PlannerParams read_params(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot open params " + path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  ByteReader r(bytes);
  if (r.str(4) != std::string(kParamsMagic, 4)) throw Error(ErrorCode::BadMagic, "params file does not start with VLFP");
  const auto version = r.get<std::uint32_t>();
  if (version != kParamsVersion) {
    throw Error(ErrorCode::VersionUnsupported, "params version " + std::to_string(version));
  }
  ModelConfig c;
  for (int* v : {&c.rays, &c.goal_channels, &c.context, &c.horizon, &c.d_model, &c.layers,
                 &c.ff_hidden, &c.enc_hidden, &c.head_hidden}) {
    *v = static_cast<int>(r.get<std::uint32_t>());
  }
  c.d_max = std::bit_cast<float>(r.get<std::uint32_t>());
  PlannerParams p = PlannerParams::zeros(c);

  std::vector<std::tuple<std::string, std::uint32_t, std::uint32_t>> table;
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str(r.get<std::uint16_t>());
    const auto rows = r.get<std::uint32_t>();
    const auto cols = r.get<std::uint32_t>();
    table.emplace_back(std::move(name), rows, cols);
  }
  std::size_t idx = 0;
  p.for_each([&](const std::string& name, Eigen::Map<MatrixXd> m) {
    if (idx >= table.size()) throw Error(ErrorCode::ShapeMismatch, "params file lacks tensor " + name);
    const auto& [tname, rows, cols] = table[idx++];
    if (tname != name || rows != m.rows() || cols != m.cols()) {
      throw Error(ErrorCode::ShapeMismatch, "tensor " + tname + " does not match expected " + name);
    }
  });
  if (idx != table.size()) throw Error(ErrorCode::ShapeMismatch, "params file has extra tensors");
  p.for_each([&](const std::string&, Eigen::Map<MatrixXd> m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        m(i, j) = std::bit_cast<float>(r.get<std::uint32_t>());
      }
    }
  });
  if (!r.at_end()) throw Error(ErrorCode::ParseError, "trailing bytes in params file");
  if (!p.all_finite()) throw Error(ErrorCode::ParseError, "params file contains non-finite values");
  return p;
}

}  // namespace vlfly
