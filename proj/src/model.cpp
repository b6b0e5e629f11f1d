#include "meshsmith/model.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "meshsmith/kernels.hpp"
#include "meshsmith/rng.hpp"

namespace meshsmith {

namespace {

constexpr const char* kFormat = "gmsnet-v1";
const char* const kTensorNames[] = {"W_l",     "b_l",    "gn_gamma", "gn_beta",
                                    "gn_alpha", "W_g",    "in_gamma", "in_beta",
                                    "mlp_W1",  "mlp_b1", "mlp_W2",   "mlp_b2"};

ad::Tensor filled(int rows, int cols, double v) {
  ad::Tensor t(rows, cols);
  for (double& x : t.data) x = v;
  return t;
}

}  // namespace

std::vector<ad::Tensor*> ModelParams::tensors() {
  return {&W_l,      &b_l,    &gn_gamma, &gn_beta, &gn_alpha, &W_g,
          &in_gamma, &in_beta, &mlp_W1,   &mlp_b1,  &mlp_W2,   &mlp_b2};
}

std::vector<const ad::Tensor*> ModelParams::tensors() const {
  return {&W_l,      &b_l,    &gn_gamma, &gn_beta, &gn_alpha, &W_g,
          &in_gamma, &in_beta, &mlp_W1,   &mlp_b1,  &mlp_W2,   &mlp_b2};
}

long ModelParams::parameter_count() const {
  long total = 0;
  for (const ad::Tensor* t : tensors()) total += t->size();
  return total;
}

ModelParams init_params(int hidden_dim, std::uint64_t seed) {
  if (hidden_dim < 2)
    throw Error(ErrorCode::DegenerateInput, "hidden_dim must be at least 2");
  const int H = hidden_dim;
  Rng rng(seed);
  auto glorot = [&rng](int rows, int cols) {
    ad::Tensor t(rows, cols);
    const double limit = std::sqrt(6.0 / (rows + cols));
    for (double& v : t.data) v = rng.uniform(-limit, limit);
    return t;
  };
  ModelParams p;
  p.hidden_dim = H;
  p.seed = seed;
  p.W_l = glorot(2, H);
  p.b_l = ad::Tensor(1, H);
  p.gn_gamma = filled(1, H, 1.0);
  p.gn_beta = ad::Tensor(1, H);
  p.gn_alpha = filled(1, H, 1.0);
  p.W_g = glorot(H, H);
  p.in_gamma = filled(1, H, 1.0);
  p.in_beta = ad::Tensor(1, H);
  p.mlp_W1 = glorot(H, H);
  p.mlp_b1 = ad::Tensor(1, H);
  p.mlp_W2 = glorot(H, 2);
  p.mlp_b2 = ad::Tensor(1, 2);
  return p;
}

NormalizationFrame star_frame(const StarPolygon& star) {
  Vec2 lo = star.center, hi = star.center;
  for (const Vec2& p : star.ring) {
    lo.x = std::fmin(lo.x, p.x);
    lo.y = std::fmin(lo.y, p.y);
    hi.x = std::fmax(hi.x, p.x);
    hi.y = std::fmax(hi.y, p.y);
  }
  const double d = std::fmax(hi.x - lo.x, hi.y - lo.y);
  if (!(d > 0)) throw Error(ErrorCode::ZeroExtent, "star has no spatial extent");
  return {star.center, d};
}

ad::Tensor star_features(const StarPolygon& star, const NormalizationFrame& frame) {
  const int n = star.degree();
  ad::Tensor X(n + 1, 2);
  const double inv = 1.0 / frame.scale;
  for (int i = 0; i < n; ++i) {
    X.at(i + 1, 0) = (star.ring[i].x - frame.origin.x) * inv;
    X.at(i + 1, 1) = (star.ring[i].y - frame.origin.y) * inv;
  }
  return X;
}

ad::Tensor normalized_adjacency_from(const std::vector<std::array<int, 2>>& edges,
                                     int node_count) {
  std::vector<double> degree(node_count, 1.0);  // self-loop
  for (const auto& e : edges) {
    degree[e[0]] += 1.0;
    degree[e[1]] += 1.0;
  }
  std::vector<double> inv_sqrt(node_count);
  for (int i = 0; i < node_count; ++i) inv_sqrt[i] = 1.0 / std::sqrt(degree[i]);
  ad::Tensor A(node_count, node_count);
  for (int i = 0; i < node_count; ++i) A.at(i, i) = inv_sqrt[i] * inv_sqrt[i];
  for (const auto& e : edges) {
    const double w = inv_sqrt[e[0]] * inv_sqrt[e[1]];
    A.at(e[0], e[1]) = w;
    A.at(e[1], e[0]) = w;
  }
  return A;
}

ad::Tensor normalized_adjacency(const StarPolygon& star) {
  return normalized_adjacency_from(star.edges, star.degree() + 1);
}

int graph_norm(ad::Tape& t, int x, int gamma, int beta, int alpha) {
  const int mu = t.colmean(x);
  const int s = t.sub(x, t.mul(alpha, mu));
  const int var = t.colmean(t.square(s));
  const int sigma = t.sqrt(t.max_s(var, 1e-12));  // floors sigma at 1e-6
  return t.add(t.mul(t.div(s, sigma), gamma), beta);
}

int instance_norm_row(ad::Tape& t, int x, int gamma, int beta) {
  const int mu = t.mean(x);
  const int s = t.sub(x, mu);
  const int var = t.mean(t.square(s));
  const int sigma = t.sqrt(t.max_s(var, 1e-12));
  return t.add(t.mul(t.div(s, sigma), gamma), beta);
}

TapedModel stage_params(ad::Tape& tape, const ModelParams& params) {
  TapedModel m;
  m.tape = &tape;
  for (const ad::Tensor* t : params.tensors())
    m.param_ids.push_back(tape.leaf(*t, true));
  return m;
}

int forward_taped(const TapedModel& model, const StarPolygon& star,
                  NormalizationFrame& frame) {
  ad::Tape& t = *model.tape;
  const std::vector<int>& id = model.param_ids;
  frame = star_frame(star);
  const int X = t.constant(star_features(star, frame));
  const int A = t.constant(normalized_adjacency(star));

  const int xh = t.add(t.matmul(X, id[0]), id[1]);
  const int xhat = graph_norm(t, xh, id[2], id[3], id[4]);
  const int xg = t.add(t.matmul(t.matmul(A, t.relu(xhat)), id[5]), xhat);
  const int xc = t.select_row(xg, 0);
  const int h1 = t.add(t.matmul(xc, id[8]), id[9]);
  const int hn = t.relu(instance_norm_row(t, h1, id[6], id[7]));
  return t.add(t.matmul(hn, id[10]), id[11]);
}

Vec2 forward_position(const ModelParams& p, const StarPolygon& star) {
  const kernels::Backend& K = kernels::active();
  const NormalizationFrame frame = star_frame(star);
  const int rows = star.degree() + 1;
  const int H = p.hidden_dim;

  const ad::Tensor X = star_features(star, frame);
  const ad::Tensor A = normalized_adjacency(star);

  std::vector<double> xh(static_cast<size_t>(rows) * H);
  K.matmul(X.data.data(), p.W_l.data.data(), xh.data(), rows, 2, H);
  K.add_rowvec(xh.data(), rows, H, p.b_l.data.data());

  std::vector<double> shift(H), var(H), inv(H);
  K.colmean(xh.data(), rows, H, shift.data());
  for (int j = 0; j < H; ++j) shift[j] *= p.gn_alpha.data[j];
  K.colvar_about(xh.data(), rows, H, shift.data(), var.data());
  for (int j = 0; j < H; ++j) inv[j] = 1.0 / std::sqrt(std::fmax(var[j], 1e-12));
  std::vector<double> xhat(static_cast<size_t>(rows) * H);
  K.norm_affine(xh.data(), rows, H, shift.data(), inv.data(), p.gn_gamma.data.data(),
                p.gn_beta.data.data(), xhat.data());

  std::vector<double> act(xhat.size()), agg(xhat.size()), xg(xhat.size());
  K.relu(xhat.data(), act.data(), rows * H);
  K.matmul(A.data.data(), act.data(), agg.data(), rows, rows, H);
  K.matmul(agg.data(), p.W_g.data.data(), xg.data(), rows, H, H);
  for (size_t i = 0; i < xg.size(); ++i) xg[i] += xhat[i];

  // head on the free node's row (row 0 of xg)
  std::vector<double> h1(H), hn(H);
  K.matmul(xg.data(), p.mlp_W1.data.data(), h1.data(), 1, H, H);
  K.add_rowvec(h1.data(), 1, H, p.mlp_b1.data.data());
  double mu = 0;
  for (double v : h1) mu += v;
  mu /= H;
  double v1 = 0;
  for (double v : h1) v1 += (v - mu) * (v - mu);
  v1 /= H;
  const double isd = 1.0 / std::sqrt(std::fmax(v1, 1e-12));
  for (int j = 0; j < H; ++j) {
    const double v = p.in_gamma.data[j] * (h1[j] - mu) * isd + p.in_beta.data[j];
    hn[j] = v > 0 ? v : 0;
  }
  double out[2];
  K.matmul(hn.data(), p.mlp_W2.data.data(), out, 1, H, 2);
  out[0] += p.mlp_b2.data[0];
  out[1] += p.mlp_b2.data[1];
  return frame.origin + Vec2{out[0], out[1]} * frame.scale;
}

void save_checkpoint(const ModelParams& params, const std::string& path) {
  nlohmann::ordered_json j;
  j["format"] = kFormat;
  j["hidden_dim"] = params.hidden_dim;
  j["seed"] = params.seed;
  const auto tensors = params.tensors();
  for (size_t k = 0; k < tensors.size(); ++k) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    char buf[40];
    for (double v : tensors[k]->data) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      arr.push_back(buf);
    }
    j[kTensorNames[k]] = std::move(arr);
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

ModelParams load_checkpoint(const std::string& path, int expected_hidden) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, path + ": " + e.what());
  }
  if (!j.contains("format") || !j["format"].is_string())
    throw Error(ErrorCode::CorruptFile, path + ": missing format tag");
  if (j["format"] != kFormat)
    throw Error(ErrorCode::VersionMismatch,
                path + ": format '" + j["format"].get<std::string>() + "'");
  if (!j.contains("hidden_dim") || !j["hidden_dim"].is_number_integer())
    throw Error(ErrorCode::CorruptFile, path + ": missing hidden_dim");
  const int H = j["hidden_dim"].get<int>();
  if (H < 2) throw Error(ErrorCode::CorruptFile, path + ": bad hidden_dim");
  if (expected_hidden > 0 && H != expected_hidden)
    throw Error(ErrorCode::VersionMismatch,
                path + ": hidden_dim " + std::to_string(H) + ", expected " +
                    std::to_string(expected_hidden));

  ModelParams p = init_params(H, 0);
  p.seed = j.value("seed", std::uint64_t{0});
  const auto tensors = p.tensors();
  for (size_t k = 0; k < tensors.size(); ++k) {
    const char* name = kTensorNames[k];
    if (!j.contains(name) || !j[name].is_array() ||
        static_cast<int>(j[name].size()) != tensors[k]->size())
      throw Error(ErrorCode::CorruptFile,
                  path + ": tensor '" + name + "' missing or mis-sized");
    int i = 0;
    for (const auto& cell : j[name]) {
      if (!cell.is_string())
        throw Error(ErrorCode::CorruptFile, path + ": tensor '" + name + "' cell type");
      const std::string s = cell.get<std::string>();
      char* end = nullptr;
      const double v = std::strtod(s.c_str(), &end);
      if (end == s.c_str() || *end != '\0' || !std::isfinite(v))
        throw Error(ErrorCode::CorruptFile,
                    path + ": tensor '" + name + "' value '" + s + "'");
      tensors[k]->data[i++] = v;
    }
  }
  return p;
}

}  // namespace meshsmith
