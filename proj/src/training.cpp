#include "meshsmith/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "meshsmith/kernels.hpp"
#include "meshsmith/rng.hpp"

namespace meshsmith {

namespace {

// Sub-stream salts: parameters use the config seed directly, epoch sampling
// and the one-time validation draw get independent streams.
constexpr std::uint64_t kTrainSalt = 0x74726e;
constexpr std::uint64_t kValSalt = 0x76616c;

struct TrainStar {
  StarPolygon star;  // physical, straight from the mesh
  StarPolygon norm;  // frame-normalized copy, free node at the origin
  double scale = 1.0;
};

StarPolygon normalize_star(const StarPolygon& star, const NormalizationFrame& frame) {
  StarPolygon ns = star;
  ns.center = {0, 0};
  const double inv = 1.0 / frame.scale;
  for (Vec2& p : ns.ring) p = (p - frame.origin) * inv;
  ns.eps_area = star.eps_area / (frame.scale * frame.scale);
  return ns;
}

std::vector<TrainStar> mesh_stars(const Mesh& mesh) {
  std::vector<TrainStar> out;
  for (int i : mesh.interior_nodes()) {
    TrainStar ts;
    ts.star = star_polygon(mesh, i);
    const NormalizationFrame frame = star_frame(ts.star);
    ts.norm = normalize_star(ts.star, frame);
    ts.scale = frame.scale;
    out.push_back(std::move(ts));
  }
  return out;
}

long count_stars(const std::vector<std::vector<TrainStar>>& per_mesh) {
  long n = 0;
  for (const auto& v : per_mesh) n += static_cast<long>(v.size());
  return n;
}

}  // namespace

std::string trace_to_csv(const TrainingTrace& trace) {
  std::string out = "epoch,train_loss,val_loss,lr,truncations\n";
  char buf[128];
  for (const EpochStats& e : trace.epochs) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%ld\n", e.epoch,
                  e.train_loss, e.val_loss, e.lr, e.truncations);
    out += buf;
  }
  return out;
}

TrainResult train_gmsnet(const Dataset& dataset, const TrainConfig& config) {
  if (dataset.train.empty() || dataset.val.empty())
    throw Error(ErrorCode::EmptyDataset, "need train and val meshes");

  std::vector<std::vector<TrainStar>> train_stars, val_stars;
  for (const Mesh& m : dataset.train) train_stars.push_back(mesh_stars(m));
  for (const Mesh& m : dataset.val) val_stars.push_back(mesh_stars(m));
  if (count_stars(train_stars) == 0 || count_stars(val_stars) == 0)
    throw Error(ErrorCode::EmptyDataset, "no interior nodes to train on");

  // one fixed validation draw keeps per-epoch losses comparable
  std::vector<std::vector<int>> val_pick(val_stars.size());
  {
    Rng vrng(mix_seed(config.seed, kValSalt));
    for (size_t m = 0; m < val_stars.size(); ++m) {
      const int n = static_cast<int>(val_stars[m].size());
      if (n > 0)
        val_pick[m] =
            vrng.sample_without_replacement(n, std::min(config.batch_size, n));
    }
  }

  ModelParams params = init_params(config.hidden_dim, config.seed);
  ModelParams best = params;
  double best_val = std::numeric_limits<double>::infinity();

  std::vector<ad::Tensor*> tensors = params.tensors();
  ad::AdamState adam_state;
  ad::AdamConfig adam;
  adam.lr = config.initial_lr;

  ad::Tape tape;
  TrainResult result;
  int stall = 0;

  // Validation scores the raw one-step proposals of the parameters entering
  // the epoch, so epoch 1 reads the untrained model and the curve spans the
  // whole descent. Truncation stays a training-loss and deployment concern;
  // here it would only mask how wild the proposals still are.
  auto validate = [&]() {
    double sum = 0;
    long count = 0;
    for (size_t m = 0; m < val_stars.size(); ++m) {
      for (int idx : val_pick[m]) {
        const TrainStar& ts = val_stars[m][idx];
        const Vec2 pos = forward_position(params, ts.star);
        sum += star_loss(config.loss_kind, pos.x, pos.y, ts.star);
        ++count;
      }
    }
    return sum / static_cast<double>(count);
  };

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const double val = validate();
    if (val < best_val) {
      best_val = val;
      best = params;
      stall = 0;
    } else if (++stall >= config.plateau_epochs) {
      adam.lr = std::fmax(adam.lr * 0.5, config.lr_floor);
      stall = 0;
    }

    Rng erng(mix_seed(mix_seed(config.seed, kTrainSalt), epoch));
    double train_sum = 0;
    long batches = 0;
    long truncations = 0;

    for (const auto& stars : train_stars) {
      const int n = static_cast<int>(stars.size());
      if (n == 0) continue;
      const int k = std::min(config.batch_size, n);
      const std::vector<int> pick = erng.sample_without_replacement(n, k);

      tape.reset();
      const TapedModel model = stage_params(tape, params);
      ad::Scalar total(0.0);
      for (int idx : pick) {
        const TrainStar& ts = stars[idx];
        NormalizationFrame frame;
        const int out = forward_taped(model, ts.star, frame);
        const ad::Tensor& ov = tape.value(out);
        const double c = shift_truncate_factor(ts.norm, ts.norm.center,
                                               {ov.data[0], ov.data[1]});
        if (c != 1.0) ++truncations;
        // The surviving 2^-k enters the tape as a constant factor, so the
        // loss is differentiated at the clipped displacement. A fully
        // rejected proposal contributes the center loss with zero gradient.
        ad::Scalar cx(0.0), cy(0.0);
        if (c > 0) {
          const int sx = tape.select(out, 0, 0);
          const int sy = tape.select(out, 0, 1);
          cx = ad::Scalar(&tape, c == 1.0 ? sx : tape.mul_s(sx, c));
          cy = ad::Scalar(&tape, c == 1.0 ? sy : tape.mul_s(sy, c));
        }
        total = total + star_loss(config.loss_kind, cx, cy, ts.norm);
      }
      const ad::Scalar batch = total / static_cast<double>(k);
      train_sum += batch.value();
      ++batches;
      if (batch.tape() == nullptr) continue;  // every proposal rejected
      tape.backward(batch.id());
      std::vector<ad::Tensor> grads;
      grads.reserve(tensors.size());
      for (int id : model.param_ids) grads.push_back(tape.grad(id));
      ad::adam_step(tensors, grads, adam_state, adam);
    }

    result.trace.epochs.push_back(
        {epoch, train_sum / static_cast<double>(batches), val, adam.lr, truncations});
  }

  // the last epoch's updates were never scored inside the loop
  if (validate() < best_val) best = params;

  result.params = best;
  return result;
}

std::vector<LabeledStar> nn_generate_labels(const std::vector<Mesh>& meshes,
                                            const OptimConfig& opt) {
  std::vector<LabeledStar> out;
  for (const Mesh& mesh : meshes) {
    for (int i : mesh.interior_nodes()) {
      LabeledStar ls;
      ls.star = star_polygon(mesh, i);
      ls.label = optimization_step(ls.star, opt);
      out.push_back(std::move(ls));
    }
  }
  return out;
}

const NnModel::DegreeNet* NnModel::net_for(int degree) const {
  if (degree < min_degree || degree > max_degree) return nullptr;
  const size_t k = static_cast<size_t>(degree - min_degree);
  return k < nets.size() ? &nets[k] : nullptr;
}

std::vector<int> NnModel::missing_degrees() const {
  std::vector<int> out;
  for (const DegreeNet& n : nets)
    if (!n.trained) out.push_back(n.degree);
  return out;
}

NnModel train_nn_baseline(const std::vector<LabeledStar>& labels,
                          const NnTrainConfig& config) {
  NnModel model;
  model.min_degree = config.min_degree;
  model.max_degree = config.max_degree;
  model.hidden = config.hidden;
  model.seed = config.seed;
  const int span = config.max_degree - config.min_degree + 1;
  model.nets.resize(span);
  for (int d = config.min_degree; d <= config.max_degree; ++d)
    model.nets[d - config.min_degree].degree = d;

  // row-major augmented design matrices per degree
  std::vector<std::vector<double>> xs(span), ys(span);
  for (const LabeledStar& s : labels) {
    const int n = s.star.degree();
    if (n < config.min_degree || n > config.max_degree) continue;
    const NormalizationFrame frame = star_frame(s.star);
    const double inv = 1.0 / frame.scale;
    std::vector<double> ring(2 * n);
    for (int i = 0; i < n; ++i) {
      ring[2 * i] = (s.star.ring[i].x - frame.origin.x) * inv;
      ring[2 * i + 1] = (s.star.ring[i].y - frame.origin.y) * inv;
    }
    const Vec2 target = (s.label - frame.origin) * inv;
    auto& X = xs[n - config.min_degree];
    auto& Y = ys[n - config.min_degree];
    for (int rot = 0; rot < n; ++rot) {
      for (int i = 0; i < n; ++i) {
        const int j = (i + rot) % n;
        X.push_back(ring[2 * j]);
        X.push_back(ring[2 * j + 1]);
      }
      Y.push_back(target.x);
      Y.push_back(target.y);
    }
  }

  const int H = config.hidden;
  ad::Tape tape;
  for (int d = config.min_degree; d <= config.max_degree; ++d) {
    NnModel::DegreeNet& net = model.nets[d - config.min_degree];
    const std::vector<double>& X = xs[d - config.min_degree];
    const std::vector<double>& Y = ys[d - config.min_degree];
    const int cols = 2 * d;
    const int rows_total = static_cast<int>(Y.size()) / 2;
    if (rows_total == 0) continue;  // stays untrained, nn_step falls back

    Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(d)));
    auto glorot = [&rng](int r, int c) {
      ad::Tensor t(r, c);
      const double limit = std::sqrt(6.0 / (r + c));
      for (double& v : t.data) v = rng.uniform(-limit, limit);
      return t;
    };
    net.W1 = glorot(cols, H);
    net.b1 = ad::Tensor(1, H);
    net.W2 = glorot(H, H);
    net.b2 = ad::Tensor(1, H);
    net.W3 = glorot(H, 2);
    net.b3 = ad::Tensor(1, 2);

    std::vector<ad::Tensor*> ps{&net.W1, &net.b1, &net.W2,
                                &net.b2, &net.W3, &net.b3};
    ad::AdamState state;
    ad::AdamConfig adam;
    adam.lr = config.lr;

    for (int step = 0; step < config.epochs; ++step) {
      const int k = std::min(config.batch_rows, rows_total);
      const std::vector<int> pick = rng.sample_without_replacement(rows_total, k);
      ad::Tensor Xb(k, cols), Yb(k, 2);
      for (int r = 0; r < k; ++r) {
        std::copy(X.begin() + pick[r] * cols, X.begin() + (pick[r] + 1) * cols,
                  Xb.data.begin() + r * cols);
        Yb.data[2 * r] = Y[2 * pick[r]];
        Yb.data[2 * r + 1] = Y[2 * pick[r] + 1];
      }
      tape.reset();
      std::vector<int> ids;
      ids.reserve(ps.size());
      for (ad::Tensor* p : ps) ids.push_back(tape.leaf(*p, true));
      const int xc = tape.constant(Xb);
      const int yc = tape.constant(Yb);
      const int h1 = tape.relu(tape.add(tape.matmul(xc, ids[0]), ids[1]));
      const int h2 = tape.relu(tape.add(tape.matmul(h1, ids[2]), ids[3]));
      const int out = tape.add(tape.matmul(h2, ids[4]), ids[5]);
      const int mse = tape.mean(tape.square(tape.sub(out, yc)));
      tape.backward(mse);
      std::vector<ad::Tensor> grads;
      grads.reserve(ids.size());
      for (int id : ids) grads.push_back(tape.grad(id));
      ad::adam_step(ps, grads, state, adam);
    }
    net.trained = true;
  }
  return model;
}

Vec2 nn_step(const NnModel& model, const StarPolygon& star) {
  const NnModel::DegreeNet* net = model.net_for(star.degree());
  if (net == nullptr || !net->trained) return laplacian_step(star);

  const NormalizationFrame frame = star_frame(star);
  const int n = star.degree();
  const int H = model.hidden;
  const double inv = 1.0 / frame.scale;
  std::vector<double> x(2 * n);
  for (int i = 0; i < n; ++i) {
    x[2 * i] = (star.ring[i].x - frame.origin.x) * inv;
    x[2 * i + 1] = (star.ring[i].y - frame.origin.y) * inv;
  }
  const kernels::Backend& K = kernels::active();
  std::vector<double> h1(H), h2(H);
  K.matmul(x.data(), net->W1.data.data(), h1.data(), 1, 2 * n, H);
  K.add_rowvec(h1.data(), 1, H, net->b1.data.data());
  K.relu(h1.data(), h1.data(), H);
  K.matmul(h1.data(), net->W2.data.data(), h2.data(), 1, H, H);
  K.add_rowvec(h2.data(), 1, H, net->b2.data.data());
  K.relu(h2.data(), h2.data(), H);
  double out[2];
  K.matmul(h2.data(), net->W3.data.data(), out, 1, H, 2);
  out[0] += net->b3.data[0];
  out[1] += net->b3.data[1];
  return frame.origin + Vec2{out[0], out[1]} * frame.scale;
}

namespace {

constexpr const char* kNnFormat = "nnsmooth-v1";
const char* const kNnTensorNames[] = {"W1", "b1", "W2", "b2", "W3", "b3"};

nlohmann::ordered_json tensor_json(const ad::Tensor& t) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  char buf[40];
  for (double v : t.data) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    arr.push_back(buf);
  }
  return arr;
}

ad::Tensor parse_tensor(const nlohmann::json& j, const char* name, int rows,
                        int cols, const std::string& path) {
  if (!j.contains(name) || !j[name].is_array() ||
      static_cast<int>(j[name].size()) != rows * cols)
    throw Error(ErrorCode::CorruptFile,
                path + ": tensor '" + std::string(name) + "' missing or mis-sized");
  ad::Tensor t(rows, cols);
  int i = 0;
  for (const auto& cell : j[name]) {
    if (!cell.is_string())
      throw Error(ErrorCode::CorruptFile,
                  path + ": tensor '" + std::string(name) + "' cell type");
    const std::string s = cell.get<std::string>();
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || !std::isfinite(v))
      throw Error(ErrorCode::CorruptFile,
                  path + ": tensor '" + std::string(name) + "' value '" + s + "'");
    t.data[i++] = v;
  }
  return t;
}

}  // namespace

void save_nn_checkpoint(const NnModel& model, const std::string& path) {
  nlohmann::ordered_json j;
  j["format"] = kNnFormat;
  j["min_degree"] = model.min_degree;
  j["max_degree"] = model.max_degree;
  j["hidden"] = model.hidden;
  j["seed"] = model.seed;
  nlohmann::ordered_json nets = nlohmann::ordered_json::array();
  for (const NnModel::DegreeNet& net : model.nets) {
    nlohmann::ordered_json nj;
    nj["degree"] = net.degree;
    nj["trained"] = net.trained;
    if (net.trained) {
      const ad::Tensor* ts[] = {&net.W1, &net.b1, &net.W2,
                                &net.b2, &net.W3, &net.b3};
      for (size_t k = 0; k < 6; ++k) nj[kNnTensorNames[k]] = tensor_json(*ts[k]);
    }
    nets.push_back(std::move(nj));
  }
  j["nets"] = std::move(nets);
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

NnModel load_nn_checkpoint(const std::string& path) {
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
  if (j["format"] != kNnFormat)
    throw Error(ErrorCode::VersionMismatch,
                path + ": format '" + j["format"].get<std::string>() + "'");
  for (const char* key : {"min_degree", "max_degree", "hidden"})
    if (!j.contains(key) || !j[key].is_number_integer())
      throw Error(ErrorCode::CorruptFile, path + ": missing " + std::string(key));

  NnModel model;
  model.min_degree = j["min_degree"].get<int>();
  model.max_degree = j["max_degree"].get<int>();
  model.hidden = j["hidden"].get<int>();
  model.seed = j.value("seed", std::uint64_t{0});
  if (model.min_degree < 3 || model.max_degree < model.min_degree ||
      model.hidden < 1)
    throw Error(ErrorCode::CorruptFile, path + ": bad degree range or hidden");

  const int span = model.max_degree - model.min_degree + 1;
  if (!j.contains("nets") || !j["nets"].is_array() ||
      static_cast<int>(j["nets"].size()) != span)
    throw Error(ErrorCode::CorruptFile, path + ": nets array mis-sized");

  model.nets.resize(span);
  int at = 0;
  for (const auto& nj : j["nets"]) {
    NnModel::DegreeNet& net = model.nets[at];
    const int expect = model.min_degree + at;
    ++at;
    if (!nj.contains("degree") || !nj["degree"].is_number_integer() ||
        nj["degree"].get<int>() != expect)
      throw Error(ErrorCode::CorruptFile, path + ": net degree out of order");
    net.degree = expect;
    net.trained = nj.value("trained", false);
    if (!net.trained) continue;
    net.W1 = parse_tensor(nj, "W1", 2 * expect, model.hidden, path);
    net.b1 = parse_tensor(nj, "b1", 1, model.hidden, path);
    net.W2 = parse_tensor(nj, "W2", model.hidden, model.hidden, path);
    net.b2 = parse_tensor(nj, "b2", 1, model.hidden, path);
    net.W3 = parse_tensor(nj, "W3", model.hidden, 2, path);
    net.b3 = parse_tensor(nj, "b3", 1, 2, path);
  }
  return model;
}

}  // namespace meshsmith
